// wspkit: synthetic-corpus generation, relative-depth dataset construction,
// pre-training, 3D fine-tuning, evaluation, and gradient checking.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>

#include "wspkit/anno.hpp"
#include "wspkit/config.hpp"
#include "wspkit/errors.hpp"
#include "wspkit/io.hpp"
#include "wspkit/metrics.hpp"
#include "wspkit/nn/checkpoint.hpp"
#include "wspkit/nn/gradcheck.hpp"
#include "wspkit/pairs.hpp"
#include "wspkit/pose3d.hpp"
#include "wspkit/synth.hpp"
#include "wspkit/threading.hpp"
#include "wspkit/wsp.hpp"

namespace fs = std::filesystem;
using namespace wspkit;

namespace {

const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "seed", "dtype",
      "model.joints", "model.feature_dim", "model.selected_joints", "model.heatmap_sigma",
      "model.alpha", "model.input_size", "model.heatmap_size", "model.rd_hidden",
      "model.depth_bins", "model.window_x_mm", "model.window_y_mm", "model.window_z_mm",
      "pretrain.epochs", "pretrain.batch_size", "pretrain.lr", "pretrain.momentum",
      "pretrain.lr_decay", "pretrain.lr_decay_epoch1", "pretrain.lr_decay_epoch2",
      "pretrain.target_auc",
      "finetune.epochs", "finetune.batch_size", "finetune.lr", "finetune.momentum",
      "finetune.lr_decay", "finetune.lr_decay_epoch1", "finetune.lr_decay_epoch2",
      "pairs.pairs_per_image", "pairs.crop_padding_ratio", "pairs.tie_epsilon",
      "synth.count", "synth.resolution", "synth.min_persons", "synth.max_persons",
      "synth.depth_min_mm", "synth.depth_max_mm", "synth.height_min_mm", "synth.height_max_mm",
      "synth.pitch_rad", "synth.standing", "synth.tie_injection", "synth.focal",
      "synth.cam_height_mm",
  };
  return keys;
}

ConfigMap load_config(const std::string& path) {
  ConfigMap cfg = path.empty() ? ConfigMap{} : ConfigMap::parse_file(path);
  cfg.require_known(known_config_keys());
  return cfg;
}

WspConfig wsp_config_from(const ConfigMap& cfg) {
  WspConfig m;
  m.joints = cfg.get_int("model.joints", m.joints);
  m.feature_dim = cfg.get_int("model.feature_dim", m.feature_dim);
  m.selected_joints = cfg.get_int("model.selected_joints", m.selected_joints);
  m.heatmap_sigma = cfg.get_double("model.heatmap_sigma", m.heatmap_sigma);
  m.alpha = cfg.get_double("model.alpha", m.alpha);
  m.input_size = cfg.get_int("model.input_size", m.input_size);
  m.heatmap_size = cfg.get_int("model.heatmap_size", m.heatmap_size);
  m.rd_hidden = cfg.get_int("model.rd_hidden", m.rd_hidden);
  m.validate();
  return m;
}

Pose3dConfig pose3d_config_from(const ConfigMap& cfg) {
  Pose3dConfig p;
  p.base = wsp_config_from(cfg);
  p.depth_bins = cfg.get_int("model.depth_bins", p.depth_bins);
  p.calib.window_x_mm = cfg.get_double("model.window_x_mm", p.calib.window_x_mm);
  p.calib.window_y_mm = cfg.get_double("model.window_y_mm", p.calib.window_y_mm);
  p.calib.window_z_mm = cfg.get_double("model.window_z_mm", p.calib.window_z_mm);
  p.validate();
  return p;
}

SceneConfig scene_config_from(const ConfigMap& cfg) {
  SceneConfig s;
  s.min_persons = cfg.get_int("synth.min_persons", s.min_persons);
  s.max_persons = cfg.get_int("synth.max_persons", s.max_persons);
  s.depth_min_mm = cfg.get_double("synth.depth_min_mm", s.depth_min_mm);
  s.depth_max_mm = cfg.get_double("synth.depth_max_mm", s.depth_max_mm);
  s.height_min_mm = cfg.get_double("synth.height_min_mm", s.height_min_mm);
  s.height_max_mm = cfg.get_double("synth.height_max_mm", s.height_max_mm);
  s.camera.pitch_rad = cfg.get_double("synth.pitch_rad", s.camera.pitch_rad);
  s.standing = cfg.get_bool("synth.standing", s.standing);
  s.tie_injection = cfg.get_double("synth.tie_injection", s.tie_injection);
  s.camera.focal = cfg.get_double("synth.focal", s.camera.focal);
  s.camera.height_mm = cfg.get_double("synth.cam_height_mm", s.camera.height_mm);
  return s;
}

void echo_resolved_config(const ConfigMap& cfg, const fs::path& out_file) {
  fs::create_directories(out_file.parent_path().empty() ? "." : out_file.parent_path());
  atomic_write_file(out_file, cfg.serialize());
}

// Fills every key the run resolved so the echo reproduces the run exactly.
void fill_defaults(ConfigMap& cfg) {
  auto put = [&](const std::string& key, const std::string& value) {
    if (!cfg.has(key)) cfg.set(key, value);
  };
  auto putd = [&](const std::string& key, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    put(key, buf);
  };
  put("dtype", "f64");
  WspConfig m;
  put("model.joints", std::to_string(m.joints));
  put("model.feature_dim", std::to_string(m.feature_dim));
  put("model.selected_joints", std::to_string(m.selected_joints));
  putd("model.heatmap_sigma", m.heatmap_sigma);
  putd("model.alpha", m.alpha);
  put("model.input_size", std::to_string(m.input_size));
  put("model.heatmap_size", std::to_string(m.heatmap_size));
  put("model.rd_hidden", std::to_string(m.rd_hidden));
  Pose3dConfig p;
  put("model.depth_bins", std::to_string(p.depth_bins));
  putd("model.window_x_mm", p.calib.window_x_mm);
  putd("model.window_y_mm", p.calib.window_y_mm);
  putd("model.window_z_mm", p.calib.window_z_mm);
  PretrainOptions po;
  put("pretrain.epochs", std::to_string(po.epochs));
  put("pretrain.batch_size", std::to_string(po.batch_size));
  putd("pretrain.lr", po.lr);
  putd("pretrain.momentum", po.momentum);
  putd("pretrain.lr_decay", po.lr_decay);
  put("pretrain.lr_decay_epoch1", std::to_string(po.lr_decay_epochs[0]));
  put("pretrain.lr_decay_epoch2", std::to_string(po.lr_decay_epochs[1]));
  putd("pretrain.target_auc", po.target_auc);
  FinetuneOptions fo;
  put("finetune.epochs", std::to_string(fo.epochs));
  put("finetune.batch_size", std::to_string(fo.batch_size));
  putd("finetune.lr", fo.lr);
  putd("finetune.momentum", fo.momentum);
  putd("finetune.lr_decay", fo.lr_decay);
  put("finetune.lr_decay_epoch1", std::to_string(fo.lr_decay_epochs[0]));
  put("finetune.lr_decay_epoch2", std::to_string(fo.lr_decay_epochs[1]));
}

int resolve_seed(const ConfigMap& cfg, std::optional<std::uint64_t> flag) {
  return static_cast<int>(flag ? *flag : cfg.get_u64("seed", 7));
}

DType dtype_from(const ConfigMap& cfg) {
  const std::string s = cfg.get_string("dtype", "f64");
  if (s == "f64") return DType::f64;
  if (s == "f32") return DType::f32;
  throw DataError("dtype must be f32 or f64, got " + s);
}

struct PretrainArgs {
  std::string pairs, val_pairs, images, val_images, out, config, metrics_out;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<double> target_auc;
};

int cmd_pretrain(const PretrainArgs& a) {
  ConfigMap cfg = load_config(a.config);
  if (a.seed) cfg.set("seed", std::to_string(*a.seed));
  if (a.epochs) cfg.set("pretrain.epochs", std::to_string(*a.epochs));
  if (a.lr) cfg.set("pretrain.lr", std::to_string(*a.lr));
  if (a.target_auc) cfg.set("pretrain.target_auc", std::to_string(*a.target_auc));

  const std::uint64_t seed = cfg.get_u64("seed", 7);
  WspConfig model_cfg = wsp_config_from(cfg);
  PretrainOptions opt;
  opt.epochs = cfg.get_int("pretrain.epochs", opt.epochs);
  opt.batch_size = cfg.get_int("pretrain.batch_size", opt.batch_size);
  opt.lr = cfg.get_double("pretrain.lr", opt.lr);
  opt.momentum = cfg.get_double("pretrain.momentum", opt.momentum);
  opt.lr_decay = cfg.get_double("pretrain.lr_decay", opt.lr_decay);
  opt.lr_decay_epochs = {cfg.get_int("pretrain.lr_decay_epoch1", opt.lr_decay_epochs[0]),
                         cfg.get_int("pretrain.lr_decay_epoch2", opt.lr_decay_epochs[1])};
  opt.target_auc = cfg.get_double("pretrain.target_auc", opt.target_auc);
  opt.seed = seed;

  auto train_pairs = read_pair_manifest(a.pairs);
  auto val_pairs = read_pair_manifest(a.val_pairs);
  std::fprintf(stderr, "loading %zu train / %zu val pairs\n", train_pairs.size(),
               val_pairs.size());
  auto train = load_wsp_samples(train_pairs, a.images, model_cfg);
  auto val = load_wsp_samples(val_pairs, a.val_images.empty() ? a.images : a.val_images,
                              model_cfg);

  WspModel model(model_cfg, seed);
  PretrainResult result = train_pretrain(model, train, val, opt);
  for (const auto& m : result.log)
    std::fprintf(stderr, "epoch %d loss %.6f hm %.6f rd %.6f val_auc %.4f val_acc %.4f\n",
                 m.epoch, m.loss, m.loss_hm, m.loss_rd, m.val_auc, m.val_acc);
  if (result.diverged) {
    std::fprintf(stderr, "training diverged; kept the last finite checkpoint\n");
  }

  nn::save_checkpoint(a.out, model.params(), dtype_from(cfg));
  std::string log;
  for (const auto& m : result.log) log += epoch_metrics_record(m) + "\n";
  const fs::path metrics_path =
      a.metrics_out.empty() ? fs::path(a.out + ".metrics.jsonl") : fs::path(a.metrics_out);
  atomic_write_file(metrics_path, log);

  ConfigMap resolved = cfg;
  fill_defaults(resolved);
  resolved.set("seed", std::to_string(seed));
  echo_resolved_config(resolved, a.out + ".cfg");
  return result.diverged ? 3 : 0;
}

struct FinetuneArgs {
  std::string checkpoint, data, val_data, out, config, metrics_out;
  bool from_scratch = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<double> lr;
};

int cmd_finetune(const FinetuneArgs& a) {
  ConfigMap cfg = load_config(a.config);
  if (a.seed) cfg.set("seed", std::to_string(*a.seed));
  if (a.epochs) cfg.set("finetune.epochs", std::to_string(*a.epochs));
  if (a.lr) cfg.set("finetune.lr", std::to_string(*a.lr));

  const std::uint64_t seed = cfg.get_u64("seed", 7);
  Pose3dConfig model_cfg = pose3d_config_from(cfg);
  FinetuneOptions opt;
  opt.epochs = cfg.get_int("finetune.epochs", opt.epochs);
  opt.batch_size = cfg.get_int("finetune.batch_size", opt.batch_size);
  opt.lr = cfg.get_double("finetune.lr", opt.lr);
  opt.momentum = cfg.get_double("finetune.momentum", opt.momentum);
  opt.lr_decay = cfg.get_double("finetune.lr_decay", opt.lr_decay);
  opt.lr_decay_epochs = {cfg.get_int("finetune.lr_decay_epoch1", opt.lr_decay_epochs[0]),
                         cfg.get_int("finetune.lr_decay_epoch2", opt.lr_decay_epochs[1])};
  opt.seed = seed;

  Pose3dModel model(model_cfg, seed);
  if (!a.from_scratch) {
    if (a.checkpoint.empty())
      throw UsageError("finetune needs --checkpoint unless --from-scratch is given");
    model.load_backbone(nn::load_checkpoint(a.checkpoint));
  }

  auto train = load_pose3d_samples(a.data, model_cfg);
  auto val = load_pose3d_samples(a.val_data.empty() ? a.data : a.val_data, model_cfg);
  std::fprintf(stderr, "loaded %zu train / %zu val crops\n", train.size(), val.size());

  FinetuneResult result = finetune(model, train, val, opt);
  for (const auto& m : result.log)
    std::fprintf(stderr, "epoch %d loss %.3f val_mpjpe %.2f (x %.2f y %.2f z %.2f)\n", m.epoch,
                 m.loss, m.val_mpjpe, m.val_x, m.val_y, m.val_z);

  nn::save_checkpoint(a.out, model.params(), dtype_from(cfg));
  std::string log;
  for (const auto& m : result.log) log += epoch3d_metrics_record(m) + "\n";
  const fs::path metrics_path =
      a.metrics_out.empty() ? fs::path(a.out + ".metrics.jsonl") : fs::path(a.metrics_out);
  atomic_write_file(metrics_path, log);

  ConfigMap resolved = cfg;
  fill_defaults(resolved);
  resolved.set("seed", std::to_string(seed));
  echo_resolved_config(resolved, a.out + ".cfg");
  return result.diverged ? 3 : 0;
}

struct BuildDatasetArgs {
  std::string input, out, manifest_out, input_format = "manifest";
  std::uint64_t seed = 0;
  int pairs_per_image = 2;
  double crop_padding = 0.2, tie_epsilon = 0.0;
  std::string images_prefix;
};

int cmd_build_dataset(const BuildDatasetArgs& a) {
  std::vector<ImageAnnotation> images;
  if (a.input_format == "coco") {
    std::vector<std::string> rejects;
    auto raw = parse_annotation_doc(read_file(a.input), coco_skeleton(), &rejects);
    for (const auto& r : rejects) std::fprintf(stderr, "rejected: %s\n", r.c_str());
    for (auto& img : raw) {
      ImageAnnotation canon = img;
      canon.persons.clear();
      for (const auto& p : img.persons) {
        try {
          canon.persons.push_back(remap_skeleton(p, coco_to_canonical(), canonical_skeleton()));
        } catch (const DataError& e) {
          std::fprintf(stderr, "rejected: %s\n", e.what());
        }
      }
      images.push_back(std::move(canon));
    }
  } else if (a.input_format == "manifest") {
    images = read_manifest(a.input);
  } else {
    throw UsageError("--input-format must be manifest or coco");
  }

  auto eligible = filter_eligible(std::move(images), canonical_skeleton());
  std::fprintf(stderr, "eligible images: %zu\n", eligible.size());
  if (!a.manifest_out.empty()) write_manifest(a.manifest_out, eligible);

  PairBuildConfig pcfg;
  pcfg.pairs_per_image = a.pairs_per_image;
  pcfg.rng_seed = a.seed;
  pcfg.crop_padding_ratio = a.crop_padding;
  pcfg.tie_epsilon = a.tie_epsilon;

  std::vector<PairSample> pairs;
  for (const auto& img : eligible) {
    auto ref = a.images_prefix.empty() ? img.file_name : a.images_prefix + "/" + img.file_name;
    auto built = build_pairs(img, pcfg, canonical_skeleton(), ref);
    pairs.insert(pairs.end(), built.begin(), built.end());
  }
  write_pair_manifest(a.out, pairs);
  std::fprintf(stderr, "wrote %zu pairs to %s\n", pairs.size(), a.out.c_str());
  return 0;
}

struct SynthGenArgs {
  std::string out, config;
  int count = 100;
  std::uint64_t seed = 0;
  int resolution = 128;
  std::optional<double> pitch;
  bool floating = false;
  std::optional<double> tie_injection;
};

int cmd_synth_gen(const SynthGenArgs& a) {
  ConfigMap cfg = load_config(a.config);
  CorpusConfig corpus;
  corpus.scene = scene_config_from(cfg);
  corpus.count = cfg.get_int("synth.count", a.count);
  corpus.resolution = cfg.get_int("synth.resolution", a.resolution);
  corpus.seed = a.seed;
  if (a.pitch) corpus.scene.camera.pitch_rad = *a.pitch;
  if (a.floating) corpus.scene.standing = false;
  if (a.tie_injection) corpus.scene.tie_injection = *a.tie_injection;

  write_corpus(a.out, corpus);
  std::fprintf(stderr, "wrote %d scenes under %s\n", corpus.count, a.out.c_str());

  ConfigMap resolved = cfg;
  resolved.set("synth.count", std::to_string(corpus.count));
  resolved.set("synth.resolution", std::to_string(corpus.resolution));
  resolved.set("seed", std::to_string(corpus.seed));
  echo_resolved_config(resolved, fs::path(a.out) / "resolved.cfg");
  return 0;
}

struct EvalRdArgs {
  std::string model, pairs, images, out, config;
  bool protocol1 = true;
  bool protocol2 = true;
  std::vector<double> thresholds = {1.0, 0.5, 0.3, 0.1};
  std::optional<std::uint64_t> seed;
};

int cmd_eval_rd(const EvalRdArgs& a) {
  ConfigMap cfg = load_config(a.config.empty() && fs::exists(a.model + ".cfg") ? a.model + ".cfg"
                                                                               : a.config);
  WspConfig model_cfg = wsp_config_from(cfg);
  WspModel model(model_cfg, resolve_seed(cfg, a.seed));
  auto ckpt = nn::load_checkpoint(a.model);
  nn::restore_prefix(model.params(), ckpt, "");

  auto pair_list = read_pair_manifest(a.pairs);
  std::vector<RdEvalEntry> entries;
  if (a.protocol1) {
    auto samples = load_wsp_samples(pair_list, a.images, model_cfg, false);
    auto scores = score_samples(model, samples);
    for (std::size_t i = 0; i < samples.size(); ++i)
      entries.push_back({scores[i], samples[i].label, samples[i].delta_s, false});
  }
  if (a.protocol2) {
    auto masked = load_wsp_samples(pair_list, a.images, model_cfg, true);
    auto scores = score_samples(model, masked);
    for (std::size_t i = 0; i < masked.size(); ++i)
      entries.push_back({scores[i], masked[i].label, masked[i].delta_s, true});
  }

  RdReport report = rd_protocol_report(entries, a.thresholds);
  std::fputs(report.to_table().c_str(), stdout);
  if (!a.out.empty()) {
    std::string lines;
    for (const auto& rec : report.to_records()) lines += rec + "\n";
    atomic_write_file(a.out, lines);
  }
  return 0;
}

struct Eval3dArgs {
  std::string model, data, out, config;
  std::optional<std::uint64_t> seed;
};

int cmd_eval_3d(const Eval3dArgs& a) {
  ConfigMap cfg = load_config(a.config.empty() && fs::exists(a.model + ".cfg") ? a.model + ".cfg"
                                                                               : a.config);
  Pose3dConfig model_cfg = pose3d_config_from(cfg);
  Pose3dModel model(model_cfg, resolve_seed(cfg, a.seed));
  nn::restore_prefix(model.params(), nn::load_checkpoint(a.model), "");

  auto samples = load_pose3d_samples(a.data, model_cfg);
  auto preds = predict_all(model, samples);
  std::vector<Pose3D> gt;
  for (const auto& s : samples) gt.push_back(s.gt_mm);

  MpjpeResult err = mpjpe(preds, gt);
  const double pa = pa_mpjpe(preds, gt);
  std::string table;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "samples %zu\nMPJPE %.2f mm (x %.2f, y %.2f, z %.2f)\nPA-MPJPE %.2f mm\n",
                samples.size(), err.total, err.x, err.y, err.z, pa);
  table += buf;
  table += "3DPCK:";
  for (double t : pck3d_report_thresholds()) {
    std::snprintf(buf, sizeof(buf), "  %.0fmm %.2f%%", t, pck3d(preds, gt, t));
    table += buf;
  }
  table += "\n";
  std::fputs(table.c_str(), stdout);
  if (!a.out.empty()) atomic_write_file(a.out, table);
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, double eps, double rtol, double atol) {
  WspConfig cfg;
  cfg.joints = 5;
  cfg.feature_dim = 8;
  cfg.selected_joints = 2;
  cfg.input_size = 16;
  cfg.heatmap_size = 8;
  cfg.rd_hidden = 4;
  cfg.backbone_channels = {4, 8};

  WspModel model(cfg, seed);
  Rng rng(derive_seed(seed, 1));
  Tensor input({1, std::size_t(cfg.input_size), std::size_t(cfg.input_size)});
  for (std::size_t i = 0; i < input.size(); ++i) input[i] = rng.uniform();
  PersonInstance a, b;
  for (PersonInstance* p : {&a, &b}) {
    p->joints.resize(cfg.joints);
    p->visibility.assign(cfg.joints, Visibility::visible);
  }
  for (auto& xy : a.joints) xy = {rng.uniform(1.0, 8.0), rng.uniform(1.0, 15.0)};
  for (auto& xy : b.joints) xy = {rng.uniform(8.0, 15.0), rng.uniform(1.0, 15.0)};
  a.bbox = {1, 1, 7, 14};
  b.bbox = {8, 1, 7, 14};
  GtHeatmaps gt = render_gt_heatmaps({a, b}, cfg);
  const std::vector<int> selected = {0, 3};

  auto loss_only = [&]() { return model.loss_value(input, a, b, selected, gt.merged, 1); };
  auto loss_and_grads = [&]() {
    auto fwd = model.forward_pair(input, a, b, selected);
    return model.loss_and_backward(fwd, gt.merged, 1, 1.0).total;
  };
  auto report = nn::grad_check_model(model.params(), loss_only, loss_and_grads, eps, rtol, atol);
  std::fputs(report.to_string().c_str(), stdout);

  // Fine-tune loss at a non-kink point.
  Pose3dConfig p3;
  p3.base = cfg;
  p3.depth_bins = 4;
  Pose3dModel pose_model(p3, seed + 1);
  Pose3D gt3;
  gt3.valid.assign(cfg.joints, true);
  for (int j = 0; j < cfg.joints; ++j)
    gt3.joints.push_back({rng.uniform(-300, 300), rng.uniform(-300, 300), rng.uniform(-300, 300)});
  auto loss3_only = [&]() { return pose_model.loss_value(input, gt3); };
  auto loss3_grads = [&]() { return pose_model.train_sample(input, gt3, 1.0); };
  auto report3 =
      nn::grad_check_model(pose_model.params(), loss3_only, loss3_grads, eps, rtol, atol);
  std::fputs(report3.to_string().c_str(), stdout);

  return report.pass && report3.pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_cap();
  CLI::App app{"weak-supervision pose kit"};
  app.require_subcommand(1);

  PretrainArgs pre;
  auto* pre_cmd = app.add_subcommand("pretrain", "train the relative-depth network");
  pre_cmd->add_option("--pairs", pre.pairs, "training pair manifest")->required();
  pre_cmd->add_option("--val-pairs", pre.val_pairs, "validation pair manifest")->required();
  pre_cmd->add_option("--images", pre.images, "image root directory")->required();
  pre_cmd->add_option("--val-images", pre.val_images,
                      "image root for validation pairs (defaults to --images)");
  pre_cmd->add_option("--out", pre.out, "output checkpoint path")->required();
  pre_cmd->add_option("--config", pre.config, "config file");
  pre_cmd->add_option("--metrics-out", pre.metrics_out, "metrics log path");
  pre_cmd->add_option("--seed", pre.seed, "seed (overrides config)");
  pre_cmd->add_option("--epochs", pre.epochs, "epochs (overrides config)");
  pre_cmd->add_option("--lr", pre.lr, "learning rate (overrides config)");
  pre_cmd->add_option("--target-auc", pre.target_auc, "early-stop AUC target");

  FinetuneArgs fin;
  auto* fin_cmd = app.add_subcommand("finetune", "fine-tune for 3D pose regression");
  fin_cmd->add_option("--checkpoint", fin.checkpoint, "pre-trained checkpoint");
  fin_cmd->add_option("--data", fin.data, "training corpus directory")->required();
  fin_cmd->add_option("--val-data", fin.val_data, "validation corpus directory");
  fin_cmd->add_option("--out", fin.out, "output model path")->required();
  fin_cmd->add_option("--config", fin.config, "config file");
  fin_cmd->add_option("--metrics-out", fin.metrics_out, "metrics log path");
  fin_cmd->add_flag("--from-scratch", fin.from_scratch, "skip checkpoint initialization");
  fin_cmd->add_option("--seed", fin.seed, "seed (overrides config)");
  fin_cmd->add_option("--epochs", fin.epochs, "epochs (overrides config)");
  fin_cmd->add_option("--lr", fin.lr, "learning rate (overrides config)");

  BuildDatasetArgs bld;
  auto* bld_cmd = app.add_subcommand("build-dataset", "build pair samples from annotations");
  bld_cmd->add_option("--input", bld.input, "canonical manifest or COCO json")->required();
  bld_cmd->add_option("--out", bld.out, "output pair manifest")->required();
  bld_cmd->add_option("--seed", bld.seed, "sampling seed");
  bld_cmd->add_option("--pairs-per-image", bld.pairs_per_image, "pairs per image");
  bld_cmd->add_option("--input-format", bld.input_format, "manifest|coco");
  bld_cmd->add_option("--manifest-out", bld.manifest_out, "write the filtered manifest");
  bld_cmd->add_option("--crop-padding", bld.crop_padding, "crop padding ratio");
  bld_cmd->add_option("--tie-epsilon", bld.tie_epsilon, "drop pairs with |anchor gap| <= eps");
  bld_cmd->add_option("--images-prefix", bld.images_prefix, "prefix for image refs");

  SynthGenArgs syn;
  auto* syn_cmd = app.add_subcommand("synth-gen", "generate a synthetic corpus");
  syn_cmd->add_option("--out", syn.out, "output directory")->required();
  syn_cmd->add_option("--count", syn.count, "scene count");
  syn_cmd->add_option("--seed", syn.seed, "corpus seed");
  syn_cmd->add_option("--resolution", syn.resolution, "render resolution");
  syn_cmd->add_option("--config", syn.config, "config file");
  syn_cmd->add_option("--pitch", syn.pitch, "camera pitch in radians");
  syn_cmd->add_flag("--floating", syn.floating, "lift persons off the ground plane");
  syn_cmd->add_option("--tie-injection", syn.tie_injection, "probability of exact depth ties");

  EvalRdArgs erd;
  auto* erd_cmd = app.add_subcommand("eval-rd", "relative-depth protocol report");
  erd_cmd->add_option("--model", erd.model, "checkpoint")->required();
  erd_cmd->add_option("--pairs", erd.pairs, "test pair manifest")->required();
  erd_cmd->add_option("--images", erd.images, "image root directory")->required();
  erd_cmd->add_option("--out", erd.out, "report records path");
  erd_cmd->add_option("--config", erd.config, "config file");
  erd_cmd->add_option("--thresholds", erd.thresholds, "delta-S thresholds");
  erd_cmd->add_flag("!--no-protocol1", erd.protocol1, "skip the plain protocol");
  erd_cmd->add_flag("!--no-protocol2", erd.protocol2, "skip the ankle-masked protocol");
  erd_cmd->add_option("--seed", erd.seed, "seed for model construction");

  Eval3dArgs e3d;
  auto* e3d_cmd = app.add_subcommand("eval-3d", "3D pose metric report");
  e3d_cmd->add_option("--model", e3d.model, "fine-tuned model")->required();
  e3d_cmd->add_option("--data", e3d.data, "corpus directory")->required();
  e3d_cmd->add_option("--out", e3d.out, "report path");
  e3d_cmd->add_option("--config", e3d.config, "config file");
  e3d_cmd->add_option("--seed", e3d.seed, "seed for model construction");

  std::uint64_t gc_seed = 1;
  double gc_eps = 1e-5, gc_rtol = 1e-4, gc_atol = 1e-7;
  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gc_cmd->add_option("--seed", gc_seed, "seed");
  gc_cmd->add_option("--eps", gc_eps, "finite-difference step");
  gc_cmd->add_option("--rtol", gc_rtol, "relative tolerance");
  gc_cmd->add_option("--atol", gc_atol, "absolute tolerance");

  try {
    app.parse(argc, argv);
    if (pre_cmd->parsed()) return cmd_pretrain(pre);
    if (fin_cmd->parsed()) return cmd_finetune(fin);
    if (bld_cmd->parsed()) return cmd_build_dataset(bld);
    if (syn_cmd->parsed()) return cmd_synth_gen(syn);
    if (erd_cmd->parsed()) return cmd_eval_rd(erd);
    if (e3d_cmd->parsed()) return cmd_eval_3d(e3d);
    if (gc_cmd->parsed()) return cmd_gradcheck(gc_seed, gc_eps, gc_rtol, gc_atol);
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
