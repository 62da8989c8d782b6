#include "wspkit/wsp.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "wspkit/errors.hpp"
#include "wspkit/image.hpp"
#include "wspkit/io.hpp"
#include "wspkit/metrics.hpp"

namespace wspkit {

void WspConfig::validate() const {
  if (joints < 2) throw DataError("WspConfig: joints must be >= 2");
  if (selected_joints < 1 || selected_joints >= joints)
    throw DataError("WspConfig: selected_joints must satisfy 1 <= N < J");
  if (alpha <= 0.0) throw DataError("WspConfig: alpha must be positive");
  if (heatmap_sigma <= 0.0) throw DataError("WspConfig: heatmap_sigma must be positive");
  if (input_size <= 0 || heatmap_size <= 0 || input_size % heatmap_size != 0)
    throw DataError("WspConfig: heatmap_size must divide input_size");
  if (backbone_channels.empty()) throw DataError("WspConfig: backbone_channels empty");
  const int ratio = input_size / heatmap_size;
  if ((ratio & (ratio - 1)) != 0) throw DataError("WspConfig: input/heatmap must be a power of 2");
  if (deconv_count() < 0)
    throw DataError("WspConfig: backbone downsamples less than the heatmap ratio");
  if (input_size % (1 << backbone_channels.size()) != 0)
    throw DataError("WspConfig: input_size not divisible by the backbone stride");
}

int WspConfig::deconv_count() const {
  int ratio = input_size / heatmap_size;
  int log2_ratio = 0;
  while ((1 << log2_ratio) < ratio) ++log2_ratio;
  return static_cast<int>(backbone_channels.size()) - log2_ratio;
}

GtHeatmaps render_gt_heatmaps(const std::vector<PersonInstance>& persons, const WspConfig& cfg) {
  const std::size_t j = cfg.joints, hm = cfg.heatmap_size;
  const double stride = cfg.heatmap_stride();
  const double inv_two_sigma2 = 1.0 / (2.0 * cfg.heatmap_sigma * cfg.heatmap_sigma);

  GtHeatmaps out;
  out.merged = Tensor({j, hm, hm});
  for (const auto& person : persons) {
    if (person.joints.size() != j)
      throw DataError("render_gt_heatmaps: person joint count does not match config");
    Tensor stack({j, hm, hm});
    for (std::size_t k = 0; k < j; ++k) {
      if (!person.annotated(static_cast<int>(k))) continue;  // absent -> zero channel
      const double hx = person.joints[k][0] / stride;
      const double hy = person.joints[k][1] / stride;
      for (std::size_t y = 0; y < hm; ++y)
        for (std::size_t x = 0; x < hm; ++x) {
          const double dx = static_cast<double>(x) - hx;
          const double dy = static_cast<double>(y) - hy;
          const double v = std::exp(-(dx * dx + dy * dy) * inv_two_sigma2);
          stack.at3(k, y, x) = v;
          if (v > out.merged.at3(k, y, x)) out.merged.at3(k, y, x) = v;
        }
    }
    out.per_person.push_back(std::move(stack));
  }
  return out;
}

Tensor masked_keypoint_pooling(const Tensor& fd, const Tensor& m,
                               const std::array<int, 4>& bbox_hm) {
  const std::size_t d = fd.extent(0), h = fd.extent(1), w = fd.extent(2);
  const std::size_t j = m.extent(0);
  if (m.extent(1) != h || m.extent(2) != w)
    throw DataError("masked_keypoint_pooling: feature/heatmap spatial mismatch");
  const auto [bx, by, bw, bh] = bbox_hm;
  if (bw <= 0 || bh <= 0 || bx < 0 || by < 0 || bx + bw > static_cast<int>(w) ||
      by + bh > static_cast<int>(h))
    throw DataError("masked_keypoint_pooling: empty bbox/heatmap intersection");
  const double inv_area = 1.0 / (static_cast<double>(bw) * static_cast<double>(bh));

  Tensor pooled({j, d});
  for (std::size_t jj = 0; jj < j; ++jj)
    for (std::size_t dd = 0; dd < d; ++dd) {
      double acc = 0.0;
      for (int y = by; y < by + bh; ++y)
        for (int x = bx; x < bx + bw; ++x) acc += fd.at3(dd, y, x) * m.at3(jj, y, x);
      pooled.at2(jj, dd) = acc * inv_area;
    }
  return pooled;
}

void masked_keypoint_pooling_backward(const Tensor& fd, const Tensor& m,
                                      const std::array<int, 4>& bbox_hm, const Tensor& dpooled,
                                      Tensor& dfd, Tensor& dm) {
  const std::size_t d = fd.extent(0);
  const std::size_t j = m.extent(0);
  const auto [bx, by, bw, bh] = bbox_hm;
  const double inv_area = 1.0 / (static_cast<double>(bw) * static_cast<double>(bh));
  for (std::size_t jj = 0; jj < j; ++jj)
    for (std::size_t dd = 0; dd < d; ++dd) {
      const double g = dpooled.at2(jj, dd) * inv_area;
      if (g == 0.0) continue;
      for (int y = by; y < by + bh; ++y)
        for (int x = bx; x < bx + bw; ++x) {
          dfd.at3(dd, y, x) += g * m.at3(jj, y, x);
          dm.at3(jj, y, x) += g * fd.at3(dd, y, x);
        }
    }
}

std::vector<int> select_keypoints(int joints, int n, Rng& rng) {
  if (n >= joints) throw DataError("select_keypoints: N must be < J");
  if (n < 1) throw DataError("select_keypoints: N must be >= 1");
  auto picked = rng.sample_without_replacement(static_cast<std::size_t>(joints),
                                               static_cast<std::size_t>(n));
  std::vector<int> out(picked.size());
  for (std::size_t i = 0; i < picked.size(); ++i) out[i] = static_cast<int>(picked[i]);
  return out;
}

PretrainLossParts pretrain_loss(const Tensor& pred_hm, const Tensor& gt_hm,
                                const std::vector<double>& pred_rd, int gt_rd, double alpha,
                                double grad_scale, Tensor* d_heatmaps,
                                std::vector<double>* d_probs, std::size_t* clamp_events) {
  if (!pred_hm.same_shape(gt_hm))
    throw DataError("pretrain_loss: heatmap shape mismatch " + shape_string(pred_hm.shape()) +
                    " vs " + shape_string(gt_hm.shape()));
  if (pred_rd.empty()) throw DataError("pretrain_loss: no relative-depth predictions");

  PretrainLossParts parts;
  // Squared L2 norm of each joint channel's residual, averaged over channels.
  const double inv_j = 1.0 / static_cast<double>(pred_hm.extent(0));
  if (d_heatmaps && !d_heatmaps->same_shape(pred_hm)) *d_heatmaps = Tensor(pred_hm.shape());
  for (std::size_t i = 0; i < pred_hm.size(); ++i) {
    const double diff = pred_hm[i] - gt_hm[i];
    parts.hm += diff * diff * inv_j;
    if (d_heatmaps) (*d_heatmaps)[i] = 2.0 * diff * inv_j * grad_scale;
  }

  constexpr double kClamp = 1e-12;
  const double y = static_cast<double>(gt_rd);
  const double inv_n = 1.0 / static_cast<double>(pred_rd.size());
  if (d_probs) d_probs->assign(pred_rd.size(), 0.0);
  for (std::size_t k = 0; k < pred_rd.size(); ++k) {
    double p = pred_rd[k];
    if (p < 0.0 || p > 1.0)
      throw DataError("pretrain_loss: probability outside [0,1]");
    if (p < kClamp || p > 1.0 - kClamp) {
      p = std::clamp(p, kClamp, 1.0 - kClamp);
      if (clamp_events) ++*clamp_events;
    }
    parts.rd += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p)) * inv_n;
    if (d_probs) (*d_probs)[k] = alpha * grad_scale * inv_n * (p - y) / (p * (1.0 - p));
  }

  parts.total = parts.hm + alpha * parts.rd;
  return parts;
}

nn::Network build_wsp_trunk(const WspConfig& cfg) {
  nn::Network net;
  int c = 1;
  for (std::size_t i = 0; i < cfg.backbone_channels.size(); ++i) {
    net.push_back(nn::conv2d("backbone.conv" + std::to_string(i), c, cfg.backbone_channels[i],
                             3, 2, 1));
    net.push_back(nn::relu());
    c = cfg.backbone_channels[i];
  }
  for (int i = 0; i < cfg.deconv_count(); ++i) {
    net.push_back(
        nn::transposed_conv2d("backbone.deconv" + std::to_string(i), c, cfg.feature_dim, 4, 2, 1));
    net.push_back(nn::relu());
    c = cfg.feature_dim;
  }
  return net;
}

WspModel::WspModel(WspConfig cfg, std::uint64_t init_seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  trunk_ = build_wsp_trunk(cfg_);
  hm_head_ = {nn::conv2d("hm_head.conv", cfg_.feature_dim, cfg_.joints, 1, 1, 0)};
  rd_head_ = {nn::fully_connected("rd_head.fc1", 2 * cfg_.feature_dim, cfg_.rd_hidden),
              nn::relu(), nn::fully_connected("rd_head.fc2", cfg_.rd_hidden, 1), nn::sigmoid()};

  const auto trunk_out = nn::network_output_shape(
      trunk_, {1, std::size_t(cfg_.input_size), std::size_t(cfg_.input_size)});
  if (trunk_out != std::vector<std::size_t>{std::size_t(cfg_.feature_dim),
                                            std::size_t(cfg_.heatmap_size),
                                            std::size_t(cfg_.heatmap_size)})
    throw DataError("WspModel: trunk output " + shape_string(trunk_out) +
                    " does not match (D, heatmap, heatmap)");

  Rng rng(init_seed);
  nn::init_params(trunk_, params_, rng);
  nn::init_params(hm_head_, params_, rng);
  nn::init_params(rd_head_, params_, rng);
  params_.rng_seed = init_seed;
}

std::array<int, 4> WspModel::bbox_to_heatmap(const std::array<double, 4>& bbox_input) const {
  const double s = 1.0 / cfg_.heatmap_stride();
  const int hm = cfg_.heatmap_size;
  int x0 = static_cast<int>(std::floor(bbox_input[0] * s));
  int y0 = static_cast<int>(std::floor(bbox_input[1] * s));
  int x1 = static_cast<int>(std::ceil((bbox_input[0] + bbox_input[2]) * s));
  int y1 = static_cast<int>(std::ceil((bbox_input[1] + bbox_input[3]) * s));
  x0 = std::clamp(x0, 0, hm);
  y0 = std::clamp(y0, 0, hm);
  x1 = std::clamp(x1, 0, hm);
  y1 = std::clamp(y1, 0, hm);
  if (x1 <= x0 || y1 <= y0)
    throw DataError("bbox does not intersect the heatmap");
  return {x0, y0, x1 - x0, y1 - y0};
}

WspModel::PairForward WspModel::forward_pair(const Tensor& input, const PersonInstance& person_a,
                                             const PersonInstance& person_b,
                                             const std::vector<int>& selected) {
  const std::vector<std::size_t> expect{1, std::size_t(cfg_.input_size),
                                        std::size_t(cfg_.input_size)};
  if (input.shape() != expect)
    throw DataError("forward_pair: input shape " + shape_string(input.shape()) +
                    " != " + shape_string(expect));

  PairForward f;
  f.features = nn::forward(trunk_, params_, input, f.trunk_tape);
  f.heatmaps = nn::forward(hm_head_, params_, f.features, f.hm_tape);
  f.bbox_a = bbox_to_heatmap(person_a.bbox);
  f.bbox_b = bbox_to_heatmap(person_b.bbox);
  f.pooled_a = masked_keypoint_pooling(f.features, f.heatmaps, f.bbox_a);
  f.pooled_b = masked_keypoint_pooling(f.features, f.heatmaps, f.bbox_b);
  f.selected = selected;

  const std::size_t d = std::size_t(cfg_.feature_dim);
  for (int j : selected) {
    if (j < 0 || j >= cfg_.joints) throw DataError("forward_pair: selected joint out of range");
    Tensor rd_in({2 * d});
    for (std::size_t k = 0; k < d; ++k) {
      rd_in[k] = f.pooled_a.at2(j, k);
      rd_in[d + k] = f.pooled_b.at2(j, k);
    }
    nn::Tape tape;
    Tensor prob = nn::forward(rd_head_, params_, rd_in, tape);
    f.probs.push_back(prob[0]);
    f.rd_inputs.push_back(std::move(rd_in));
    f.rd_tapes.push_back(std::move(tape));
  }
  return f;
}

PretrainLossParts WspModel::loss_and_backward(PairForward& f, const Tensor& gt_merged, int label,
                                              double grad_scale) {
  Tensor d_hm;
  std::vector<double> d_probs;
  PretrainLossParts parts = pretrain_loss(f.heatmaps, gt_merged, f.probs, label, cfg_.alpha,
                                          grad_scale, &d_hm, &d_probs, &clamp_events_);

  const std::size_t d = std::size_t(cfg_.feature_dim);
  Tensor d_pooled_a({std::size_t(cfg_.joints), d});
  Tensor d_pooled_b({std::size_t(cfg_.joints), d});
  for (std::size_t k = 0; k < f.selected.size(); ++k) {
    Tensor dy({1});
    dy[0] = d_probs[k];
    Tensor dx = nn::backward(f.rd_tapes[k], dy, params_);
    const int j = f.selected[k];
    for (std::size_t c = 0; c < d; ++c) {
      d_pooled_a.at2(j, c) += dx[c];
      d_pooled_b.at2(j, c) += dx[d + c];
    }
  }

  Tensor d_features(f.features.shape());
  masked_keypoint_pooling_backward(f.features, f.heatmaps, f.bbox_a, d_pooled_a, d_features,
                                   d_hm);
  masked_keypoint_pooling_backward(f.features, f.heatmaps, f.bbox_b, d_pooled_b, d_features,
                                   d_hm);

  Tensor d_from_hm = nn::backward(f.hm_tape, d_hm, params_);
  for (std::size_t i = 0; i < d_features.size(); ++i) d_features[i] += d_from_hm[i];
  nn::backward(f.trunk_tape, d_features, params_);
  return parts;
}

double WspModel::loss_value(const Tensor& input, const PersonInstance& person_a,
                            const PersonInstance& person_b, const std::vector<int>& selected,
                            const Tensor& gt_merged, int label) {
  PairForward f = forward_pair(input, person_a, person_b, selected);
  return pretrain_loss(f.heatmaps, gt_merged, f.probs, label, cfg_.alpha, 1.0, nullptr, nullptr,
                       &clamp_events_)
      .total;
}

double WspModel::pair_score(const Tensor& input, const PersonInstance& person_a,
                            const PersonInstance& person_b) {
  std::vector<int> all(cfg_.joints);
  for (int j = 0; j < cfg_.joints; ++j) all[j] = j;
  PairForward f = forward_pair(input, person_a, person_b, all);
  double sum = 0.0;
  for (double p : f.probs) sum += p;
  return sum / static_cast<double>(f.probs.size());
}

double WspModel::rd_head_forward(const Tensor& fa, const Tensor& fb) {
  const std::size_t d = std::size_t(cfg_.feature_dim);
  if (fa.size() != d || fb.size() != d)
    throw DataError("rd_head_forward: feature length != D");
  Tensor rd_in({2 * d});
  for (std::size_t k = 0; k < d; ++k) {
    rd_in[k] = fa[k];
    rd_in[d + k] = fb[k];
  }
  nn::Tape tape;
  return nn::forward(rd_head_, params_, rd_in, tape)[0];
}

std::vector<WspSample> load_wsp_samples(const std::vector<PairSample>& pairs,
                                        const std::filesystem::path& images_root,
                                        const WspConfig& cfg, bool force_ankle_mask) {
  const SkeletonSpec& skeleton = canonical_skeleton();
  std::map<std::string, Tensor> image_cache;
  std::vector<WspSample> out;
  out.reserve(pairs.size());

  for (const PairSample& pair : pairs) {
    auto it = image_cache.find(pair.image_ref);
    if (it == image_cache.end())
      it = image_cache.emplace(pair.image_ref, read_pgm(images_root / pair.image_ref)).first;

    Tensor crop = crop_image(it->second, pair.crop_box);
    PairSample local = pair;
    const bool want_mask = force_ankle_mask || pair.ankle_masked;
    if (want_mask) local = mask_ankles(std::move(local), &crop, skeleton);

    auto [input, t] = letterbox(crop, cfg.input_size);
    WspSample s;
    s.input = std::move(input);
    s.label = local.label.value;
    s.delta_s = local.delta_s;
    s.ankle_masked = local.ankle_masked;
    for (PersonInstance* src : {&local.person_a, &local.person_b}) {
      PersonInstance p = *src;
      for (auto& xy : p.joints) xy = t.apply(xy);
      p.bbox = {p.bbox[0] * t.scale + t.offset_x, p.bbox[1] * t.scale + t.offset_y,
                p.bbox[2] * t.scale, p.bbox[3] * t.scale};
      (src == &local.person_a ? s.person_a : s.person_b) = std::move(p);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string epoch_metrics_record(const EpochMetrics& m) {
  nlohmann::ordered_json rec;
  rec["epoch"] = m.epoch;
  rec["loss"] = m.loss;
  rec["loss_hm"] = m.loss_hm;
  rec["loss_rd"] = m.loss_rd;
  rec["val_auc"] = m.val_auc;
  rec["val_acc"] = m.val_acc;
  return rec.dump();
}

std::vector<double> score_samples(WspModel& model, const std::vector<WspSample>& samples) {
  std::vector<double> scores(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    scores[i] = model.pair_score(samples[i].input, samples[i].person_a, samples[i].person_b);
  return scores;
}

PretrainResult train_pretrain(WspModel& model, const std::vector<WspSample>& train,
                              const std::vector<WspSample>& val, const PretrainOptions& opt) {
  if (train.empty() || val.empty())
    throw DataError("train_pretrain: empty train or validation split");
  const WspConfig& cfg = model.config();

  std::vector<int> val_labels(val.size());
  for (std::size_t i = 0; i < val.size(); ++i) val_labels[i] = val[i].label;

  PretrainResult result;
  nn::ParamStore snapshot = model.params();
  double lr = opt.lr;

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    if (std::find(opt.lr_decay_epochs.begin(), opt.lr_decay_epochs.end(), epoch) !=
        opt.lr_decay_epochs.end())
      lr *= opt.lr_decay;

    Rng rng(derive_seed(opt.seed, 0x9000000ULL + static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    double sum_loss = 0.0, sum_hm = 0.0, sum_rd = 0.0;
    bool diverged = false;
    std::size_t pos = 0;
    while (pos < order.size() && !diverged) {
      const std::size_t batch =
          std::min<std::size_t>(opt.batch_size, order.size() - pos);
      const double grad_scale = 1.0 / static_cast<double>(batch);
      for (std::size_t b = 0; b < batch; ++b) {
        const WspSample& s = train[order[pos + b]];
        std::vector<int> selected = select_keypoints(cfg.joints, cfg.selected_joints, rng);
        GtHeatmaps gt = render_gt_heatmaps({s.person_a, s.person_b}, cfg);
        auto fwd = model.forward_pair(s.input, s.person_a, s.person_b, selected);
        PretrainLossParts parts =
            model.loss_and_backward(fwd, gt.merged, s.label, grad_scale);
        if (!std::isfinite(parts.total)) {
          diverged = true;
          break;
        }
        sum_loss += parts.total;
        sum_hm += parts.hm;
        sum_rd += parts.rd;
      }
      if (diverged) break;
      nn::sgd_step(model.params(), lr, opt.momentum);
      pos += batch;
    }

    if (diverged) {
      model.params() = snapshot;  // last finished epoch
      result.diverged = true;
      break;
    }

    std::vector<double> scores = score_samples(model, val);
    EpochMetrics m;
    m.epoch = epoch;
    const double inv_n = 1.0 / static_cast<double>(train.size());
    m.loss = sum_loss * inv_n;
    m.loss_hm = sum_hm * inv_n;
    m.loss_rd = sum_rd * inv_n;
    m.val_auc = auc(scores, val_labels);
    m.val_acc = binary_metrics(scores, val_labels).accuracy;
    result.log.push_back(m);
    snapshot = model.params();

    if (opt.target_auc > 0.0 && m.val_auc >= opt.target_auc) break;
  }
  return result;
}

}  // namespace wspkit
