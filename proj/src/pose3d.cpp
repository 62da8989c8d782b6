#include "wspkit/pose3d.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "wspkit/errors.hpp"
#include "wspkit/image.hpp"
#include "wspkit/io.hpp"
#include "wspkit/metrics.hpp"

namespace wspkit {

void Pose3dConfig::validate() const {
  base.validate();
  if (depth_bins < 2) throw DataError("Pose3dConfig: depth_bins must be >= 2");
  if (calib.window_x_mm <= 0 || calib.window_y_mm <= 0 || calib.window_z_mm <= 0)
    throw DataError("Pose3dConfig: calibration windows must be positive");
}

IntegralResult integral_3d(const Tensor& heatmap3d) {
  if (heatmap3d.rank() != 4)
    throw DataError("integral_3d expects (J, Dz, H, W), got " +
                    shape_string(heatmap3d.shape()));
  const std::size_t j = heatmap3d.extent(0), dz = heatmap3d.extent(1), h = heatmap3d.extent(2),
                    w = heatmap3d.extent(3);
  const std::size_t vol = dz * h * w;

  IntegralResult out;
  out.probs = Tensor(heatmap3d.shape());
  out.coords.resize(j);
  for (std::size_t jj = 0; jj < j; ++jj) {
    const double* src = heatmap3d.data() + jj * vol;
    double* dst = out.probs.data() + jj * vol;
    double mx = src[0];
    for (std::size_t v = 1; v < vol; ++v) mx = std::max(mx, src[v]);
    double sum = 0.0;
    for (std::size_t v = 0; v < vol; ++v) {
      dst[v] = std::exp(src[v] - mx);
      sum += dst[v];
    }
    const double inv = 1.0 / sum;
    double cx = 0.0, cy = 0.0, cz = 0.0;
    std::size_t v = 0;
    for (std::size_t z = 0; z < dz; ++z)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x, ++v) {
          const double p = dst[v] * inv;
          dst[v] = p;
          cx += p * static_cast<double>(x);
          cy += p * static_cast<double>(y);
          cz += p * static_cast<double>(z);
        }
    out.coords[jj] = {cx, cy, cz};
  }
  return out;
}

void integral_3d_backward(const IntegralResult& fwd,
                          const std::vector<std::array<double, 3>>& dcoords, Tensor& d_heatmap) {
  const auto& shape = fwd.probs.shape();
  const std::size_t j = shape[0], dz = shape[1], h = shape[2], w = shape[3];
  const std::size_t vol = dz * h * w;
  if (!d_heatmap.same_shape(fwd.probs)) d_heatmap = Tensor(shape);
  for (std::size_t jj = 0; jj < j; ++jj) {
    const auto& c = fwd.coords[jj];
    const auto& dc = dcoords[jj];
    const double* p = fwd.probs.data() + jj * vol;
    double* dst = d_heatmap.data() + jj * vol;
    std::size_t v = 0;
    for (std::size_t z = 0; z < dz; ++z)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x, ++v) {
          // d coord_a / d logit_v = p_v * (idx_a(v) - coord_a)
          dst[v] += p[v] * (dc[0] * (static_cast<double>(x) - c[0]) +
                            dc[1] * (static_cast<double>(y) - c[1]) +
                            dc[2] * (static_cast<double>(z) - c[2]));
        }
  }
}

double l1_pose_loss(const Pose3D& pred, const Pose3D& gt,
                    std::vector<std::array<double, 3>>* dpred) {
  if (pred.joints.size() != gt.joints.size())
    throw DataError("l1_pose_loss: joint count mismatch");
  std::size_t valid = 0;
  for (std::size_t j = 0; j < pred.joints.size(); ++j)
    valid += pred.valid[j] && gt.valid[j];
  if (valid == 0) throw DataError("l1_pose_loss: zero valid joints");
  const double inv = 1.0 / static_cast<double>(valid);

  if (dpred) dpred->assign(pred.joints.size(), {0.0, 0.0, 0.0});
  double loss = 0.0;
  for (std::size_t j = 0; j < pred.joints.size(); ++j) {
    if (!(pred.valid[j] && gt.valid[j])) continue;
    for (int a = 0; a < 3; ++a) {
      const double diff = pred.joints[j][a] - gt.joints[j][a];
      loss += std::abs(diff) * inv;
      if (dpred) (*dpred)[j][a] = (diff > 0.0 ? 1.0 : diff < 0.0 ? -1.0 : 0.0) * inv;
    }
  }
  return loss;
}

Pose3dModel::Pose3dModel(Pose3dConfig cfg, std::uint64_t init_seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  // Same trunk as WSP pre-training, so checkpoints transfer by name.
  trunk_ = build_wsp_trunk(cfg_.base);
  head_ = {nn::conv2d("head3d.conv", cfg_.base.feature_dim, cfg_.base.joints * cfg_.depth_bins,
                      1, 1, 0)};
  Rng rng(init_seed);
  nn::init_params(trunk_, params_, rng);
  nn::init_params(head_, params_, rng);
  params_.rng_seed = init_seed;
}

void Pose3dModel::load_backbone(const nn::CheckpointMap& ckpt) {
  const std::size_t restored = nn::restore_prefix(params_, ckpt, "backbone.");
  if (restored == 0) throw DataError("checkpoint contains no backbone.* tensors");
}

std::array<double, 3> Pose3dModel::mm_per_voxel_step() const {
  return {cfg_.calib.window_x_mm / (cfg_.base.heatmap_size - 1),
          cfg_.calib.window_y_mm / (cfg_.base.heatmap_size - 1),
          cfg_.calib.window_z_mm / (cfg_.depth_bins - 1)};
}

std::array<double, 3> Pose3dModel::voxel_to_mm(const std::array<double, 3>& v) const {
  const auto step = mm_per_voxel_step();
  const double cx = (cfg_.base.heatmap_size - 1) / 2.0;
  const double cz = (cfg_.depth_bins - 1) / 2.0;
  return {(v[0] - cx) * step[0], (v[1] - cx) * step[1], (v[2] - cz) * step[2]};
}

Tensor Pose3dModel::forward_heatmap3d(const Tensor& input, nn::Tape& trunk_tape,
                                      nn::Tape& head_tape) {
  const std::vector<std::size_t> expect{1, std::size_t(cfg_.base.input_size),
                                        std::size_t(cfg_.base.input_size)};
  if (input.shape() != expect)
    throw DataError("pose3d forward: input shape " + shape_string(input.shape()) +
                    " != " + shape_string(expect));
  Tensor features = nn::forward(trunk_, params_, input, trunk_tape);
  Tensor raw = nn::forward(head_, params_, features, head_tape);
  return Tensor::from_values({std::size_t(cfg_.base.joints), std::size_t(cfg_.depth_bins),
                              std::size_t(cfg_.base.heatmap_size),
                              std::size_t(cfg_.base.heatmap_size)},
                             raw.values());
}

Pose3D Pose3dModel::predict(const Tensor& input) {
  nn::Tape trunk_tape, head_tape;
  Tensor hm3d = forward_heatmap3d(input, trunk_tape, head_tape);
  IntegralResult integral = integral_3d(hm3d);
  Pose3D pose;
  pose.valid.assign(cfg_.base.joints, true);
  pose.joints.resize(cfg_.base.joints);
  for (int j = 0; j < cfg_.base.joints; ++j) pose.joints[j] = voxel_to_mm(integral.coords[j]);
  return pose;
}

double Pose3dModel::train_sample(const Tensor& input, const Pose3D& gt_mm, double grad_scale) {
  nn::Tape trunk_tape, head_tape;
  Tensor hm3d = forward_heatmap3d(input, trunk_tape, head_tape);
  IntegralResult integral = integral_3d(hm3d);

  Pose3D pred;
  pred.valid.assign(cfg_.base.joints, true);
  pred.joints.resize(cfg_.base.joints);
  for (int j = 0; j < cfg_.base.joints; ++j) pred.joints[j] = voxel_to_mm(integral.coords[j]);

  std::vector<std::array<double, 3>> d_mm;
  const double loss = l1_pose_loss(pred, gt_mm, &d_mm);

  const auto step = mm_per_voxel_step();
  std::vector<std::array<double, 3>> d_voxel(d_mm.size());
  for (std::size_t j = 0; j < d_mm.size(); ++j)
    d_voxel[j] = {d_mm[j][0] * step[0] * grad_scale, d_mm[j][1] * step[1] * grad_scale,
                  d_mm[j][2] * step[2] * grad_scale};

  Tensor d_hm3d(hm3d.shape());
  integral_3d_backward(integral, d_voxel, d_hm3d);
  Tensor d_raw = Tensor::from_values(
      {std::size_t(cfg_.base.joints * cfg_.depth_bins), std::size_t(cfg_.base.heatmap_size),
       std::size_t(cfg_.base.heatmap_size)},
      d_hm3d.values());
  Tensor d_features = nn::backward(head_tape, d_raw, params_);
  nn::backward(trunk_tape, d_features, params_);
  return loss;
}

double Pose3dModel::loss_value(const Tensor& input, const Pose3D& gt_mm) {
  nn::Tape trunk_tape, head_tape;
  Tensor hm3d = forward_heatmap3d(input, trunk_tape, head_tape);
  IntegralResult integral = integral_3d(hm3d);
  Pose3D pred;
  pred.valid.assign(cfg_.base.joints, true);
  pred.joints.resize(cfg_.base.joints);
  for (int j = 0; j < cfg_.base.joints; ++j) pred.joints[j] = voxel_to_mm(integral.coords[j]);
  return l1_pose_loss(pred, gt_mm, nullptr);
}

std::vector<Pose3dSample> load_pose3d_samples(const std::filesystem::path& corpus_dir,
                                              const Pose3dConfig& cfg) {
  const auto manifest = read_manifest(corpus_dir / "manifest.jsonl");
  const auto gt3d = read_gt3d(corpus_dir / "gt3d.jsonl");

  std::map<std::pair<std::int64_t, std::int64_t>, const Gt3dRecord*> gt_index;
  for (const auto& g : gt3d) gt_index[{g.image_id, g.person_id}] = &g;

  std::vector<Pose3dSample> out;
  for (const auto& img : manifest) {
    Tensor pixels = read_pgm(corpus_dir / img.file_name);
    for (const auto& person : img.persons) {
      auto it = gt_index.find({img.image_id, person.person_id});
      if (it == gt_index.end())
        throw DataError("missing gt3d record for image " + std::to_string(img.image_id) +
                        " person " + std::to_string(person.person_id));
      // Single-person crop: padded bbox snapped to whole pixels.
      const auto& bb = person.bbox;
      const double pad = 0.15 * std::hypot(bb[2], bb[3]);
      const int x0 = std::max(0, static_cast<int>(std::floor(bb[0] - pad)));
      const int y0 = std::max(0, static_cast<int>(std::floor(bb[1] - pad)));
      const int x1 = std::min(img.width, static_cast<int>(std::ceil(bb[0] + bb[2] + pad)));
      const int y1 = std::min(img.height, static_cast<int>(std::ceil(bb[1] + bb[3] + pad)));
      Tensor crop = crop_image(pixels, {x0, y0, x1 - x0, y1 - y0});
      auto [input, transform] = letterbox(crop, cfg.base.input_size);
      (void)transform;
      Pose3dSample s;
      s.input = std::move(input);
      s.gt_mm = it->second->joints_cam_rel;
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::string epoch3d_metrics_record(const Epoch3dMetrics& m) {
  nlohmann::ordered_json rec;
  rec["epoch"] = m.epoch;
  rec["loss"] = m.loss;
  rec["val_mpjpe"] = m.val_mpjpe;
  rec["val_mpjpe_x"] = m.val_x;
  rec["val_mpjpe_y"] = m.val_y;
  rec["val_mpjpe_z"] = m.val_z;
  return rec.dump();
}

std::vector<Pose3D> predict_all(Pose3dModel& model, const std::vector<Pose3dSample>& samples) {
  std::vector<Pose3D> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out[i] = model.predict(samples[i].input);
  return out;
}

FinetuneResult finetune(Pose3dModel& model, const std::vector<Pose3dSample>& train,
                        const std::vector<Pose3dSample>& val, const FinetuneOptions& opt) {
  if (train.empty() || val.empty()) throw DataError("finetune: empty train or validation split");

  std::vector<Pose3D> val_gt(val.size());
  for (std::size_t i = 0; i < val.size(); ++i) val_gt[i] = val[i].gt_mm;

  FinetuneResult result;
  nn::ParamStore snapshot = model.params();
  double lr = opt.lr;

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    if (std::find(opt.lr_decay_epochs.begin(), opt.lr_decay_epochs.end(), epoch) !=
        opt.lr_decay_epochs.end())
      lr *= opt.lr_decay;

    Rng rng(derive_seed(opt.seed, 0x3d000000ULL + static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    double sum_loss = 0.0;
    bool diverged = false;
    std::size_t pos = 0;
    while (pos < order.size() && !diverged) {
      const std::size_t batch = std::min<std::size_t>(opt.batch_size, order.size() - pos);
      const double grad_scale = 1.0 / static_cast<double>(batch);
      for (std::size_t b = 0; b < batch; ++b) {
        const Pose3dSample& s = train[order[pos + b]];
        const double loss = model.train_sample(s.input, s.gt_mm, grad_scale);
        if (!std::isfinite(loss)) {
          diverged = true;
          break;
        }
        sum_loss += loss;
      }
      if (diverged) break;
      nn::sgd_step(model.params(), lr, opt.momentum);
      pos += batch;
    }

    if (diverged) {
      model.params() = snapshot;
      result.diverged = true;
      break;
    }

    std::vector<Pose3D> preds = predict_all(model, val);
    MpjpeResult val_err = mpjpe(preds, val_gt);
    Epoch3dMetrics m;
    m.epoch = epoch;
    m.loss = sum_loss / static_cast<double>(train.size());
    m.val_mpjpe = val_err.total;
    m.val_x = val_err.x;
    m.val_y = val_err.y;
    m.val_z = val_err.z;
    result.log.push_back(m);
    snapshot = model.params();
  }
  return result;
}

}  // namespace wspkit
