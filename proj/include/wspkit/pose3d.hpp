#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "wspkit/anno.hpp"
#include "wspkit/nn/checkpoint.hpp"
#include "wspkit/nn/net.hpp"
#include "wspkit/pose_types.hpp"
#include "wspkit/synth.hpp"
#include "wspkit/wsp.hpp"

namespace wspkit {

// Millimeter calibration for the voxel grid: each axis maps linearly onto
// [-window/2, +window/2] around the root.
struct VoxelCalibration {
  double window_x_mm = 2000.0;
  double window_y_mm = 2000.0;
  double window_z_mm = 2000.0;
};

struct Pose3dConfig {
  WspConfig base;       // trunk architecture, input/heatmap geometry, J
  int depth_bins = 16;  // Dz
  VoxelCalibration calib;

  void validate() const;
};

// Soft-argmax over a (J, Dz, H, W) stack: per joint, softmax across all
// Dz*H*W voxels, then the probability-weighted mean of the (x, y, z) voxel
// indices. Probabilities are cached for the backward pass.
struct IntegralResult {
  std::vector<std::array<double, 3>> coords;  // voxel units, (x, y, z)
  Tensor probs;                               // same shape as the input
};

IntegralResult integral_3d(const Tensor& heatmap3d);

// dL/dcoords -> dL/d(pre-softmax heatmap), accumulated into d_heatmap.
void integral_3d_backward(const IntegralResult& fwd,
                          const std::vector<std::array<double, 3>>& dcoords, Tensor& d_heatmap);

// Mean over valid joints of the L1 norm of the coordinate difference.
// Optionally emits dloss/dpred.
double l1_pose_loss(const Pose3D& pred, const Pose3D& gt,
                    std::vector<std::array<double, 3>>* dpred = nullptr);

// Fine-tuning network: the WSP trunk plus a fresh 1x1 conv head producing
// J * Dz channels, reshaped to (J, Dz, H, W) and integrated to coordinates.
class Pose3dModel {
 public:
  Pose3dModel(Pose3dConfig cfg, std::uint64_t init_seed);

  const Pose3dConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  // Restores backbone.* tensors from a pre-training checkpoint; the WSP
  // heads are dropped and the 3D head stays freshly initialized.
  void load_backbone(const nn::CheckpointMap& ckpt);

  Pose3D predict(const Tensor& input);  // millimeters, root-relative

  // Forward + L1 loss + backward; gradients accumulate scaled by grad_scale.
  double train_sample(const Tensor& input, const Pose3D& gt_mm, double grad_scale);

  // Loss value only (gradient checker hook).
  double loss_value(const Tensor& input, const Pose3D& gt_mm);

  std::array<double, 3> voxel_to_mm(const std::array<double, 3>& voxel) const;
  std::array<double, 3> mm_per_voxel_step() const;

 private:
  Tensor forward_heatmap3d(const Tensor& input, nn::Tape& trunk_tape, nn::Tape& head_tape);

  Pose3dConfig cfg_;
  nn::Network trunk_, head_;
  nn::ParamStore params_;
};

struct Pose3dSample {
  Tensor input;  // (1, S, S) single-person letterboxed crop
  Pose3D gt_mm;  // root-relative camera-space joints
};

// Builds one sample per (image, person) from a synthetic corpus directory
// (manifest.jsonl + gt3d.jsonl + images/).
std::vector<Pose3dSample> load_pose3d_samples(const std::filesystem::path& corpus_dir,
                                              const Pose3dConfig& cfg);

struct FinetuneOptions {
  int epochs = 16;
  int batch_size = 16;
  double lr = 1e-3;
  double momentum = 0.9;
  double lr_decay = 0.1;
  std::vector<int> lr_decay_epochs = {11, 14};
  std::uint64_t seed = 7;
};

struct Epoch3dMetrics {
  int epoch = 0;
  double loss = 0.0;
  double val_mpjpe = 0.0;
  double val_x = 0.0, val_y = 0.0, val_z = 0.0;
};

std::string epoch3d_metrics_record(const Epoch3dMetrics& m);

struct FinetuneResult {
  std::vector<Epoch3dMetrics> log;
  bool diverged = false;
};

FinetuneResult finetune(Pose3dModel& model, const std::vector<Pose3dSample>& train,
                        const std::vector<Pose3dSample>& val, const FinetuneOptions& opt);

// Predictions for a whole set, order preserved.
std::vector<Pose3D> predict_all(Pose3dModel& model, const std::vector<Pose3dSample>& samples);

}  // namespace wspkit
