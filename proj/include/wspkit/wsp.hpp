#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "wspkit/anno.hpp"
#include "wspkit/nn/checkpoint.hpp"
#include "wspkit/nn/net.hpp"
#include "wspkit/pairs.hpp"
#include "wspkit/rng.hpp"
#include "wspkit/tensor.hpp"

namespace wspkit {

struct WspConfig {
  int joints = 17;          // J
  int feature_dim = 32;     // D, channels of the pooled deep features
  int selected_joints = 4;  // N, random keypoints per pair
  double heatmap_sigma = 2.0;
  double alpha = 50.0;  // relative-depth loss weight
  int input_size = 64;
  int heatmap_size = 16;  // input_size / 4
  int rd_hidden = 32;
  std::vector<int> backbone_channels = {16, 32, 32, 32};  // stride-2 stages

  void validate() const;
  int deconv_count() const;  // derived from input/heatmap ratio
  double heatmap_stride() const {
    return static_cast<double>(input_size) / static_cast<double>(heatmap_size);
  }
};

struct GtHeatmaps {
  std::vector<Tensor> per_person;  // (J, Hm, Wm) each, peak 1 at the joint
  Tensor merged;                   // element-wise max over persons
};

// Persons are given in the network-input frame; joint positions map to
// heatmap scale through cfg.heatmap_stride(). Absent joints leave an all-zero
// channel.
GtHeatmaps render_gt_heatmaps(const std::vector<PersonInstance>& persons, const WspConfig& cfg);

// Average of the heatmap-masked features over the bbox (heatmap scale):
// pooled[j][d] = sum_{(h,w) in bbox} fd[d,h,w] * m[j,h,w] / |bbox|.
Tensor masked_keypoint_pooling(const Tensor& fd, const Tensor& m,
                               const std::array<int, 4>& bbox_hm);
void masked_keypoint_pooling_backward(const Tensor& fd, const Tensor& m,
                                      const std::array<int, 4>& bbox_hm, const Tensor& dpooled,
                                      Tensor& dfd, Tensor& dm);

// N distinct joint indices, uniform without replacement; the same indices
// are used for both persons of a pair.
std::vector<int> select_keypoints(int joints, int n, Rng& rng);

struct PretrainLossParts {
  double total = 0.0;
  double hm = 0.0;
  double rd = 0.0;
};

// L = L_hm + alpha * L_rd with L_hm the mean squared heatmap error against
// the merged ground truth and L_rd the mean binary cross-entropy over the
// selected joints. Probabilities at exactly 0/1 are clamped to
// [1e-12, 1 - 1e-12] (counted, not fatal). Gradients are written to
// d_heatmaps / d_probs scaled by grad_scale.
PretrainLossParts pretrain_loss(const Tensor& pred_hm, const Tensor& gt_hm,
                                const std::vector<double>& pred_rd, int gt_rd, double alpha,
                                double grad_scale, Tensor* d_heatmaps,
                                std::vector<double>* d_probs,
                                std::size_t* clamp_events = nullptr);

// Shared trunk: stride-2 conv stages, then transposed convs back up to
// heatmap resolution, ending at feature_dim channels. Parameter names carry
// the backbone.* prefix so fine-tuning can restore them.
nn::Network build_wsp_trunk(const WspConfig& cfg);

// Pre-training network: shared trunk (stride-2 convs + transposed convs) to
// deep features, a 1x1 heatmap head whose output doubles as the pooling
// mask, and a two-layer relative-depth head on concatenated pooled features.
// Parameter prefixes: backbone.* (transferred at fine-tune time), hm_head.*,
// rd_head.*.
class WspModel {
 public:
  WspModel(WspConfig cfg, std::uint64_t init_seed);

  const WspConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  std::size_t clamp_events() const { return clamp_events_; }

  struct PairForward {
    nn::Tape trunk_tape, hm_tape;
    Tensor features;  // (D, Hm, Wm)
    Tensor heatmaps;  // (J, Hm, Wm)
    std::array<int, 4> bbox_a{}, bbox_b{};  // heatmap scale
    Tensor pooled_a, pooled_b;              // (J, D)
    std::vector<int> selected;
    std::vector<nn::Tape> rd_tapes;
    std::vector<Tensor> rd_inputs;  // concatenated pooled features per joint
    std::vector<double> probs;      // P(A closer or equal), per selected joint
  };

  PairForward forward_pair(const Tensor& input, const PersonInstance& person_a,
                           const PersonInstance& person_b, const std::vector<int>& selected);

  // Full backward from the pre-training loss; gradients accumulate into the
  // param store scaled by grad_scale. Returns per-sample (unscaled) losses.
  PretrainLossParts loss_and_backward(PairForward& fwd, const Tensor& gt_merged, int label,
                                      double grad_scale);

  // Loss value only (used by the gradient checker).
  double loss_value(const Tensor& input, const PersonInstance& person_a,
                    const PersonInstance& person_b, const std::vector<int>& selected,
                    const Tensor& gt_merged, int label);

  // Evaluation score for a pair: mean probability over all J joints.
  double pair_score(const Tensor& input, const PersonInstance& person_a,
                    const PersonInstance& person_b);

  // Relative-depth head alone (Eq.-level contract): sigmoid(f(fa ++ fb)).
  double rd_head_forward(const Tensor& fa, const Tensor& fb);

  const nn::Network& trunk() const { return trunk_; }
  const nn::Network& heatmap_head() const { return hm_head_; }
  const nn::Network& rd_head() const { return rd_head_; }

  std::array<int, 4> bbox_to_heatmap(const std::array<double, 4>& bbox_input) const;

 private:
  WspConfig cfg_;
  nn::Network trunk_, hm_head_, rd_head_;
  nn::ParamStore params_;
  std::size_t clamp_events_ = 0;
};

// One in-memory training/eval unit: letterboxed crop pixels plus both
// persons re-expressed in the network-input frame.
struct WspSample {
  Tensor input;  // (1, S, S)
  PersonInstance person_a, person_b;
  int label = 0;
  double delta_s = 0.0;
  bool ankle_masked = false;
};

// Loads pair-manifest entries, crops and letterboxes the referenced images,
// applying the ankle mask when the sample (or force_ankle_mask) asks for it.
std::vector<WspSample> load_wsp_samples(const std::vector<PairSample>& pairs,
                                        const std::filesystem::path& images_root,
                                        const WspConfig& cfg, bool force_ankle_mask = false);

struct PretrainOptions {
  int epochs = 30;
  int batch_size = 16;
  double lr = 1e-3;
  double momentum = 0.9;
  double lr_decay = 0.1;
  std::vector<int> lr_decay_epochs = {18, 25};
  std::uint64_t seed = 7;
  double target_auc = 0.0;  // early stop once val AUC reaches this (0 = off)
};

struct EpochMetrics {
  int epoch = 0;
  double loss = 0.0, loss_hm = 0.0, loss_rd = 0.0;
  double val_auc = 0.0, val_acc = 0.0;
};

std::string epoch_metrics_record(const EpochMetrics& m);

struct PretrainResult {
  std::vector<EpochMetrics> log;
  bool diverged = false;
};

PretrainResult train_pretrain(WspModel& model, const std::vector<WspSample>& train,
                              const std::vector<WspSample>& val, const PretrainOptions& opt);

// Scores every sample (mean probability over all joints); order matches the
// input.
std::vector<double> score_samples(WspModel& model, const std::vector<WspSample>& samples);

}  // namespace wspkit
