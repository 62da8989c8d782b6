#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wspkit/pose_types.hpp"

namespace wspkit {

struct BinaryEvalResult {
  std::optional<double> auc;  // filled by callers that also rank
  double accuracy = 0.0;
  // Undefined (zero-denominator) precision/recall/F1 stay disengaged, which
  // is distinct from a literal 0.
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t support() const { return tp + fp + tn + fn; }
};

// Confusion-matrix metrics at `threshold` (prediction = score >= threshold).
BinaryEvalResult binary_metrics(const std::vector<double>& scores,
                                const std::vector<int>& labels, double threshold = 0.5);

// Rank-based (Mann-Whitney) AUC; ties contribute 1/2. Throws DataError when
// only one class is present.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct MpjpeResult {
  double total = 0.0;  // mean Euclidean distance, mm
  double x = 0.0;      // mean absolute per-coordinate error, mm
  double y = 0.0;
  double z = 0.0;
  std::size_t joint_count = 0;
};

MpjpeResult mpjpe(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt);

// Similarity Procrustes (rotation with det = +1, uniform scale, translation)
// per pose, then MPJPE of the aligned prediction.
double pa_mpjpe(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt);

// Single-pose alignment; exposed for tests. Returns the aligned prediction.
Pose3D procrustes_align(const Pose3D& pred, const Pose3D& gt);

// Percentage (0..100) of valid joints with error < threshold_mm.
double pck3d(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt,
             double threshold_mm);

inline const std::vector<double>& pck3d_report_thresholds() {
  static const std::vector<double> t{100.0, 110.0, 120.0, 130.0, 140.0, 150.0};
  return t;
}

// One scored test pair with its protocol provenance.
struct RdEvalEntry {
  double score = 0.5;
  int label = 0;
  double delta_s = 0.0;
  bool ankle_masked = false;
};

struct RdReportCell {
  bool masked = false;
  double delta_s_threshold = 1.0;
  std::size_t count = 0;
  std::optional<BinaryEvalResult> metrics;  // disengaged => n/a (empty bucket
                                            // or single-class)
};

struct RdReport {
  std::vector<RdReportCell> cells;
  std::string to_table() const;             // aligned text table
  std::vector<std::string> to_records() const;  // machine-readable JSONL
};

// Protocol 1 rows (plain) and protocol 2 rows (ankle-masked) over nested
// delta-S buckets.
RdReport rd_protocol_report(const std::vector<RdEvalEntry>& entries,
                            const std::vector<double>& thresholds = {1.0, 0.5, 0.3, 0.1});

// Human3.6M experimental splits, kept as data so a real loader can plug in;
// the datasets themselves cannot ship with the repo.
struct SubjectSplit {
  std::vector<std::string> train_subjects;
  std::vector<std::string> test_subjects;
  std::string metric;  // "mpjpe" or "pa_mpjpe"
};

const SubjectSplit& subject_protocol_1();  // S1,S5,S6,S7,S8 / S9,S11 (MPJPE)
const SubjectSplit& subject_protocol_2();  // +S9 / S11 (PA MPJPE)
const std::vector<std::string>& cross_action_protocol_actions();

}  // namespace wspkit
