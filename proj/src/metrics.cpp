#include "wspkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <Eigen/Dense>
#include <json.hpp>

#include "wspkit/errors.hpp"

namespace wspkit {

BinaryEvalResult binary_metrics(const std::vector<double>& scores,
                                const std::vector<int>& labels, double threshold) {
  if (scores.empty() || scores.size() != labels.size())
    throw DataError("binary_metrics: empty input or size mismatch");
  BinaryEvalResult r;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    const bool pos = labels[i] == 1;
    if (pred && pos) ++r.tp;
    else if (pred && !pos) ++r.fp;
    else if (!pred && pos) ++r.fn;
    else ++r.tn;
  }
  const std::size_t n = scores.size();
  r.accuracy = static_cast<double>(r.tp + r.tn) / static_cast<double>(n);
  if (r.tp + r.fp > 0) r.precision = static_cast<double>(r.tp) / (r.tp + r.fp);
  if (r.tp + r.fn > 0) r.recall = static_cast<double>(r.tp) / (r.tp + r.fn);
  if (r.precision && r.recall) {
    const double p = *r.precision, rc = *r.recall;
    r.f1 = (p + rc) > 0.0 ? 2.0 * p * rc / (p + rc) : 0.0;
  }
  return r;
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw DataError("auc: empty input or size mismatch");
  std::size_t n_pos = 0;
  for (int l : labels) n_pos += l == 1;
  const std::size_t n = scores.size();
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DataError("auc: needs both classes present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks across tie groups (1-based), then the Mann-Whitney statistic.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = static_cast<double>(i + j + 2) / 2.0;
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    i = j + 1;
  }
  const double u = rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace {

void check_matched(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt,
                   const char* what) {
  if (pred.size() != gt.size()) throw DataError(std::string(what) + ": pose set size mismatch");
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i].joints.size() != gt[i].joints.size())
      throw DataError(std::string(what) + ": joint count mismatch in pose " + std::to_string(i));
}

bool joint_valid(const Pose3D& a, const Pose3D& b, std::size_t j) {
  return a.valid[j] && b.valid[j];
}

}  // namespace

MpjpeResult mpjpe(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt) {
  check_matched(pred, gt, "mpjpe");
  MpjpeResult r;
  double total = 0.0, ax = 0.0, ay = 0.0, az = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (std::size_t j = 0; j < pred[i].joints.size(); ++j) {
      if (!joint_valid(pred[i], gt[i], j)) continue;
      const auto& p = pred[i].joints[j];
      const auto& g = gt[i].joints[j];
      const double dx = p[0] - g[0], dy = p[1] - g[1], dz = p[2] - g[2];
      total += std::sqrt(dx * dx + dy * dy + dz * dz);
      ax += std::abs(dx);
      ay += std::abs(dy);
      az += std::abs(dz);
      ++r.joint_count;
    }
  if (r.joint_count == 0) throw DataError("mpjpe: no valid joints");
  const double inv = 1.0 / static_cast<double>(r.joint_count);
  r.total = total * inv;
  r.x = ax * inv;
  r.y = ay * inv;
  r.z = az * inv;
  return r;
}

Pose3D procrustes_align(const Pose3D& pred, const Pose3D& gt) {
  if (pred.joints.size() != gt.joints.size())
    throw DataError("procrustes_align: joint count mismatch");
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < pred.joints.size(); ++j)
    if (joint_valid(pred, gt, j)) idx.push_back(j);
  if (idx.size() < 3) throw NumericError("procrustes_align: fewer than 3 valid joints");

  const std::size_t n = idx.size();
  Eigen::MatrixXd P(3, n), G(3, n);
  for (std::size_t k = 0; k < n; ++k)
    for (int d = 0; d < 3; ++d) {
      P(d, k) = pred.joints[idx[k]][d];
      G(d, k) = gt.joints[idx[k]][d];
    }
  const Eigen::Vector3d mu_p = P.rowwise().mean();
  const Eigen::Vector3d mu_g = G.rowwise().mean();
  P.colwise() -= mu_p;
  G.colwise() -= mu_g;

  const double var_p = P.squaredNorm() / static_cast<double>(n);
  // Collinear or coincident predictions leave the rotation underdetermined.
  Eigen::JacobiSVD<Eigen::MatrixXd> shape_svd(P);
  const auto& sv = shape_svd.singularValues();
  if (sv(0) <= 0.0 || sv(1) <= 1e-9 * std::max(sv(0), 1.0))
    throw NumericError("procrustes_align: degenerate (collinear or coincident) joints");

  const Eigen::Matrix3d cov = G * P.transpose() / static_cast<double>(n);
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d s = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s(2) = -1.0;
  const Eigen::Matrix3d rot = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  const double scale = svd.singularValues().dot(s) / var_p;
  const Eigen::Vector3d t = mu_g - scale * rot * mu_p;

  Pose3D out = pred;
  for (std::size_t j = 0; j < pred.joints.size(); ++j) {
    Eigen::Vector3d v(pred.joints[j][0], pred.joints[j][1], pred.joints[j][2]);
    Eigen::Vector3d w = scale * rot * v + t;
    out.joints[j] = {w(0), w(1), w(2)};
  }
  return out;
}

double pa_mpjpe(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt) {
  check_matched(pred, gt, "pa_mpjpe");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const Pose3D aligned = procrustes_align(pred[i], gt[i]);
    for (std::size_t j = 0; j < aligned.joints.size(); ++j) {
      if (!joint_valid(aligned, gt[i], j)) continue;
      const auto& p = aligned.joints[j];
      const auto& g = gt[i].joints[j];
      total += std::sqrt((p[0] - g[0]) * (p[0] - g[0]) + (p[1] - g[1]) * (p[1] - g[1]) +
                         (p[2] - g[2]) * (p[2] - g[2]));
      ++count;
    }
  }
  if (count == 0) throw DataError("pa_mpjpe: no valid joints");
  return total / static_cast<double>(count);
}

double pck3d(const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt,
             double threshold_mm) {
  check_matched(pred, gt, "pck3d");
  std::size_t correct = 0, count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (std::size_t j = 0; j < pred[i].joints.size(); ++j) {
      if (!joint_valid(pred[i], gt[i], j)) continue;
      const auto& p = pred[i].joints[j];
      const auto& g = gt[i].joints[j];
      const double d = std::sqrt((p[0] - g[0]) * (p[0] - g[0]) +
                                 (p[1] - g[1]) * (p[1] - g[1]) +
                                 (p[2] - g[2]) * (p[2] - g[2]));
      correct += d < threshold_mm;
      ++count;
    }
  if (count == 0) throw DataError("pck3d: no valid joints");
  return 100.0 * static_cast<double>(correct) / static_cast<double>(count);
}

RdReport rd_protocol_report(const std::vector<RdEvalEntry>& entries,
                            const std::vector<double>& thresholds) {
  RdReport report;
  for (bool masked : {false, true}) {
    bool any = false;
    for (const auto& e : entries) any = any || e.ankle_masked == masked;
    if (!any) continue;
    for (double t : thresholds) {
      RdReportCell cell;
      cell.masked = masked;
      cell.delta_s_threshold = t;
      std::vector<double> scores;
      std::vector<int> labels;
      for (const auto& e : entries) {
        if (e.ankle_masked != masked || e.delta_s > t) continue;
        scores.push_back(e.score);
        labels.push_back(e.label);
      }
      cell.count = scores.size();
      if (!scores.empty()) {
        BinaryEvalResult m = binary_metrics(scores, labels);
        const bool single_class = (m.tp + m.fn == 0) || (m.fp + m.tn == 0);
        if (!single_class) m.auc = auc(scores, labels);
        cell.metrics = std::move(m);
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

namespace {

std::string pct(const std::optional<double>& v) {
  if (!v) return "   n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%6.2f", *v * 100.0);
  return buf;
}

}  // namespace

std::string RdReport::to_table() const {
  std::string out = "protocol  RA  dS<=   n      AUC     Acc       P       R      F1\n";
  for (const auto& c : cells) {
    char head[64];
    std::snprintf(head, sizeof(head), "%-8s  %-2s  %4.1f  %-5zu", c.masked ? "rd-2" : "rd-1",
                  c.masked ? "y" : "n", c.delta_s_threshold, c.count);
    out += head;
    if (!c.metrics) {
      out += "     n/a     n/a     n/a     n/a     n/a\n";
      continue;
    }
    const auto& m = *c.metrics;
    out += "  " + pct(m.auc) + "  " + pct(m.accuracy) + "  " + pct(m.precision) + "  " +
           pct(m.recall) + "  " + pct(m.f1) + "\n";
  }
  return out;
}

std::vector<std::string> RdReport::to_records() const {
  std::vector<std::string> lines;
  for (const auto& c : cells) {
    nlohmann::ordered_json rec;
    rec["protocol"] = c.masked ? 2 : 1;
    rec["ankle_masked"] = c.masked;
    rec["delta_s_max"] = c.delta_s_threshold;
    rec["count"] = c.count;
    if (c.metrics) {
      const auto& m = *c.metrics;
      rec["auc"] = m.auc ? nlohmann::ordered_json(*m.auc) : nlohmann::ordered_json(nullptr);
      rec["accuracy"] = m.accuracy;
      rec["precision"] =
          m.precision ? nlohmann::ordered_json(*m.precision) : nlohmann::ordered_json(nullptr);
      rec["recall"] = m.recall ? nlohmann::ordered_json(*m.recall) : nlohmann::ordered_json(nullptr);
      rec["f1"] = m.f1 ? nlohmann::ordered_json(*m.f1) : nlohmann::ordered_json(nullptr);
    } else {
      rec["auc"] = nullptr;
    }
    lines.push_back(rec.dump());
  }
  return lines;
}

const SubjectSplit& subject_protocol_1() {
  static const SubjectSplit s{{"S1", "S5", "S6", "S7", "S8"}, {"S9", "S11"}, "mpjpe"};
  return s;
}

const SubjectSplit& subject_protocol_2() {
  static const SubjectSplit s{{"S1", "S5", "S6", "S7", "S8", "S9"}, {"S11"}, "pa_mpjpe"};
  return s;
}

const std::vector<std::string>& cross_action_protocol_actions() {
  static const std::vector<std::string> actions{
      "Directions", "Discussion", "Eating",  "Greeting", "Phoning",
      "Photo",      "Posing",     "Purchases", "Sitting", "SittingDown",
      "Smoking",    "Waiting",    "WalkDog", "Walking",  "WalkTogether"};
  return actions;
}

}  // namespace wspkit
