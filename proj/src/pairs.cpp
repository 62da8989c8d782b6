#include "wspkit/pairs.hpp"

#include <algorithm>
#include <cmath>

#include "wspkit/errors.hpp"
#include "wspkit/io.hpp"
#include "wspkit/rng.hpp"
#include "json_util.hpp"

namespace wspkit {

using ordered_json = nlohmann::ordered_json;

double ankle_anchor(const PersonInstance& p, const SkeletonSpec& skeleton) {
  bool found = false;
  double anchor = 0.0;
  for (int idx : {skeleton.left_ankle, skeleton.right_ankle}) {
    if (!p.annotated(idx)) continue;
    anchor = found ? std::max(anchor, p.joints[idx][1]) : p.joints[idx][1];
    found = true;
  }
  if (!found)
    throw DataError("person " + std::to_string(p.person_id) + " has no annotated ankle");
  return anchor;
}

RelativeDepthLabel relative_depth_label(const PersonInstance& a, const PersonInstance& b,
                                        const SkeletonSpec& skeleton) {
  return RelativeDepthLabel{ankle_anchor(a, skeleton) >= ankle_anchor(b, skeleton) ? 1 : 0};
}

double person_scale(const PersonInstance& p, const SkeletonSpec& skeleton) {
  if (!p.annotated(skeleton.head_top) || !p.annotated(skeleton.head_down))
    throw DataError("person " + std::to_string(p.person_id) +
                    " lacks head joints needed for scale");
  const auto& ht = p.joints[skeleton.head_top];
  const auto& hd = p.joints[skeleton.head_down];
  return std::hypot(ht[0] - hd[0], ht[1] - hd[1]);
}

double scale_gap_ratio(const PersonInstance& a, const PersonInstance& b,
                       const SkeletonSpec& skeleton) {
  const double sa = person_scale(a, skeleton);
  const double sb = person_scale(b, skeleton);
  const double mx = std::max(sa, sb);
  if (mx <= 0.0) throw NumericError("scale gap ratio undefined: both person scales are zero");
  return std::abs(sa - sb) / mx;
}

namespace {

void translate_person(PersonInstance& p, double dx, double dy) {
  for (auto& xy : p.joints) {
    xy[0] += dx;
    xy[1] += dy;
  }
  p.bbox[0] += dx;
  p.bbox[1] += dy;
}

}  // namespace

std::vector<PairSample> build_pairs(const ImageAnnotation& img, const PairBuildConfig& cfg,
                                    const SkeletonSpec& skeleton, const std::string& image_ref) {
  if (cfg.pairs_per_image < 1) throw DataError("pairs_per_image must be >= 1");
  if (cfg.crop_padding_ratio < 0.0) throw DataError("crop_padding_ratio must be >= 0");
  const std::size_t n = img.persons.size();
  if (n < 2)
    throw DataError("image " + std::to_string(img.image_id) +
                    ": fewer than 2 persons, cannot build pairs");

  const std::uint64_t stream_seed = derive_seed(cfg.rng_seed, std::uint64_t(img.image_id));
  Rng rng(stream_seed);

  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) candidates.push_back({i, j});
  rng.shuffle(candidates);

  std::vector<PairSample> out;
  for (const auto& [i, j] : candidates) {
    if (out.size() >= static_cast<std::size_t>(cfg.pairs_per_image)) break;
    std::size_t ia = i, ib = j;
    if (rng.bernoulli(0.5)) std::swap(ia, ib);
    const PersonInstance& a = img.persons[ia];
    const PersonInstance& b = img.persons[ib];

    const double anchor_gap =
        std::abs(ankle_anchor(a, skeleton) - ankle_anchor(b, skeleton));
    if (cfg.tie_epsilon > 0.0 && anchor_gap <= cfg.tie_epsilon) continue;

    // Crop bounds: union of both bboxes and all joint positions, padded by a
    // fraction of the union diagonal, clipped, and snapped to whole pixels.
    double x0 = std::min(a.bbox[0], b.bbox[0]);
    double y0 = std::min(a.bbox[1], b.bbox[1]);
    double x1 = std::max(a.bbox[0] + a.bbox[2], b.bbox[0] + b.bbox[2]);
    double y1 = std::max(a.bbox[1] + a.bbox[3], b.bbox[1] + b.bbox[3]);
    for (const PersonInstance* p : {&a, &b})
      for (std::size_t k = 0; k < p->joints.size(); ++k) {
        if (!p->annotated(static_cast<int>(k))) continue;
        x0 = std::min(x0, p->joints[k][0]);
        y0 = std::min(y0, p->joints[k][1]);
        x1 = std::max(x1, p->joints[k][0]);
        y1 = std::max(y1, p->joints[k][1]);
      }
    const double pad = cfg.crop_padding_ratio * std::hypot(x1 - x0, y1 - y0);
    const int cx0 = std::max(0, static_cast<int>(std::floor(x0 - pad)));
    const int cy0 = std::max(0, static_cast<int>(std::floor(y0 - pad)));
    const int cx1 = std::min(img.width, static_cast<int>(std::ceil(x1 + pad)));
    const int cy1 = std::min(img.height, static_cast<int>(std::ceil(y1 + pad)));

    PairSample s;
    s.image_ref = image_ref;
    s.image_id = img.image_id;
    s.crop_box = {cx0, cy0, cx1 - cx0, cy1 - cy0};
    s.person_a = a;
    s.person_b = b;
    translate_person(s.person_a, -cx0, -cy0);
    translate_person(s.person_b, -cx0, -cy0);
    s.label = relative_depth_label(s.person_a, s.person_b, skeleton);
    s.delta_s = scale_gap_ratio(s.person_a, s.person_b, skeleton);
    s.seed = stream_seed;
    out.push_back(std::move(s));
  }
  return out;
}

PairSample mask_ankles(PairSample s, Tensor* crop_pixels, const SkeletonSpec& skeleton) {
  if (crop_pixels) {
    const int H = static_cast<int>(crop_pixels->extent(1));
    const int W = static_cast<int>(crop_pixels->extent(2));
    for (const PersonInstance* p : {&s.person_a, &s.person_b}) {
      const double side = 0.15 * p->bbox[3];
      for (int idx : {skeleton.left_ankle, skeleton.right_ankle}) {
        if (!p->annotated(idx)) continue;
        const double ax = p->joints[idx][0], ay = p->joints[idx][1];
        const int mx0 = std::max(0, static_cast<int>(std::floor(ax - side / 2)));
        const int my0 = std::max(0, static_cast<int>(std::floor(ay - side / 2)));
        const int mx1 = std::min(W, static_cast<int>(std::ceil(ax + side / 2)));
        const int my1 = std::min(H, static_cast<int>(std::ceil(ay + side / 2)));
        for (int y = my0; y < my1; ++y)
          for (int x = mx0; x < mx1; ++x) crop_pixels->at3(0, y, x) = 0.0;
      }
    }
  }
  s.ankle_masked = true;
  return s;
}

std::map<double, std::vector<std::size_t>> bucket_by_delta_s(
    const std::vector<PairSample>& samples, const std::vector<double>& thresholds) {
  std::map<double, std::vector<std::size_t>> buckets;
  for (double t : thresholds) {
    auto& bucket = buckets[t];
    for (std::size_t i = 0; i < samples.size(); ++i)
      if (samples[i].delta_s <= t) bucket.push_back(i);
  }
  return buckets;
}

std::string pair_record(const PairSample& s) {
  ordered_json rec;
  rec["image_ref"] = s.image_ref;
  rec["image_id"] = s.image_id;
  rec["crop_box"] = s.crop_box;
  rec["person_a"] = detail::person_to_json(s.person_a);
  rec["person_b"] = detail::person_to_json(s.person_b);
  rec["label"] = s.label.value;
  rec["delta_s"] = s.delta_s;
  rec["ankle_masked"] = s.ankle_masked;
  rec["seed"] = s.seed;
  return rec.dump();
}

PairSample parse_pair_record(const std::string& line) {
  ordered_json rec;
  try {
    rec = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("pair record parse error at byte " + std::to_string(e.byte) + ": " +
                    e.what());
  }
  PairSample s;
  s.image_ref = rec.at("image_ref").get<std::string>();
  s.image_id = rec.at("image_id").get<std::int64_t>();
  const auto& cb = rec.at("crop_box");
  s.crop_box = {cb.at(0).get<int>(), cb.at(1).get<int>(), cb.at(2).get<int>(),
                cb.at(3).get<int>()};
  s.person_a = detail::person_from_json(rec.at("person_a"));
  s.person_b = detail::person_from_json(rec.at("person_b"));
  s.label.value = rec.at("label").get<int>();
  s.delta_s = rec.at("delta_s").get<double>();
  s.ankle_masked = rec.at("ankle_masked").get<bool>();
  s.seed = rec.at("seed").get<std::uint64_t>();
  return s;
}

void write_pair_manifest(const std::filesystem::path& path,
                         const std::vector<PairSample>& pairs) {
  std::string out;
  for (const auto& s : pairs) {
    out += pair_record(s);
    out += '\n';
  }
  atomic_write_file(path, out);
}

std::vector<PairSample> read_pair_manifest(const std::filesystem::path& path) {
  std::vector<PairSample> out;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    out.push_back(parse_pair_record(line));
  }
  return out;
}

}  // namespace wspkit
