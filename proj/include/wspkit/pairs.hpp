#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "wspkit/anno.hpp"
#include "wspkit/tensor.hpp"

namespace wspkit {

// 1 means person A is closer to (or tied with) the camera than person B for
// every joint; the single bit is shared across all J joints of the pair.
struct RelativeDepthLabel {
  int value = 0;
};

struct PairSample {
  std::string image_ref;
  std::int64_t image_id = 0;
  PersonInstance person_a;        // crop-frame coordinates
  PersonInstance person_b;        // crop-frame coordinates
  std::array<int, 4> crop_box{};  // original frame, whole pixels
  RelativeDepthLabel label;
  double delta_s = 0.0;
  bool ankle_masked = false;
  std::uint64_t seed = 0;
};

struct PairBuildConfig {
  double crop_padding_ratio = 0.2;  // fraction of the union-bbox diagonal
  int pairs_per_image = 2;
  std::uint64_t rng_seed = 0;
  double tie_epsilon = 0.0;  // pairs with |anchor gap| <= eps are dropped when > 0
};

// Largest image-Y over the annotated ankles: the lower ankle in the image,
// treated as the person's ground contact.
double ankle_anchor(const PersonInstance& p, const SkeletonSpec& skeleton);

// 1 iff ankle_anchor(a) >= ankle_anchor(b); ties label 1.
RelativeDepthLabel relative_depth_label(const PersonInstance& a, const PersonInstance& b,
                                        const SkeletonSpec& skeleton);

// Head segment length in pixels.
double person_scale(const PersonInstance& p, const SkeletonSpec& skeleton);

// |S_A - S_B| / max(S_A, S_B), in [0, 1].
double scale_gap_ratio(const PersonInstance& a, const PersonInstance& b,
                       const SkeletonSpec& skeleton);

// Samples up to pairs_per_image distinct unordered person pairs, crops to the
// padded union of their boxes and joints, and re-expresses coordinates in the
// crop frame. Deterministic given cfg.rng_seed (per-image stream).
std::vector<PairSample> build_pairs(const ImageAnnotation& img, const PairBuildConfig& cfg,
                                    const SkeletonSpec& skeleton, const std::string& image_ref);

// Zeroes a square (side = 15% of the owning person's bbox height) around
// every annotated ankle of both persons in the crop pixels, and marks the
// sample. With null pixels only the flag is recorded for render-time
// application. Idempotent; annotations are untouched.
PairSample mask_ankles(PairSample s, Tensor* crop_pixels, const SkeletonSpec& skeleton);

// bucket(t) = indices of samples with delta_s <= t; buckets nest.
std::map<double, std::vector<std::size_t>> bucket_by_delta_s(
    const std::vector<PairSample>& samples,
    const std::vector<double>& thresholds = {1.0, 0.5, 0.3, 0.1});

// Pair manifest: one JSON record per line with fields
// {image_ref, crop_box, person_a, person_b, label, delta_s, ankle_masked, seed}.
std::string pair_record(const PairSample& s);
PairSample parse_pair_record(const std::string& line);
void write_pair_manifest(const std::filesystem::path& path, const std::vector<PairSample>& pairs);
std::vector<PairSample> read_pair_manifest(const std::filesystem::path& path);

}  // namespace wspkit
