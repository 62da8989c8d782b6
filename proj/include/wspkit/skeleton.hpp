#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace wspkit {

enum class Visibility : std::uint8_t { absent = 0, occluded = 1, visible = 2 };

struct SkeletonSpec {
  std::vector<std::string> joint_names;
  int left_ankle = -1;
  int right_ankle = -1;
  int head_top = -1;
  int head_down = -1;
  std::vector<std::pair<int, int>> symmetric_pairs;

  int joint_count() const { return static_cast<int>(joint_names.size()); }
  void validate() const;  // named indices distinct and < J; J >= 4
};

// The 17-joint canonical skeleton every pipeline stage works in:
//   0 head_top      1 head_down (neck)  2 nose
//   3 left_shoulder 4 right_shoulder    5 left_elbow   6 right_elbow
//   7 left_wrist    8 right_wrist       9 left_hip    10 right_hip
//  11 left_knee    12 right_knee       13 left_ankle  14 right_ankle
//  15 left_eye     16 right_eye
const SkeletonSpec& canonical_skeleton();

// COCO source ordering (nose, eyes, ears, shoulders, elbows, wrists, hips,
// knees, ankles).
const SkeletonSpec& coco_skeleton();

// Source -> canonical joint table. Entries of -1 mark canonical joints the
// source lacks; head_top/head_down are then synthesized:
//   head_down = midpoint(left_shoulder, right_shoulder)
//   head_top  = nose + 0.5 * (nose - head_down)
// Synthesized joints are flagged occluded.
struct JointMapping {
  std::vector<int> source_index_of_canonical;  // length = canonical J
};

const JointMapping& coco_to_canonical();
JointMapping identity_mapping(const SkeletonSpec& skeleton);

}  // namespace wspkit
