#include "wspkit/skeleton.hpp"

#include <set>

#include "wspkit/errors.hpp"

namespace wspkit {

void SkeletonSpec::validate() const {
  const int j = joint_count();
  if (j < 4) throw DataError("skeleton needs at least 4 joints");
  std::set<int> named{left_ankle, right_ankle, head_top, head_down};
  if (named.size() != 4) throw DataError("skeleton named joints must be distinct");
  for (int idx : named)
    if (idx < 0 || idx >= j) throw DataError("skeleton named joint index out of range");
  for (auto [a, b] : symmetric_pairs)
    if (a < 0 || b < 0 || a >= j || b >= j || a == b)
      throw DataError("invalid symmetric pair in skeleton");
}

const SkeletonSpec& canonical_skeleton() {
  static const SkeletonSpec spec = [] {
    SkeletonSpec s;
    s.joint_names = {"head_top",   "head_down",     "nose",        "left_shoulder",
                     "right_shoulder", "left_elbow", "right_elbow", "left_wrist",
                     "right_wrist",    "left_hip",   "right_hip",   "left_knee",
                     "right_knee",     "left_ankle", "right_ankle", "left_eye",
                     "right_eye"};
    s.left_ankle = 13;
    s.right_ankle = 14;
    s.head_top = 0;
    s.head_down = 1;
    s.symmetric_pairs = {{3, 4}, {5, 6}, {7, 8}, {9, 10}, {11, 12}, {13, 14}, {15, 16}};
    s.validate();
    return s;
  }();
  return spec;
}

const SkeletonSpec& coco_skeleton() {
  static const SkeletonSpec spec = [] {
    SkeletonSpec s;
    s.joint_names = {"nose",          "left_eye",     "right_eye",  "left_ear",
                     "right_ear",     "left_shoulder", "right_shoulder", "left_elbow",
                     "right_elbow",   "left_wrist",   "right_wrist", "left_hip",
                     "right_hip",     "left_knee",    "right_knee",  "left_ankle",
                     "right_ankle"};
    s.left_ankle = 15;
    s.right_ankle = 16;
    // COCO has no head joints; nose / left ear stand in so validation passes.
    // head_top / head_down are synthesized during remapping.
    s.head_top = 0;
    s.head_down = 3;
    s.symmetric_pairs = {{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}, {11, 12}, {13, 14}, {15, 16}};
    s.validate();
    return s;
  }();
  return spec;
}

const JointMapping& coco_to_canonical() {
  static const JointMapping m = [] {
    JointMapping mapping;
    // canonical:      ht  hd  nose lsh rsh lel rel lwr rwr lhip rhip lkn rkn lank rank leye reye
    mapping.source_index_of_canonical = {-1, -1, 0, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 1, 2};
    return mapping;
  }();
  return m;
}

JointMapping identity_mapping(const SkeletonSpec& skeleton) {
  JointMapping m;
  m.source_index_of_canonical.resize(skeleton.joint_count());
  for (int i = 0; i < skeleton.joint_count(); ++i) m.source_index_of_canonical[i] = i;
  return m;
}

}  // namespace wspkit
