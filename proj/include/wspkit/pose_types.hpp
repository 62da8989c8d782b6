#pragma once

#include <array>
#include <vector>

namespace wspkit {

// J camera-space joint coordinates in millimeters (root-relative unless a
// caller says otherwise), with per-joint validity.
struct Pose3D {
  std::vector<std::array<double, 3>> joints;
  std::vector<bool> valid;

  static Pose3D all_valid(std::vector<std::array<double, 3>> joints_mm) {
    Pose3D p;
    p.valid.assign(joints_mm.size(), true);
    p.joints = std::move(joints_mm);
    return p;
  }
};

}  // namespace wspkit
