#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "wspkit/anno.hpp"
#include "wspkit/pose_types.hpp"
#include "wspkit/rng.hpp"
#include "wspkit/tensor.hpp"

namespace wspkit {

struct CameraModel {
  double focal = 150.0;  // px
  double cx = 64.0;
  double cy = 64.0;
  double height_mm = 1600.0;  // camera height above the ground plane
  double pitch_rad = 0.0;     // 0 = horizontal, positive tilts down
  int image_w = 128;
  int image_h = 128;
};

// World frame: x right, y up (ground plane y = 0), z away from the camera,
// camera at (0, height_mm, 0). Camera frame: x right, y down, z forward.
std::array<double, 3> world_to_camera(const std::array<double, 3>& world_mm,
                                      const CameraModel& cam);

// Pinhole projection to pixels; image y grows downward. Throws NumericError
// for points at or behind the camera plane.
std::array<double, 2> project(const std::array<double, 3>& world_mm, const CameraModel& cam);

struct StickPerson {
  double root_x = 0.0;  // ground position, mm
  double root_z = 0.0;
  double height_mm = 1700.0;
  bool standing = true;
  std::vector<std::array<double, 3>> joints_world;  // canonical order, world mm
};

struct SyntheticScene {
  CameraModel camera;
  std::vector<StickPerson> persons;
  std::uint64_t seed = 0;
};

struct SceneConfig {
  CameraModel camera;
  int min_persons = 2;
  int max_persons = 3;
  double depth_min_mm = 3900.0;
  double depth_max_mm = 8500.0;
  double height_min_mm = 1550.0;
  double height_max_mm = 1850.0;
  bool standing = true;       // ankles pinned to the ground plane at the root depth
  double tie_injection = 0.0;  // probability of duplicating an earlier person's depth
  int max_retries = 200;
};

// Seeded scene with randomized placement and limb articulation; every joint
// projects inside the camera frame. Throws DataError when no feasible
// placement is found within max_retries.
SyntheticScene generate_scene(Rng& rng, const SceneConfig& cfg);

struct RenderResult {
  Tensor image;  // (1, H, W), values in [0, 1]
  ImageAnnotation annotation;
  std::vector<Pose3D> poses_camera;                 // root-relative camera mm
  std::vector<std::array<double, 3>> roots_camera;  // mid-hip in camera mm
};

// Anti-aliased stick-figure rendering, painter's order by depth, segment
// thickness proportional to focal / depth (the apparent-size cue).
// Annotation joints are the exact projections.
RenderResult render(const SyntheticScene& scene, int res_w, int res_h);

// Ground truth the perspective rule approximates: 1 iff the camera-space
// root depth of person a is <= that of person b.
int true_depth_label(const SyntheticScene& scene, std::size_t a, std::size_t b);

// Camera-space root depth (mid-hip z) of one person.
double root_camera_depth(const SyntheticScene& scene, std::size_t person);

struct CorpusConfig {
  SceneConfig scene;
  int count = 100;
  std::uint64_t seed = 0;
  int resolution = 128;
};

// Writes images/scene_NNNNNN.pgm, manifest.jsonl (canonical records) and
// gt3d.jsonl (one record per person: root_cam, root-relative joints_cam).
void write_corpus(const std::filesystem::path& out_dir, const CorpusConfig& cfg);

struct Gt3dRecord {
  std::int64_t image_id = 0;
  std::int64_t person_id = 0;
  std::array<double, 3> root_cam{};
  Pose3D joints_cam_rel;
};

std::vector<Gt3dRecord> read_gt3d(const std::filesystem::path& path);

}  // namespace wspkit
