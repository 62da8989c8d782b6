#include "wspkit/synth.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "wspkit/errors.hpp"
#include "wspkit/io.hpp"

namespace wspkit {

using ordered_json = nlohmann::ordered_json;

std::array<double, 3> world_to_camera(const std::array<double, 3>& w, const CameraModel& cam) {
  const double vx = w[0];
  const double vy = w[1] - cam.height_mm;
  const double vz = w[2];
  const double c = std::cos(cam.pitch_rad), s = std::sin(cam.pitch_rad);
  return {vx, -vy * c - vz * s, -vy * s + vz * c};
}

std::array<double, 2> project(const std::array<double, 3>& world_mm, const CameraModel& cam) {
  const auto p = world_to_camera(world_mm, cam);
  if (p[2] <= 1e-9) throw NumericError("projection of a point at or behind the camera plane");
  return {cam.focal * p[0] / p[2] + cam.cx, cam.focal * p[1] / p[2] + cam.cy};
}

namespace {

// Canonical joint indices (see skeleton.hpp).
constexpr int kHeadTop = 0, kHeadDown = 1, kNose = 2;
constexpr int kLSho = 3, kRSho = 4, kLElb = 5, kRElb = 6, kLWri = 7, kRWri = 8;
constexpr int kLHip = 9, kRHip = 10, kLKnee = 11, kRKnee = 12;
constexpr int kLAnk = 13, kRAnk = 14, kLEye = 15, kREye = 16;

// Stick-figure edges used by the renderer.
constexpr std::pair<int, int> kEdges[] = {
    {kHeadTop, kHeadDown}, {kNose, kHeadDown},  {kLEye, kNose},   {kREye, kNose},
    {kLSho, kRSho},        {kHeadDown, kLSho},  {kHeadDown, kRSho},
    {kLSho, kLElb},        {kLElb, kLWri},      {kRSho, kRElb},   {kRElb, kRWri},
    {kLSho, kLHip},        {kRSho, kRHip},      {kLHip, kRHip},
    {kLHip, kLKnee},       {kLKnee, kLAnk},     {kRHip, kRKnee},  {kRKnee, kRAnk}};

// Random limb articulation in person-local coordinates (x lateral, y up,
// z depth). Standing persons keep both ankles exactly on the ground plane at
// the root depth, which is what makes the perspective rule exact at pitch 0.
StickPerson make_person(Rng& rng, double root_x, double root_z, double h, bool standing) {
  StickPerson p;
  p.root_x = root_x;
  p.root_z = root_z;
  p.height_mm = h;
  p.standing = standing;
  std::vector<std::array<double, 3>> j(17, {0.0, 0.0, 0.0});

  const double stance = rng.uniform(0.05, 0.13) * h;
  const double sway = rng.uniform(-0.03, 0.03) * h;
  const double torso_z = rng.uniform(-0.02, 0.02) * h;

  j[kLAnk] = {-stance, 0.0, 0.0};
  j[kRAnk] = {stance, 0.0, 0.0};
  if (!standing) {
    for (int a : {kLAnk, kRAnk}) {
      j[a][1] += rng.uniform(0.0, 0.25) * h;
      j[a][2] += rng.uniform(-0.15, 0.15) * h;
    }
  }

  j[kLHip] = {-0.065 * h, 0.52 * h, 0.0};
  j[kRHip] = {0.065 * h, 0.52 * h, 0.0};
  for (auto [knee, hip, ank] : {std::array{kLKnee, kLHip, kLAnk}, std::array{kRKnee, kRHip, kRAnk}}) {
    j[knee] = {(j[hip][0] + j[ank][0]) / 2 + rng.uniform(-0.02, 0.02) * h,
               (j[hip][1] + j[ank][1]) / 2,
               (j[hip][2] + j[ank][2]) / 2 + rng.uniform(-0.04, 0.04) * h};
  }

  j[kLSho] = {-0.115 * h + sway, 0.80 * h, torso_z};
  j[kRSho] = {0.115 * h + sway, 0.80 * h, torso_z};
  j[kHeadDown] = {sway, 0.86 * h, torso_z};
  j[kHeadTop] = {sway + rng.uniform(-0.015, 0.015) * h, 1.00 * h, torso_z};
  const double nose_fwd = rng.uniform(0.0, 0.045) * h;
  j[kNose] = {sway + rng.uniform(-0.02, 0.02) * h, 0.93 * h, torso_z - nose_fwd};
  j[kLEye] = {j[kNose][0] - 0.025 * h, 0.95 * h, torso_z - nose_fwd / 2};
  j[kREye] = {j[kNose][0] + 0.025 * h, 0.95 * h, torso_z - nose_fwd / 2};

  const double upper = 0.17 * h, fore = 0.155 * h;
  for (auto [sho, elb, wri, side] :
       {std::array{kLSho, kLElb, kLWri, -1}, std::array{kRSho, kRElb, kRWri, 1}}) {
    for (auto [from, to, len] : {std::array<double, 3>{double(sho), double(elb), upper},
                                 std::array<double, 3>{double(elb), double(wri), fore}}) {
      const double phi = rng.uniform(0.0, 0.45 * 3.14159265358979323846);  // from straight down
      const double az = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
      const int f = static_cast<int>(from), t = static_cast<int>(to);
      j[t] = {j[f][0] + side * len * std::sin(phi) * std::abs(std::cos(az)),
              j[f][1] - len * std::cos(phi), j[f][2] + len * std::sin(phi) * std::sin(az)};
    }
  }

  for (auto& xyz : j) {
    xyz[0] += root_x;
    xyz[2] += root_z;
  }
  p.joints_world = std::move(j);
  return p;
}

bool all_in_frame(const StickPerson& p, const CameraModel& cam, double margin) {
  for (const auto& w : p.joints_world) {
    const auto c = world_to_camera(w, cam);
    if (c[2] <= 1.0) return false;
    const double u = cam.focal * c[0] / c[2] + cam.cx;
    const double v = cam.focal * c[1] / c[2] + cam.cy;
    if (u < margin || v < margin || u > cam.image_w - margin || v > cam.image_h - margin)
      return false;
  }
  return true;
}

}  // namespace

SyntheticScene generate_scene(Rng& rng, const SceneConfig& cfg) {
  if (cfg.min_persons < 2 || cfg.max_persons < cfg.min_persons)
    throw DataError("scene config needs at least 2 persons");
  if (cfg.depth_max_mm <= cfg.depth_min_mm || cfg.height_max_mm < cfg.height_min_mm)
    throw DataError("scene config ranges are empty");

  SyntheticScene scene;
  scene.camera = cfg.camera;
  const int count =
      cfg.min_persons + static_cast<int>(rng.uniform_index(cfg.max_persons - cfg.min_persons + 1));

  for (int i = 0; i < count; ++i) {
    const double h = rng.uniform(cfg.height_min_mm, cfg.height_max_mm);
    const bool tied = !scene.persons.empty() && rng.bernoulli(cfg.tie_injection);
    double z = tied ? scene.persons[rng.uniform_index(scene.persons.size())].root_z
                    : rng.uniform(cfg.depth_min_mm, cfg.depth_max_mm);

    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_retries && !placed; ++attempt) {
      if (attempt > 0 && !tied) z = rng.uniform(cfg.depth_min_mm, cfg.depth_max_mm);
      // Lateral range keeping the whole body inside the frustum at depth z.
      const double margin = 2.0;
      const double body_half = 0.45 * h;
      const double lo = (margin - cfg.camera.cx) * z / cfg.camera.focal + body_half;
      const double hi = (cfg.camera.image_w - margin - cfg.camera.cx) * z / cfg.camera.focal -
                        body_half;
      const double x = lo < hi ? rng.uniform(lo, hi) : 0.0;
      StickPerson p = make_person(rng, x, z, h, cfg.standing);
      if (all_in_frame(p, cfg.camera, 2.0)) {
        scene.persons.push_back(std::move(p));
        placed = true;
      }
    }
    if (!placed)
      throw DataError("generate_scene: no feasible placement after " +
                      std::to_string(cfg.max_retries) + " retries");
  }
  return scene;
}

namespace {

void draw_segment(Tensor& img, std::array<double, 2> a, std::array<double, 2> b, double radius,
                  double intensity) {
  const int H = static_cast<int>(img.extent(1)), W = static_cast<int>(img.extent(2));
  const double r = std::max(radius, 0.45);
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a[0], b[0]) - r - 1)));
  const int x1 = std::min(W - 1, static_cast<int>(std::ceil(std::max(a[0], b[0]) + r + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a[1], b[1]) - r - 1)));
  const int y1 = std::min(H - 1, static_cast<int>(std::ceil(std::max(a[1], b[1]) + r + 1)));
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  const double len2 = dx * dx + dy * dy;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5 - a[0], py = y + 0.5 - a[1];
      double t = len2 > 0.0 ? std::clamp((px * dx + py * dy) / len2, 0.0, 1.0) : 0.0;
      const double ex = px - t * dx, ey = py - t * dy;
      const double d = std::hypot(ex, ey);
      const double cov = std::clamp(r + 0.5 - d, 0.0, 1.0) * intensity;
      if (cov > img.at3(0, y, x)) img.at3(0, y, x) = cov;
    }
}

// Depth shading: nearer segments render brighter. Together with the
// thickness rule this is the second appearance cue tied to depth, and it
// disambiguates the sign of within-person depth offsets that pure stick
// geometry leaves open.
double depth_intensity(double z_mm) {
  const double ref = 3600.0;
  return std::clamp(std::pow(ref / z_mm, 1.5), 0.15, 1.0);
}

}  // namespace

RenderResult render(const SyntheticScene& scene, int res_w, int res_h) {
  if (res_w < 32 || res_h < 32) throw DataError("render resolution must be at least 32x32");
  const CameraModel& cam0 = scene.camera;
  CameraModel cam = cam0;
  const double sx = static_cast<double>(res_w) / cam0.image_w;
  const double sy = static_cast<double>(res_h) / cam0.image_h;
  cam.focal = cam0.focal * sx;  // uniform pixel scale; callers keep aspect
  cam.cx = cam0.cx * sx;
  cam.cy = cam0.cy * sy;
  cam.image_w = res_w;
  cam.image_h = res_h;

  RenderResult out;
  out.image = Tensor({1, static_cast<std::size_t>(res_h), static_cast<std::size_t>(res_w)});
  out.annotation.image_id = 0;
  out.annotation.width = res_w;
  out.annotation.height = res_h;

  // Painter's order: farthest first.
  std::vector<std::size_t> order(scene.persons.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return root_camera_depth(scene, a) > root_camera_depth(scene, b);
  });

  for (std::size_t oi : order) {
    const StickPerson& p = scene.persons[oi];
    std::vector<std::array<double, 2>> px(p.joints_world.size());
    std::vector<double> depth(p.joints_world.size());
    for (std::size_t k = 0; k < p.joints_world.size(); ++k) {
      const auto c = world_to_camera(p.joints_world[k], cam);
      depth[k] = c[2];
      px[k] = {cam.focal * c[0] / c[2] + cam.cx, cam.focal * c[1] / c[2] + cam.cy};
    }
    for (auto [a, b] : kEdges) {
      const double z = (depth[a] + depth[b]) / 2.0;
      draw_segment(out.image, px[a], px[b], cam.focal * 30.0 / z, depth_intensity(z));
    }
    // Head disc, radius tied to the projected head size.
    const double head_r = 0.55 * std::hypot(px[kHeadTop][0] - px[kNose][0],
                                            px[kHeadTop][1] - px[kNose][1]);
    std::array<double, 2> head_c = {(px[kHeadTop][0] + px[kNose][0]) / 2,
                                    (px[kHeadTop][1] + px[kNose][1]) / 2};
    draw_segment(out.image, head_c, head_c, head_r,
                 depth_intensity((depth[kHeadTop] + depth[kNose]) / 2.0));
  }

  for (std::size_t i = 0; i < scene.persons.size(); ++i) {
    const StickPerson& p = scene.persons[i];
    PersonInstance inst;
    inst.person_id = static_cast<std::int64_t>(i);
    inst.joints.resize(p.joints_world.size());
    inst.visibility.assign(p.joints_world.size(), Visibility::visible);
    double x0 = 1e30, y0 = 1e30, x1 = -1e30, y1 = -1e30;
    for (std::size_t k = 0; k < p.joints_world.size(); ++k) {
      inst.joints[k] = project(p.joints_world[k], cam);
      x0 = std::min(x0, inst.joints[k][0]);
      y0 = std::min(y0, inst.joints[k][1]);
      x1 = std::max(x1, inst.joints[k][0]);
      y1 = std::max(y1, inst.joints[k][1]);
    }
    const double pad = 0.04 * std::hypot(x1 - x0, y1 - y0);
    x0 = std::max(0.0, x0 - pad);
    y0 = std::max(0.0, y0 - pad);
    x1 = std::min(static_cast<double>(res_w), x1 + pad);
    y1 = std::min(static_cast<double>(res_h), y1 + pad);
    inst.bbox = {x0, y0, x1 - x0, y1 - y0};
    out.annotation.persons.push_back(std::move(inst));

    const auto mid_hip_world = std::array<double, 3>{
        (p.joints_world[kLHip][0] + p.joints_world[kRHip][0]) / 2,
        (p.joints_world[kLHip][1] + p.joints_world[kRHip][1]) / 2,
        (p.joints_world[kLHip][2] + p.joints_world[kRHip][2]) / 2};
    const auto root_cam = world_to_camera(mid_hip_world, cam);
    Pose3D pose;
    pose.valid.assign(p.joints_world.size(), true);
    pose.joints.resize(p.joints_world.size());
    for (std::size_t k = 0; k < p.joints_world.size(); ++k) {
      const auto c = world_to_camera(p.joints_world[k], cam);
      pose.joints[k] = {c[0] - root_cam[0], c[1] - root_cam[1], c[2] - root_cam[2]};
    }
    out.poses_camera.push_back(std::move(pose));
    out.roots_camera.push_back(root_cam);
  }
  return out;
}

double root_camera_depth(const SyntheticScene& scene, std::size_t person) {
  const StickPerson& p = scene.persons.at(person);
  const std::array<double, 3> mid_hip = {
      (p.joints_world[kLHip][0] + p.joints_world[kRHip][0]) / 2,
      (p.joints_world[kLHip][1] + p.joints_world[kRHip][1]) / 2,
      (p.joints_world[kLHip][2] + p.joints_world[kRHip][2]) / 2};
  return world_to_camera(mid_hip, scene.camera)[2];
}

int true_depth_label(const SyntheticScene& scene, std::size_t a, std::size_t b) {
  return root_camera_depth(scene, a) <= root_camera_depth(scene, b) ? 1 : 0;
}

void write_corpus(const std::filesystem::path& out_dir, const CorpusConfig& cfg) {
  std::filesystem::create_directories(out_dir / "images");
  std::vector<ImageAnnotation> manifest(cfg.count);
  std::vector<std::string> gt_lines(cfg.count);

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < cfg.count; ++i) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    SyntheticScene scene = generate_scene(rng, cfg.scene);
    RenderResult r = render(scene, cfg.resolution, cfg.resolution);
    char name[64];
    std::snprintf(name, sizeof(name), "images/scene_%06d.pgm", i + 1);
    r.annotation.image_id = i + 1;
    r.annotation.file_name = name;
    write_pgm(out_dir / name, r.image);

    std::string lines;
    for (std::size_t k = 0; k < r.poses_camera.size(); ++k) {
      ordered_json rec;
      rec["image_id"] = i + 1;
      rec["person_id"] = static_cast<std::int64_t>(k);
      rec["root_cam"] = r.roots_camera[k];
      ordered_json joints = ordered_json::array();
      for (const auto& xyz : r.poses_camera[k].joints) joints.push_back({xyz[0], xyz[1], xyz[2]});
      rec["joints_cam_rel"] = std::move(joints);
      lines += rec.dump();
      lines += '\n';
    }
    manifest[i] = std::move(r.annotation);
    gt_lines[i] = std::move(lines);
  }

  write_manifest(out_dir / "manifest.jsonl", manifest);
  std::string gt;
  for (auto& l : gt_lines) gt += l;
  atomic_write_file(out_dir / "gt3d.jsonl", gt);
}

std::vector<Gt3dRecord> read_gt3d(const std::filesystem::path& path) {
  std::vector<Gt3dRecord> out;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    ordered_json rec = ordered_json::parse(line);
    Gt3dRecord g;
    g.image_id = rec.at("image_id").get<std::int64_t>();
    g.person_id = rec.at("person_id").get<std::int64_t>();
    const auto& rc = rec.at("root_cam");
    g.root_cam = {rc.at(0).get<double>(), rc.at(1).get<double>(), rc.at(2).get<double>()};
    for (const auto& xyz : rec.at("joints_cam_rel"))
      g.joints_cam_rel.joints.push_back(
          {xyz.at(0).get<double>(), xyz.at(1).get<double>(), xyz.at(2).get<double>()});
    g.joints_cam_rel.valid.assign(g.joints_cam_rel.joints.size(), true);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace wspkit
