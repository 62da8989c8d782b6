#include <doctest.h>

#include <cmath>

#include "wspkit/errors.hpp"
#include "wspkit/metrics.hpp"
#include "wspkit/nn/gradcheck.hpp"
#include "wspkit/pose3d.hpp"

using namespace wspkit;

namespace {

Pose3dConfig tiny3d() {
  Pose3dConfig cfg;
  cfg.base.joints = 4;
  cfg.base.feature_dim = 6;
  cfg.base.selected_joints = 1;
  cfg.base.input_size = 16;
  cfg.base.heatmap_size = 8;
  cfg.base.rd_hidden = 4;
  cfg.base.backbone_channels = {4, 6};
  cfg.depth_bins = 5;
  return cfg;
}

// Marginalize in a chosen axis order, integrating one axis at a time; used
// as the order-permutation oracle for the integral.
std::array<double, 3> coords_by_order(const Tensor& probs, std::size_t joint, int order) {
  const std::size_t dz = probs.extent(1), h = probs.extent(2), w = probs.extent(3);
  std::array<double, 3> out{0, 0, 0};
  auto p = [&](std::size_t z, std::size_t y, std::size_t x) {
    return probs.at4(joint, z, y, x);
  };
  // three marginal sums computed with different loop nestings
  for (int axis = 0; axis < 3; ++axis) {
    double acc = 0.0;
    if (order == 0) {
      for (std::size_t z = 0; z < dz; ++z)
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x)
            acc += p(z, y, x) * (axis == 0 ? double(x) : axis == 1 ? double(y) : double(z));
    } else if (order == 1) {
      for (std::size_t x = 0; x < w; ++x)
        for (std::size_t z = 0; z < dz; ++z)
          for (std::size_t y = 0; y < h; ++y)
            acc += p(z, y, x) * (axis == 0 ? double(x) : axis == 1 ? double(y) : double(z));
    } else {
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
          for (std::size_t z = 0; z < dz; ++z)
            acc += p(z, y, x) * (axis == 0 ? double(x) : axis == 1 ? double(y) : double(z));
    }
    out[axis] = acc;
  }
  return out;
}

}  // namespace

TEST_CASE("integral_3d: uniform map gives the volume center") {
  Tensor hm({2, 5, 8, 8});
  hm.fill(0.3);
  auto r = integral_3d(hm);
  for (const auto& c : r.coords) {
    CHECK(c[0] == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(c[1] == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(c[2] == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("integral_3d: dominant voxel saturates to its center") {
  Tensor hm({1, 4, 6, 6});
  hm.at4(0, 2, 4, 1) = 60.0;  // exceeds the rest by >= 50 pre-softmax
  auto r = integral_3d(hm);
  CHECK(std::abs(r.coords[0][0] - 1.0) < 1e-9);
  CHECK(std::abs(r.coords[0][1] - 4.0) < 1e-9);
  CHECK(std::abs(r.coords[0][2] - 2.0) < 1e-9);
}

TEST_CASE("integral_3d: two equal peaks land at the midpoint") {
  Tensor hm({1, 4, 6, 6});
  hm.at4(0, 1, 2, 2) = 80.0;
  hm.at4(0, 3, 4, 4) = 80.0;
  auto r = integral_3d(hm);
  CHECK(r.coords[0][0] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(r.coords[0][1] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(r.coords[0][2] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("integral_3d: shift invariance and convex-hull bounds") {
  Rng rng(3);
  Tensor hm({3, 4, 5, 5});
  for (std::size_t i = 0; i < hm.size(); ++i) hm[i] = rng.normal();
  auto base = integral_3d(hm);
  Tensor shifted = hm;
  for (std::size_t i = 0; i < hm.size(); ++i) shifted[i] += 17.25;
  auto moved = integral_3d(shifted);
  for (std::size_t j = 0; j < 3; ++j)
    for (int a = 0; a < 3; ++a)
      CHECK(moved.coords[j][a] == doctest::Approx(base.coords[j][a]).epsilon(1e-12));

  for (const auto& c : base.coords) {
    CHECK(c[0] >= 0.0);
    CHECK(c[0] <= 4.0);
    CHECK(c[1] >= 0.0);
    CHECK(c[1] <= 4.0);
    CHECK(c[2] >= 0.0);
    CHECK(c[2] <= 3.0);
  }
}

TEST_CASE("integral_3d: axis order permutation changes nothing") {
  Rng rng(5);
  Tensor hm({2, 4, 5, 6});
  for (std::size_t i = 0; i < hm.size(); ++i) hm[i] = rng.normal();
  auto r = integral_3d(hm);
  for (std::size_t j = 0; j < 2; ++j)
    for (int order = 0; order < 3; ++order) {
      auto alt = coords_by_order(r.probs, j, order);
      for (int a = 0; a < 3; ++a) CHECK(std::abs(alt[a] - r.coords[j][a]) < 1e-12);
    }
}

TEST_CASE("integral_3d backward matches finite differences") {
  Rng rng(7);
  Tensor hm({1, 3, 4, 4});
  for (std::size_t i = 0; i < hm.size(); ++i) hm[i] = rng.normal();

  // loss = sum of coordinates squared
  auto loss_of = [](const Tensor& h) {
    auto r = integral_3d(h);
    double l = 0.0;
    for (const auto& c : r.coords) l += c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
    return l;
  };

  auto fwd = integral_3d(hm);
  std::vector<std::array<double, 3>> dc(1);
  dc[0] = {2 * fwd.coords[0][0], 2 * fwd.coords[0][1], 2 * fwd.coords[0][2]};
  Tensor grad(hm.shape());
  integral_3d_backward(fwd, dc, grad);

  const double eps = 1e-6;
  for (std::size_t i = 0; i < hm.size(); ++i) {
    Tensor hp = hm, hmn = hm;
    hp[i] += eps;
    hmn[i] -= eps;
    const double numeric = (loss_of(hp) - loss_of(hmn)) / (2 * eps);
    CHECK(grad[i] == doctest::Approx(numeric).epsilon(2e-4));
  }
}

TEST_CASE("l1_pose_loss: zero, offset, symmetry, triangle inequality, gradient") {
  Rng rng(9);
  Pose3D gt = Pose3D::all_valid({{10, 20, 30}, {-5, 0, 5}, {100, -40, 7}});
  CHECK(l1_pose_loss(gt, gt) == 0.0);

  Pose3D off = gt;
  for (auto& v : off.joints) {
    v[0] += 1;
    v[1] += 2;
    v[2] += 3;
  }
  CHECK(l1_pose_loss(off, gt) == doctest::Approx(6.0));
  CHECK(l1_pose_loss(off, gt) == doctest::Approx(l1_pose_loss(gt, off)));

  // triangle inequality over random poses
  for (int trial = 0; trial < 30; ++trial) {
    auto rand_pose = [&]() {
      Pose3D p;
      p.valid.assign(5, true);
      for (int j = 0; j < 5; ++j)
        p.joints.push_back({rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)});
      return p;
    };
    Pose3D a = rand_pose(), b = rand_pose(), c = rand_pose();
    CHECK(l1_pose_loss(a, c) <= l1_pose_loss(a, b) + l1_pose_loss(b, c) + 1e-12);
  }

  // gradient is the sign pattern away from kinks
  std::vector<std::array<double, 3>> dpred;
  l1_pose_loss(off, gt, &dpred);
  for (const auto& g : dpred)
    for (int a = 0; a < 3; ++a) CHECK(g[a] == doctest::Approx(1.0 / 3.0));

  Pose3D invalid = gt;
  invalid.valid.assign(3, false);
  CHECK_THROWS_AS(l1_pose_loss(invalid, gt), DataError);
}

TEST_CASE("fine-tune loss gradient check at a non-kink point") {
  Pose3dConfig cfg = tiny3d();
  Pose3dModel model(cfg, 31);
  Rng rng(32);
  Tensor input({1, std::size_t(cfg.base.input_size), std::size_t(cfg.base.input_size)});
  for (std::size_t i = 0; i < input.size(); ++i) input[i] = rng.uniform();
  Pose3D gt;
  gt.valid.assign(cfg.base.joints, true);
  for (int j = 0; j < cfg.base.joints; ++j)
    gt.joints.push_back({rng.uniform(-300, 300), rng.uniform(-300, 300), rng.uniform(-300, 300)});

  auto loss_only = [&]() { return model.loss_value(input, gt); };
  auto loss_and_grads = [&]() { return model.train_sample(input, gt, 1.0); };
  auto report = nn::grad_check_model(model.params(), loss_only, loss_and_grads, 1e-5, 1e-4, 1e-7);
  CHECK_MESSAGE(report.pass, report.to_string());
}

TEST_CASE("predict is deterministic and calibration maps voxel steps to mm") {
  Pose3dConfig cfg = tiny3d();
  Pose3dModel model(cfg, 41);
  Rng rng(42);
  Tensor input({1, 16, 16});
  for (std::size_t i = 0; i < input.size(); ++i) input[i] = rng.uniform();
  Pose3D p1 = model.predict(input);
  Pose3D p2 = model.predict(input);
  for (std::size_t j = 0; j < p1.joints.size(); ++j)
    for (int a = 0; a < 3; ++a) CHECK(p1.joints[j][a] == p2.joints[j][a]);

  // with window = extent-1 the mapping is unit scale: one voxel step = 1 mm
  Pose3dConfig unit = tiny3d();
  unit.calib.window_x_mm = unit.base.heatmap_size - 1;
  unit.calib.window_y_mm = unit.base.heatmap_size - 1;
  unit.calib.window_z_mm = unit.depth_bins - 1;
  Pose3dModel unit_model(unit, 41);
  auto mm0 = unit_model.voxel_to_mm({0, 0, 0});
  auto mm1 = unit_model.voxel_to_mm({1, 1, 1});
  for (int a = 0; a < 3; ++a) CHECK(mm1[a] - mm0[a] == doctest::Approx(1.0).epsilon(1e-12));

  Tensor wrong({1, 8, 8});
  CHECK_THROWS_AS(model.predict(wrong), DataError);
}

TEST_CASE("load_backbone restores trunk tensors and rejects mismatches") {
  WspConfig base = tiny3d().base;
  WspModel pre(base, 51);
  auto ckpt_path = std::filesystem::temp_directory_path() / "wspkit_tests" / "pre.wspk";
  std::filesystem::create_directories(ckpt_path.parent_path());
  nn::save_checkpoint(ckpt_path, pre.params());

  Pose3dModel fine(tiny3d(), 52);
  fine.load_backbone(nn::load_checkpoint(ckpt_path));
  CHECK(fine.params().value("backbone.conv0.weight").values() ==
        pre.params().value("backbone.conv0.weight").values());

  // wrong architecture -> shape mismatch listing the tensor
  Pose3dConfig other = tiny3d();
  other.base.backbone_channels = {8, 6};
  Pose3dModel wrong(other, 53);
  try {
    wrong.load_backbone(nn::load_checkpoint(ckpt_path));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("backbone.conv0.weight") != std::string::npos);
  }
}

TEST_CASE("finetune: lr 0 keeps validation metrics at the fresh-head level") {
  Pose3dConfig cfg = tiny3d();
  Rng rng(61);
  std::vector<Pose3dSample> train, val;
  for (int i = 0; i < 6; ++i) {
    Pose3dSample s;
    s.input = Tensor({1, 16, 16});
    for (std::size_t k = 0; k < s.input.size(); ++k) s.input[k] = rng.uniform();
    s.gt_mm.valid.assign(cfg.base.joints, true);
    for (int j = 0; j < cfg.base.joints; ++j)
      s.gt_mm.joints.push_back(
          {rng.uniform(-200, 200), rng.uniform(-200, 200), rng.uniform(-200, 200)});
    (i < 4 ? train : val).push_back(std::move(s));
  }

  Pose3dModel model(cfg, 71);
  std::vector<Pose3D> fresh = predict_all(model, val);
  std::vector<Pose3D> gt;
  for (const auto& s : val) gt.push_back(s.gt_mm);
  const double fresh_mpjpe = mpjpe(fresh, gt).total;

  FinetuneOptions opt;
  opt.epochs = 2;
  opt.batch_size = 2;
  opt.lr = 0.0;
  auto result = finetune(model, train, val, opt);
  REQUIRE(result.log.size() == 2);
  for (const auto& m : result.log)
    CHECK(m.val_mpjpe == doctest::Approx(fresh_mpjpe).epsilon(1e-12));
}
