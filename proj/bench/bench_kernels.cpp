// Serial reference vs OpenMP kernels on the shapes the default model uses,
// plus one end-to-end pre-training step. Run: ./bench_kernels [reps]

#include <chrono>
#include <cstdio>
#include <string>

#include "wspkit/nn/kernels.hpp"
#include "wspkit/rng.hpp"
#include "wspkit/threading.hpp"
#include "wspkit/wsp.hpp"

using namespace wspkit;
using namespace wspkit::nn;
using clock_type = std::chrono::steady_clock;

namespace {

Tensor randn(std::vector<std::size_t> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
  return t;
}

template <class F>
double time_ms(int reps, F&& fn) {
  fn();  // warm up
  auto start = clock_type::now();
  for (int i = 0; i < reps; ++i) fn();
  auto stop = clock_type::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

void bench_conv(const char* name, const Conv2dGeom& g, int h, int w, int reps) {
  Rng rng(1);
  Tensor x = randn({std::size_t(g.in_c), std::size_t(h), std::size_t(w)}, rng);
  Tensor wt = randn({std::size_t(g.out_c), std::size_t(g.in_c), std::size_t(g.kernel),
                     std::size_t(g.kernel)},
                    rng);
  Tensor b = randn({std::size_t(g.out_c)}, rng);
  const int ho = conv2d_out_extent(h, g.kernel, g.stride, g.pad);
  const int wo = conv2d_out_extent(w, g.kernel, g.stride, g.pad);
  Tensor y({std::size_t(g.out_c), std::size_t(ho), std::size_t(wo)});
  Tensor dy = randn(y.shape(), rng);
  Tensor dx(x.shape()), dw(wt.shape()), db(b.shape());

  const double f_ser = time_ms(reps, [&] { serial::conv2d_forward(x, wt, b, g, y); });
  const double f_par = time_ms(reps, [&] { par::conv2d_forward(x, wt, b, g, y); });
  const double b_ser = time_ms(reps, [&] {
    dx.fill(0);
    dw.fill(0);
    db.fill(0);
    serial::conv2d_backward(x, wt, g, dy, dx, dw, db);
  });
  const double b_par = time_ms(reps, [&] {
    dx.fill(0);
    dw.fill(0);
    db.fill(0);
    par::conv2d_backward(x, wt, g, dy, dx, dw, db);
  });
  std::printf("%-28s fwd %8.3f ms -> %8.3f ms (x%.2f)   bwd %8.3f ms -> %8.3f ms (x%.2f)\n",
              name, f_ser, f_par, f_ser / f_par, b_ser, b_par, b_ser / b_par);
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_cap();
  const int reps = argc > 1 ? std::stoi(argv[1]) : 20;
  std::printf("threads: %d, reps: %d\n", max_threads(), reps);

  bench_conv("conv 1->16 64x64 s2", {1, 16, 3, 2, 1}, 64, 64, reps);
  bench_conv("conv 16->32 32x32 s2", {16, 32, 3, 2, 1}, 32, 32, reps);
  bench_conv("conv 32->32 16x16 s2", {32, 32, 3, 2, 1}, 16, 16, reps);
  bench_conv("conv 32->17 16x16 1x1", {32, 17, 1, 1, 0}, 16, 16, reps);

  {
    Rng rng(2);
    Conv2dGeom g{32, 32, 4, 2, 1};
    Tensor x = randn({32, 8, 8}, rng);
    Tensor wt = randn({32, 32, 4, 4}, rng);
    Tensor b = randn({32}, rng);
    Tensor y({32, 16, 16});
    const double t_ser = time_ms(reps, [&] { serial::tconv2d_forward(x, wt, b, g, y); });
    const double t_par = time_ms(reps, [&] { par::tconv2d_forward(x, wt, b, g, y); });
    std::printf("%-28s fwd %8.3f ms -> %8.3f ms (x%.2f)\n", "tconv 32->32 8->16", t_ser, t_par,
                t_ser / t_par);
  }

  // One full pre-training step (forward + backward) on the default model.
  {
    WspConfig cfg;
    WspModel model(cfg, 3);
    Rng rng(4);
    Tensor input = randn({1, std::size_t(cfg.input_size), std::size_t(cfg.input_size)}, rng);
    for (std::size_t i = 0; i < input.size(); ++i) input[i] = std::abs(input[i]) * 0.1;
    PersonInstance a, b;
    for (PersonInstance* p : {&a, &b}) {
      p->joints.assign(cfg.joints, {20.0, 20.0});
      p->visibility.assign(cfg.joints, Visibility::visible);
    }
    a.bbox = {2, 2, 30, 60};
    b.bbox = {33, 2, 28, 58};
    GtHeatmaps gt = render_gt_heatmaps({a, b}, cfg);
    Rng sel_rng(5);
    const double step_ms = time_ms(reps, [&] {
      auto selected = select_keypoints(cfg.joints, cfg.selected_joints, sel_rng);
      auto fwd = model.forward_pair(input, a, b, selected);
      model.loss_and_backward(fwd, gt.merged, 1, 1.0);
    });
    std::printf("%-28s %8.3f ms per sample\n", "wsp train step (64x64)", step_ms);
  }
  return 0;
}
