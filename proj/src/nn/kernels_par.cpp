// OpenMP kernels in gather form: each output element is produced by exactly
// one thread with a fixed-order inner reduction, so results are bit-identical
// to a single-threaded run for any thread count.

#include <cmath>

#include "wspkit/nn/kernels.hpp"

namespace wspkit::nn::par {

namespace {

// Skip the parallel region for tiny layers where fork/join dominates.
constexpr long kMinParWork = 1 << 14;

// Output-index range [lo, hi) such that o * stride - pad + k stays inside
// [0, extent). Hoisting this out of the inner loops keeps them branch-free.
struct IndexRange {
  int lo = 0;
  int hi = 0;
};

IndexRange valid_range(int out_extent, int stride, int pad, int k, int in_extent) {
  IndexRange r;
  r.lo = 0;
  while (r.lo < out_extent && r.lo * stride - pad + k < 0) ++r.lo;
  r.hi = out_extent;
  while (r.hi > r.lo && (r.hi - 1) * stride - pad + k >= in_extent) --r.hi;
  return r;
}

}  // namespace

void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dGeom& g,
                    Tensor& y) {
  const int H = static_cast<int>(x.extent(1)), W = static_cast<int>(x.extent(2));
  const int Ho = static_cast<int>(y.extent(1)), Wo = static_cast<int>(y.extent(2));
  const long work = 1L * g.out_c * Ho * Wo * g.in_c * g.kernel * g.kernel;
  // Disjoint co slices, branch-free inner loops over hoisted valid ranges.
#pragma omp parallel for if (work > kMinParWork)
  for (int co = 0; co < g.out_c; ++co) {
    double* yc = y.data() + std::size_t(co) * Ho * Wo;
    for (int i = 0; i < Ho * Wo; ++i) yc[i] = b[co];
    for (int ci = 0; ci < g.in_c; ++ci)
      for (int kh = 0; kh < g.kernel; ++kh) {
        const IndexRange hr = valid_range(Ho, g.stride, g.pad, kh, H);
        for (int kw = 0; kw < g.kernel; ++kw) {
          const IndexRange wr = valid_range(Wo, g.stride, g.pad, kw, W);
          const double wv = w.at4(co, ci, kh, kw);
          if (wv == 0.0) continue;
          const int off = kw - g.pad;
          for (int ho = hr.lo; ho < hr.hi; ++ho) {
            const int hi = ho * g.stride - g.pad + kh;
            const double* xrow = x.data() + (std::size_t(ci) * H + hi) * W;
            double* yrow = yc + std::size_t(ho) * Wo;
            for (int wo = wr.lo; wo < wr.hi; ++wo) yrow[wo] += xrow[wo * g.stride + off] * wv;
          }
        }
      }
  }
}

void conv2d_backward(const Tensor& x, const Tensor& w, const Conv2dGeom& g, const Tensor& dy,
                     Tensor& dx, Tensor& dw, Tensor& db) {
  const int H = static_cast<int>(x.extent(1)), W = static_cast<int>(x.extent(2));
  const int Ho = static_cast<int>(dy.extent(1)), Wo = static_cast<int>(dy.extent(2));
  const long work = 1L * g.out_c * Ho * Wo * g.in_c * g.kernel * g.kernel;

#pragma omp parallel for if (1L * g.out_c * Ho * Wo > kMinParWork)
  for (int co = 0; co < g.out_c; ++co) {
    double acc = 0.0;
    const double* dyc = dy.data() + std::size_t(co) * Ho * Wo;
    for (int i = 0; i < Ho * Wo; ++i) acc += dyc[i];
    db[co] += acc;
  }

  // dx: threads own disjoint ci slices; within a slice the scatter order is
  // fixed, so results do not depend on the thread count.
#pragma omp parallel for if (work > kMinParWork)
  for (int ci = 0; ci < g.in_c; ++ci) {
    double* dxc = dx.data() + std::size_t(ci) * H * W;
    for (int co = 0; co < g.out_c; ++co)
      for (int kh = 0; kh < g.kernel; ++kh) {
        const IndexRange hr = valid_range(Ho, g.stride, g.pad, kh, H);
        for (int kw = 0; kw < g.kernel; ++kw) {
          const IndexRange wr = valid_range(Wo, g.stride, g.pad, kw, W);
          const double wv = w.at4(co, ci, kh, kw);
          if (wv == 0.0) continue;
          for (int ho = hr.lo; ho < hr.hi; ++ho) {
            const int hi = ho * g.stride - g.pad + kh;
            const double* dyrow = dy.data() + (std::size_t(co) * Ho + ho) * Wo;
            double* dxrow = dxc + std::size_t(hi) * W;
            const int off = kw - g.pad;
            for (int wo = wr.lo; wo < wr.hi; ++wo) dxrow[wo * g.stride + off] += dyrow[wo] * wv;
          }
        }
      }
  }

#pragma omp parallel for if (work > kMinParWork)
  for (int co = 0; co < g.out_c; ++co)
    for (int ci = 0; ci < g.in_c; ++ci)
      for (int kh = 0; kh < g.kernel; ++kh) {
        const IndexRange hr = valid_range(Ho, g.stride, g.pad, kh, H);
        for (int kw = 0; kw < g.kernel; ++kw) {
          const IndexRange wr = valid_range(Wo, g.stride, g.pad, kw, W);
          double acc = 0.0;
          for (int ho = hr.lo; ho < hr.hi; ++ho) {
            const int hi = ho * g.stride - g.pad + kh;
            const double* dyrow = dy.data() + (std::size_t(co) * Ho + ho) * Wo;
            const double* xrow = x.data() + (std::size_t(ci) * H + hi) * W;
            const int off = kw - g.pad;
            for (int wo = wr.lo; wo < wr.hi; ++wo) acc += dyrow[wo] * xrow[wo * g.stride + off];
          }
          dw.at4(co, ci, kh, kw) += acc;
        }
      }
}

void tconv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dGeom& g,
                     Tensor& y) {
  const int H = static_cast<int>(x.extent(1)), W = static_cast<int>(x.extent(2));
  const int Ho = static_cast<int>(y.extent(1)), Wo = static_cast<int>(y.extent(2));
  const long work = 1L * g.out_c * Ho * Wo * g.in_c * g.kernel * g.kernel;
  // Disjoint co slices; fixed scatter order within each slice.
#pragma omp parallel for if (work > kMinParWork)
  for (int co = 0; co < g.out_c; ++co) {
    double* yc = y.data() + std::size_t(co) * Ho * Wo;
    for (int i = 0; i < Ho * Wo; ++i) yc[i] = b[co];
    for (int ci = 0; ci < g.in_c; ++ci)
      for (int kh = 0; kh < g.kernel; ++kh) {
        const IndexRange hr = valid_range(H, g.stride, g.pad, kh, Ho);
        for (int kw = 0; kw < g.kernel; ++kw) {
          const IndexRange wr = valid_range(W, g.stride, g.pad, kw, Wo);
          const double wv = w.at4(ci, co, kh, kw);
          if (wv == 0.0) continue;
          for (int hi = hr.lo; hi < hr.hi; ++hi) {
            const int ho = hi * g.stride - g.pad + kh;
            const double* xrow = x.data() + (std::size_t(ci) * H + hi) * W;
            double* yrow = yc + std::size_t(ho) * Wo;
            const int off = kw - g.pad;
            for (int wi = wr.lo; wi < wr.hi; ++wi) yrow[wi * g.stride + off] += xrow[wi] * wv;
          }
        }
      }
  }
}

void tconv2d_backward(const Tensor& x, const Tensor& w, const Conv2dGeom& g, const Tensor& dy,
                      Tensor& dx, Tensor& dw, Tensor& db) {
  const int H = static_cast<int>(x.extent(1)), W = static_cast<int>(x.extent(2));
  const int Ho = static_cast<int>(dy.extent(1)), Wo = static_cast<int>(dy.extent(2));
  const long work = 1L * g.in_c * H * W * g.out_c * g.kernel * g.kernel;

#pragma omp parallel for if (g.out_c * Ho * Wo > kMinParWork)
  for (int co = 0; co < g.out_c; ++co) {
    double acc = 0.0;
    const double* dyc = dy.data() + std::size_t(co) * Ho * Wo;
    for (int i = 0; i < Ho * Wo; ++i) acc += dyc[i];
    db[co] += acc;
  }

  // dx gathers with direct (hi -> ho) index math; ci slices are disjoint.
#pragma omp parallel for if (work > kMinParWork)
  for (int ci = 0; ci < g.in_c; ++ci) {
    double* dxc = dx.data() + std::size_t(ci) * H * W;
    for (int co = 0; co < g.out_c; ++co)
      for (int kh = 0; kh < g.kernel; ++kh) {
        const IndexRange hr = valid_range(H, g.stride, g.pad, kh, Ho);
        for (int kw = 0; kw < g.kernel; ++kw) {
          const IndexRange wr = valid_range(W, g.stride, g.pad, kw, Wo);
          const double wv = w.at4(ci, co, kh, kw);
          if (wv == 0.0) continue;
          for (int hi = hr.lo; hi < hr.hi; ++hi) {
            const int ho = hi * g.stride - g.pad + kh;
            const double* dyrow = dy.data() + (std::size_t(co) * Ho + ho) * Wo;
            double* dxrow = dxc + std::size_t(hi) * W;
            const int off = kw - g.pad;
            for (int wi = wr.lo; wi < wr.hi; ++wi) dxrow[wi] += dyrow[wi * g.stride + off] * wv;
          }
        }
      }
  }

#pragma omp parallel for if (work > kMinParWork)
  for (int ci = 0; ci < g.in_c; ++ci)
    for (int co = 0; co < g.out_c; ++co)
      for (int kh = 0; kh < g.kernel; ++kh) {
        const IndexRange hr = valid_range(H, g.stride, g.pad, kh, Ho);
        for (int kw = 0; kw < g.kernel; ++kw) {
          const IndexRange wr = valid_range(W, g.stride, g.pad, kw, Wo);
          double acc = 0.0;
          for (int hi = hr.lo; hi < hr.hi; ++hi) {
            const int ho = hi * g.stride - g.pad + kh;
            const double* xrow = x.data() + (std::size_t(ci) * H + hi) * W;
            const double* dyrow = dy.data() + (std::size_t(co) * Ho + ho) * Wo;
            const int off = kw - g.pad;
            for (int wi = wr.lo; wi < wr.hi; ++wi) acc += xrow[wi] * dyrow[wi * g.stride + off];
          }
          dw.at4(ci, co, kh, kw) += acc;
        }
      }
}

void fc_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y) {
  const int out = static_cast<int>(w.extent(0));
  const int in = static_cast<int>(w.extent(1));
#pragma omp parallel for if (1L * out * in > kMinParWork)
  for (int o = 0; o < out; ++o) {
    double acc = b[o];
    const double* wrow = w.data() + std::size_t(o) * in;
    for (int i = 0; i < in; ++i) acc += wrow[i] * x[i];
    y[o] = acc;
  }
}

void fc_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor& dx, Tensor& dw,
                 Tensor& db) {
  const int out = static_cast<int>(w.extent(0));
  const int in = static_cast<int>(w.extent(1));
#pragma omp parallel for if (1L * out * in > kMinParWork)
  for (int i = 0; i < in; ++i) {
    double acc = 0.0;
    for (int o = 0; o < out; ++o) acc += dy[o] * w.at2(o, i);
    dx[i] += acc;
  }
#pragma omp parallel for if (1L * out * in > kMinParWork)
  for (int o = 0; o < out; ++o) {
    const double dyv = dy[o];
    db[o] += dyv;
    double* dwrow = dw.data() + std::size_t(o) * in;
    for (int i = 0; i < in; ++i) dwrow[i] += dyv * x[i];
  }
}

void relu_forward(const Tensor& x, Tensor& y) {
  const long n = static_cast<long>(x.size());
#pragma omp parallel for if (n > kMinParWork)
  for (long i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const Tensor& x, const Tensor& dy, Tensor& dx) {
  const long n = static_cast<long>(x.size());
#pragma omp parallel for if (n > kMinParWork)
  for (long i = 0; i < n; ++i) dx[i] += x[i] > 0.0 ? dy[i] : 0.0;
}

void sigmoid_forward(const Tensor& x, Tensor& y) {
  const long n = static_cast<long>(x.size());
#pragma omp parallel for if (n > kMinParWork)
  for (long i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void sigmoid_backward(const Tensor& y, const Tensor& dy, Tensor& dx) {
  const long n = static_cast<long>(y.size());
#pragma omp parallel for if (n > kMinParWork)
  for (long i = 0; i < n; ++i) dx[i] += dy[i] * y[i] * (1.0 - y[i]);
}

void softmax_rows_forward(const Tensor& x, Tensor& y) {
  const long cols = static_cast<long>(x.shape().back());
  const long rows = static_cast<long>(x.size()) / cols;
#pragma omp parallel for if (rows * cols > kMinParWork)
  for (long r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * cols;
    double* yr = y.data() + r * cols;
    double mx = xr[0];
    for (long c = 1; c < cols; ++c) mx = std::max(mx, xr[c]);
    double sum = 0.0;
    for (long c = 0; c < cols; ++c) {
      yr[c] = std::exp(xr[c] - mx);
      sum += yr[c];
    }
    for (long c = 0; c < cols; ++c) yr[c] /= sum;
  }
}

void softmax_rows_backward(const Tensor& y, const Tensor& dy, Tensor& dx) {
  const long cols = static_cast<long>(y.shape().back());
  const long rows = static_cast<long>(y.size()) / cols;
#pragma omp parallel for if (rows * cols > kMinParWork)
  for (long r = 0; r < rows; ++r) {
    const double* yr = y.data() + r * cols;
    const double* dyr = dy.data() + r * cols;
    double* dxr = dx.data() + r * cols;
    double dot = 0.0;
    for (long c = 0; c < cols; ++c) dot += yr[c] * dyr[c];
    for (long c = 0; c < cols; ++c) dxr[c] += yr[c] * (dyr[c] - dot);
  }
}

void avgpool_forward(const Tensor& x, int kernel, Tensor& y) {
  const int C = static_cast<int>(x.extent(0));
  const int Ho = static_cast<int>(y.extent(1)), Wo = static_cast<int>(y.extent(2));
  const double inv = 1.0 / (kernel * kernel);
#pragma omp parallel for collapse(2) if (1L * C * Ho * Wo * kernel * kernel > kMinParWork)
  for (int c = 0; c < C; ++c)
    for (int ho = 0; ho < Ho; ++ho) {
      for (int wo = 0; wo < Wo; ++wo) {
        double acc = 0.0;
        for (int kh = 0; kh < kernel; ++kh)
          for (int kw = 0; kw < kernel; ++kw)
            acc += x.at3(c, ho * kernel + kh, wo * kernel + kw);
        y.at3(c, ho, wo) = acc * inv;
      }
    }
}

void avgpool_backward(int kernel, const Tensor& dy, Tensor& dx) {
  const int C = static_cast<int>(dy.extent(0));
  const int Ho = static_cast<int>(dy.extent(1)), Wo = static_cast<int>(dy.extent(2));
  const double inv = 1.0 / (kernel * kernel);
#pragma omp parallel for collapse(2) if (1L * C * Ho * Wo * kernel * kernel > kMinParWork)
  for (int c = 0; c < C; ++c)
    for (int ho = 0; ho < Ho; ++ho) {
      for (int wo = 0; wo < Wo; ++wo) {
        const double g = dy.at3(c, ho, wo) * inv;
        for (int kh = 0; kh < kernel; ++kh)
          for (int kw = 0; kw < kernel; ++kw)
            dx.at3(c, ho * kernel + kh, wo * kernel + kw) += g;
      }
    }
}

}  // namespace wspkit::nn::par
