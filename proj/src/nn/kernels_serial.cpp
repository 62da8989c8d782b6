// Reference kernels: plain textbook loops, scatter form where that is the
// natural way to write the operation. Kept unoptimized on purpose; the par::
// kernels are checked against these.

#include <cmath>
#include <stdexcept>

#include "wspkit/nn/kernels.hpp"

namespace wspkit::nn {

int conv2d_out_extent(int in, int kernel, int stride, int pad) {
  int num = in + 2 * pad - kernel;
  if (num < 0)
    throw std::invalid_argument("conv2d: extent " + std::to_string(in) +
                                " smaller than kernel with pad " + std::to_string(pad));
  return num / stride + 1;  // floor semantics
}

int tconv2d_out_extent(int in, int kernel, int stride, int pad) {
  int out = (in - 1) * stride - 2 * pad + kernel;
  if (out <= 0) throw std::invalid_argument("transposed_conv2d: non-positive output extent");
  return out;
}

namespace serial {

void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dGeom& g,
                    Tensor& y) {
  const int H = static_cast<int>(x.extent(1)), W = static_cast<int>(x.extent(2));
  const int Ho = static_cast<int>(y.extent(1)), Wo = static_cast<int>(y.extent(2));
  for (int co = 0; co < g.out_c; ++co)
    for (int ho = 0; ho < Ho; ++ho)
      for (int wo = 0; wo < Wo; ++wo) y.at3(co, ho, wo) = b[co];
  // Scatter every input element into the outputs it feeds.
  for (int ci = 0; ci < g.in_c; ++ci)
    for (int hi = 0; hi < H; ++hi)
      for (int wi = 0; wi < W; ++wi) {
        const double xv = x.at3(ci, hi, wi);
        for (int co = 0; co < g.out_c; ++co)
          for (int kh = 0; kh < g.kernel; ++kh)
            for (int kw = 0; kw < g.kernel; ++kw) {
              int hnum = hi + g.pad - kh;
              int wnum = wi + g.pad - kw;
              if (hnum < 0 || wnum < 0 || hnum % g.stride || wnum % g.stride) continue;
              int ho = hnum / g.stride, wo = wnum / g.stride;
              if (ho >= Ho || wo >= Wo) continue;
              y.at3(co, ho, wo) += xv * w.at4(co, ci, kh, kw);
            }
      }
}

void conv2d_backward(const Tensor& x, const Tensor& w, const Conv2dGeom& g, const Tensor& dy,
                     Tensor& dx, Tensor& dw, Tensor& db) {
  const int H = static_cast<int>(x.extent(1)), W = static_cast<int>(x.extent(2));
  const int Ho = static_cast<int>(dy.extent(1)), Wo = static_cast<int>(dy.extent(2));
  for (int co = 0; co < g.out_c; ++co)
    for (int ho = 0; ho < Ho; ++ho)
      for (int wo = 0; wo < Wo; ++wo) {
        const double dyv = dy.at3(co, ho, wo);
        db[co] += dyv;
        for (int ci = 0; ci < g.in_c; ++ci)
          for (int kh = 0; kh < g.kernel; ++kh)
            for (int kw = 0; kw < g.kernel; ++kw) {
              int hi = ho * g.stride - g.pad + kh;
              int wi = wo * g.stride - g.pad + kw;
              if (hi < 0 || hi >= H || wi < 0 || wi >= W) continue;
              dx.at3(ci, hi, wi) += dyv * w.at4(co, ci, kh, kw);
              dw.at4(co, ci, kh, kw) += dyv * x.at3(ci, hi, wi);
            }
      }
}

void tconv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dGeom& g,
                     Tensor& y) {
  const int H = static_cast<int>(x.extent(1)), W = static_cast<int>(x.extent(2));
  const int Ho = static_cast<int>(y.extent(1)), Wo = static_cast<int>(y.extent(2));
  for (int co = 0; co < g.out_c; ++co)
    for (int ho = 0; ho < Ho; ++ho)
      for (int wo = 0; wo < Wo; ++wo) y.at3(co, ho, wo) = b[co];
  for (int ci = 0; ci < g.in_c; ++ci)
    for (int hi = 0; hi < H; ++hi)
      for (int wi = 0; wi < W; ++wi) {
        const double xv = x.at3(ci, hi, wi);
        for (int co = 0; co < g.out_c; ++co)
          for (int kh = 0; kh < g.kernel; ++kh)
            for (int kw = 0; kw < g.kernel; ++kw) {
              int ho = hi * g.stride - g.pad + kh;
              int wo = wi * g.stride - g.pad + kw;
              if (ho < 0 || ho >= Ho || wo < 0 || wo >= Wo) continue;
              y.at3(co, ho, wo) += xv * w.at4(ci, co, kh, kw);
            }
      }
}

void tconv2d_backward(const Tensor& x, const Tensor& w, const Conv2dGeom& g, const Tensor& dy,
                      Tensor& dx, Tensor& dw, Tensor& db) {
  const int H = static_cast<int>(x.extent(1)), W = static_cast<int>(x.extent(2));
  const int Ho = static_cast<int>(dy.extent(1)), Wo = static_cast<int>(dy.extent(2));
  for (int co = 0; co < g.out_c; ++co)
    for (int ho = 0; ho < Ho; ++ho)
      for (int wo = 0; wo < Wo; ++wo) db[co] += dy.at3(co, ho, wo);
  for (int ci = 0; ci < g.in_c; ++ci)
    for (int hi = 0; hi < H; ++hi)
      for (int wi = 0; wi < W; ++wi) {
        const double xv = x.at3(ci, hi, wi);
        for (int co = 0; co < g.out_c; ++co)
          for (int kh = 0; kh < g.kernel; ++kh)
            for (int kw = 0; kw < g.kernel; ++kw) {
              int ho = hi * g.stride - g.pad + kh;
              int wo = wi * g.stride - g.pad + kw;
              if (ho < 0 || ho >= Ho || wo < 0 || wo >= Wo) continue;
              const double dyv = dy.at3(co, ho, wo);
              dx.at3(ci, hi, wi) += dyv * w.at4(ci, co, kh, kw);
              dw.at4(ci, co, kh, kw) += xv * dyv;
            }
      }
}

void fc_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y) {
  const std::size_t out = w.extent(0), in = w.extent(1);
  for (std::size_t o = 0; o < out; ++o) {
    double acc = b[o];
    for (std::size_t i = 0; i < in; ++i) acc += w.at2(o, i) * x[i];
    y[o] = acc;
  }
}

void fc_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor& dx, Tensor& dw,
                 Tensor& db) {
  const std::size_t out = w.extent(0), in = w.extent(1);
  for (std::size_t o = 0; o < out; ++o) {
    const double dyv = dy[o];
    db[o] += dyv;
    for (std::size_t i = 0; i < in; ++i) {
      dx[i] += dyv * w.at2(o, i);
      dw.at2(o, i) += dyv * x[i];
    }
  }
}

void relu_forward(const Tensor& x, Tensor& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const Tensor& x, const Tensor& dy, Tensor& dx) {
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] += x[i] > 0.0 ? dy[i] : 0.0;
}

void sigmoid_forward(const Tensor& x, Tensor& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void sigmoid_backward(const Tensor& y, const Tensor& dy, Tensor& dx) {
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] += dy[i] * y[i] * (1.0 - y[i]);
}

void softmax_rows_forward(const Tensor& x, Tensor& y) {
  const std::size_t cols = x.shape().back();
  const std::size_t rows = x.size() / cols;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * cols;
    double* yr = y.data() + r * cols;
    double mx = xr[0];
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, xr[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      yr[c] = std::exp(xr[c] - mx);
      sum += yr[c];
    }
    for (std::size_t c = 0; c < cols; ++c) yr[c] /= sum;
  }
}

void softmax_rows_backward(const Tensor& y, const Tensor& dy, Tensor& dx) {
  const std::size_t cols = y.shape().back();
  const std::size_t rows = y.size() / cols;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* yr = y.data() + r * cols;
    const double* dyr = dy.data() + r * cols;
    double* dxr = dx.data() + r * cols;
    double dot = 0.0;
    for (std::size_t c = 0; c < cols; ++c) dot += yr[c] * dyr[c];
    for (std::size_t c = 0; c < cols; ++c) dxr[c] += yr[c] * (dyr[c] - dot);
  }
}

void avgpool_forward(const Tensor& x, int kernel, Tensor& y) {
  const int C = static_cast<int>(x.extent(0));
  const int Ho = static_cast<int>(y.extent(1)), Wo = static_cast<int>(y.extent(2));
  const double inv = 1.0 / (kernel * kernel);
  for (int c = 0; c < C; ++c)
    for (int ho = 0; ho < Ho; ++ho)
      for (int wo = 0; wo < Wo; ++wo) {
        double acc = 0.0;
        for (int kh = 0; kh < kernel; ++kh)
          for (int kw = 0; kw < kernel; ++kw)
            acc += x.at3(c, ho * kernel + kh, wo * kernel + kw);
        y.at3(c, ho, wo) = acc * inv;
      }
}

void avgpool_backward(int kernel, const Tensor& dy, Tensor& dx) {
  const int C = static_cast<int>(dy.extent(0));
  const int Ho = static_cast<int>(dy.extent(1)), Wo = static_cast<int>(dy.extent(2));
  const double inv = 1.0 / (kernel * kernel);
  for (int c = 0; c < C; ++c)
    for (int ho = 0; ho < Ho; ++ho)
      for (int wo = 0; wo < Wo; ++wo) {
        const double g = dy.at3(c, ho, wo) * inv;
        for (int kh = 0; kh < kernel; ++kh)
          for (int kw = 0; kw < kernel; ++kw)
            dx.at3(c, ho * kernel + kh, wo * kernel + kw) += g;
      }
}

}  // namespace serial
}  // namespace wspkit::nn
