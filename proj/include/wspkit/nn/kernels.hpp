#pragma once

#include "wspkit/tensor.hpp"

namespace wspkit::nn {

struct Conv2dGeom {
  int in_c = 0;
  int out_c = 0;
  int kernel = 1;
  int stride = 1;
  int pad = 0;
};

int conv2d_out_extent(int in, int kernel, int stride, int pad);
int tconv2d_out_extent(int in, int kernel, int stride, int pad);

// Two implementations of every kernel:
//   serial:: textbook scatter/gather loops, the reference the tests trust;
//   par::    OpenMP gather form, exactly one writer per output element, so
//            results are independent of the thread count.
// Gradient kernels accumulate into their outputs; callers zero when needed.
//
// Layouts: conv weights (out_c, in_c, k, k); transposed-conv weights
// (in_c, out_c, k, k); fully-connected weights (out, in).

namespace serial {

void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dGeom& g,
                    Tensor& y);
void conv2d_backward(const Tensor& x, const Tensor& w, const Conv2dGeom& g, const Tensor& dy,
                     Tensor& dx, Tensor& dw, Tensor& db);
void tconv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dGeom& g,
                     Tensor& y);
void tconv2d_backward(const Tensor& x, const Tensor& w, const Conv2dGeom& g, const Tensor& dy,
                      Tensor& dx, Tensor& dw, Tensor& db);
void fc_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y);
void fc_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor& dx, Tensor& dw,
                 Tensor& db);
void relu_forward(const Tensor& x, Tensor& y);
void relu_backward(const Tensor& x, const Tensor& dy, Tensor& dx);
void sigmoid_forward(const Tensor& x, Tensor& y);
void sigmoid_backward(const Tensor& y, const Tensor& dy, Tensor& dx);
void softmax_rows_forward(const Tensor& x, Tensor& y);
void softmax_rows_backward(const Tensor& y, const Tensor& dy, Tensor& dx);
void avgpool_forward(const Tensor& x, int kernel, Tensor& y);
void avgpool_backward(int kernel, const Tensor& dy, Tensor& dx);

}  // namespace serial

namespace par {

void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dGeom& g,
                    Tensor& y);
void conv2d_backward(const Tensor& x, const Tensor& w, const Conv2dGeom& g, const Tensor& dy,
                     Tensor& dx, Tensor& dw, Tensor& db);
void tconv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dGeom& g,
                     Tensor& y);
void tconv2d_backward(const Tensor& x, const Tensor& w, const Conv2dGeom& g, const Tensor& dy,
                      Tensor& dx, Tensor& dw, Tensor& db);
void fc_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y);
void fc_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor& dx, Tensor& dw,
                 Tensor& db);
void relu_forward(const Tensor& x, Tensor& y);
void relu_backward(const Tensor& x, const Tensor& dy, Tensor& dx);
void sigmoid_forward(const Tensor& x, Tensor& y);
void sigmoid_backward(const Tensor& y, const Tensor& dy, Tensor& dx);
void softmax_rows_forward(const Tensor& x, Tensor& y);
void softmax_rows_backward(const Tensor& y, const Tensor& dy, Tensor& dx);
void avgpool_forward(const Tensor& x, int kernel, Tensor& y);
void avgpool_backward(int kernel, const Tensor& dy, Tensor& dx);

}  // namespace par

}  // namespace wspkit::nn
