#include "wspkit/nn/net.hpp"

#include <cmath>

#include "wspkit/errors.hpp"

namespace wspkit::nn {

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::transposed_conv2d: return "transposed_conv2d";
    case LayerKind::relu: return "relu";
    case LayerKind::sigmoid: return "sigmoid";
    case LayerKind::fully_connected: return "fully_connected";
    case LayerKind::avgpool: return "avgpool";
    case LayerKind::softmax: return "softmax";
  }
  return "?";
}

LayerSpec conv2d(std::string name, int in_c, int out_c, int kernel, int stride, int padding) {
  LayerSpec l;
  l.kind = LayerKind::conv2d;
  l.name = std::move(name);
  l.in_channels = in_c;
  l.out_channels = out_c;
  l.kernel = kernel;
  l.stride = stride;
  l.padding = padding;
  return l;
}

LayerSpec transposed_conv2d(std::string name, int in_c, int out_c, int kernel, int stride,
                            int padding) {
  LayerSpec l = conv2d(std::move(name), in_c, out_c, kernel, stride, padding);
  l.kind = LayerKind::transposed_conv2d;
  return l;
}

LayerSpec fully_connected(std::string name, int in_features, int out_features) {
  LayerSpec l;
  l.kind = LayerKind::fully_connected;
  l.name = std::move(name);
  l.in_features = in_features;
  l.out_features = out_features;
  return l;
}

LayerSpec relu() { return LayerSpec{LayerKind::relu}; }
LayerSpec sigmoid() { return LayerSpec{LayerKind::sigmoid}; }
LayerSpec softmax() { return LayerSpec{LayerKind::softmax}; }

LayerSpec avgpool(int kernel) {
  LayerSpec l;
  l.kind = LayerKind::avgpool;
  l.kernel = kernel;
  return l;
}

namespace {

Conv2dGeom geom_of(const LayerSpec& l) {
  return Conv2dGeom{l.in_channels, l.out_channels, l.kernel, l.stride, l.padding};
}

[[noreturn]] void shape_fail(const LayerSpec& l, const std::vector<std::size_t>& in,
                             const std::string& why) {
  throw DataError(std::string("layer '") + (l.name.empty() ? layer_kind_name(l.kind) : l.name) +
                  "' (" + layer_kind_name(l.kind) + "): " + why + ", input shape " +
                  shape_string(in));
}

}  // namespace

std::vector<std::size_t> layer_output_shape(const LayerSpec& l,
                                            const std::vector<std::size_t>& in) {
  switch (l.kind) {
    case LayerKind::conv2d: {
      if (in.size() != 3 || static_cast<int>(in[0]) != l.in_channels)
        shape_fail(l, in, "expected (C,H,W) with C=" + std::to_string(l.in_channels));
      int ho = conv2d_out_extent(static_cast<int>(in[1]), l.kernel, l.stride, l.padding);
      int wo = conv2d_out_extent(static_cast<int>(in[2]), l.kernel, l.stride, l.padding);
      return {static_cast<std::size_t>(l.out_channels), static_cast<std::size_t>(ho),
              static_cast<std::size_t>(wo)};
    }
    case LayerKind::transposed_conv2d: {
      if (in.size() != 3 || static_cast<int>(in[0]) != l.in_channels)
        shape_fail(l, in, "expected (C,H,W) with C=" + std::to_string(l.in_channels));
      int ho = tconv2d_out_extent(static_cast<int>(in[1]), l.kernel, l.stride, l.padding);
      int wo = tconv2d_out_extent(static_cast<int>(in[2]), l.kernel, l.stride, l.padding);
      return {static_cast<std::size_t>(l.out_channels), static_cast<std::size_t>(ho),
              static_cast<std::size_t>(wo)};
    }
    case LayerKind::fully_connected: {
      if (shape_product(in) != static_cast<std::size_t>(l.in_features))
        shape_fail(l, in, "expected " + std::to_string(l.in_features) + " features");
      return {static_cast<std::size_t>(l.out_features)};
    }
    case LayerKind::avgpool: {
      if (in.size() != 3 || in[1] % l.kernel || in[2] % l.kernel)
        shape_fail(l, in, "extents must divide by pool kernel " + std::to_string(l.kernel));
      return {in[0], in[1] / l.kernel, in[2] / l.kernel};
    }
    case LayerKind::relu:
    case LayerKind::sigmoid:
    case LayerKind::softmax:
      return in;
  }
  shape_fail(l, in, "unknown layer kind");
}

std::vector<std::size_t> network_output_shape(const Network& net, std::vector<std::size_t> in) {
  for (const auto& l : net) in = layer_output_shape(l, in);
  return in;
}

Param& ParamStore::add(const std::string& name, std::vector<std::size_t> shape) {
  if (params_.count(name)) throw DataError("duplicate parameter name: " + name);
  Param p;
  p.value = Tensor(shape);
  p.grad = Tensor(std::move(shape));
  auto [it, ok] = params_.emplace(name, std::move(p));
  (void)ok;
  return it->second;
}

Param& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw DataError("unknown parameter: " + name);
  return it->second;
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw DataError("unknown parameter: " + name);
  return it->second;
}

void ParamStore::zero_grads() {
  for (auto& [name, p] : params_) p.grad.fill(0.0);
}

void init_params(const Network& net, ParamStore& params, Rng& rng) {
  for (const auto& l : net) {
    if (!l.has_params()) continue;
    if (l.name.empty()) throw DataError("parameterized layer requires a name");
    std::size_t fan_in = 0;
    std::vector<std::size_t> wshape, bshape;
    switch (l.kind) {
      case LayerKind::conv2d:
        fan_in = std::size_t(l.in_channels) * l.kernel * l.kernel;
        wshape = {std::size_t(l.out_channels), std::size_t(l.in_channels), std::size_t(l.kernel),
                  std::size_t(l.kernel)};
        bshape = {std::size_t(l.out_channels)};
        break;
      case LayerKind::transposed_conv2d:
        fan_in = std::size_t(l.in_channels) * l.kernel * l.kernel;
        wshape = {std::size_t(l.in_channels), std::size_t(l.out_channels), std::size_t(l.kernel),
                  std::size_t(l.kernel)};
        bshape = {std::size_t(l.out_channels)};
        break;
      case LayerKind::fully_connected:
        fan_in = std::size_t(l.in_features);
        wshape = {std::size_t(l.out_features), std::size_t(l.in_features)};
        bshape = {std::size_t(l.out_features)};
        break;
      default:
        break;
    }
    Param& w = params.add(l.name + ".weight", wshape);
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < w.value.size(); ++i) w.value[i] = rng.uniform(-bound, bound);
    params.add(l.name + ".bias", bshape);  // zero biases
  }
}

Tensor forward(const Network& net, const ParamStore& params, const Tensor& x, Tape& tape) {
  tape.net = &net;
  tape.acts.clear();
  tape.acts.reserve(net.size() + 1);
  tape.acts.push_back(x);
  std::vector<std::size_t> shape = x.shape();
  for (const auto& l : net) {
    const Tensor& in = tape.acts.back();
    std::vector<std::size_t> out_shape = layer_output_shape(l, shape);
    Tensor out(out_shape);
    switch (l.kind) {
      case LayerKind::conv2d:
        par::conv2d_forward(in, params.at(l.name + ".weight").value,
                            params.at(l.name + ".bias").value, geom_of(l), out);
        break;
      case LayerKind::transposed_conv2d:
        par::tconv2d_forward(in, params.at(l.name + ".weight").value,
                             params.at(l.name + ".bias").value, geom_of(l), out);
        break;
      case LayerKind::fully_connected:
        par::fc_forward(in, params.at(l.name + ".weight").value,
                        params.at(l.name + ".bias").value, out);
        break;
      case LayerKind::relu:
        par::relu_forward(in, out);
        break;
      case LayerKind::sigmoid:
        par::sigmoid_forward(in, out);
        break;
      case LayerKind::softmax:
        par::softmax_rows_forward(in, out);
        break;
      case LayerKind::avgpool:
        par::avgpool_forward(in, l.kernel, out);
        break;
    }
    tape.acts.push_back(std::move(out));
    shape = std::move(out_shape);
  }
  tape.valid = true;
  return tape.acts.back();
}

Tensor backward(const Tape& tape, const Tensor& dy, ParamStore& params) {
  if (!tape.valid || tape.net == nullptr)
    throw DataError("backward called before forward (empty tape)");
  const Network& net = *tape.net;
  if (!dy.same_shape(tape.acts.back()))
    throw DataError("backward: dy shape " + shape_string(dy.shape()) +
                    " != output shape " + shape_string(tape.acts.back().shape()));
  Tensor grad = dy;
  for (std::size_t li = net.size(); li-- > 0;) {
    const LayerSpec& l = net[li];
    const Tensor& in = tape.acts[li];
    const Tensor& out = tape.acts[li + 1];
    Tensor dx(in.shape());
    switch (l.kind) {
      case LayerKind::conv2d:
        par::conv2d_backward(in, params.at(l.name + ".weight").value, geom_of(l), grad, dx,
                             params.at(l.name + ".weight").grad,
                             params.at(l.name + ".bias").grad);
        break;
      case LayerKind::transposed_conv2d:
        par::tconv2d_backward(in, params.at(l.name + ".weight").value, geom_of(l), grad, dx,
                              params.at(l.name + ".weight").grad,
                              params.at(l.name + ".bias").grad);
        break;
      case LayerKind::fully_connected:
        par::fc_backward(in, params.at(l.name + ".weight").value, grad, dx,
                         params.at(l.name + ".weight").grad, params.at(l.name + ".bias").grad);
        break;
      case LayerKind::relu:
        par::relu_backward(in, grad, dx);
        break;
      case LayerKind::sigmoid:
        par::sigmoid_backward(out, grad, dx);
        break;
      case LayerKind::softmax:
        par::softmax_rows_backward(out, grad, dx);
        break;
      case LayerKind::avgpool:
        par::avgpool_backward(l.kernel, grad, dx);
        break;
    }
    grad = std::move(dx);
  }
  return grad;
}

void sgd_step(ParamStore& params, double lr, double momentum) {
  for (auto& [name, p] : params) {
    if (!p.grad.all_finite()) throw NumericError("non-finite gradient in parameter " + name);
    if (p.velocity.size() != p.value.size()) p.velocity = Tensor(p.value.shape());
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      p.velocity[i] = momentum * p.velocity[i] + p.grad[i];
      p.value[i] -= lr * p.velocity[i];
    }
    p.grad.fill(0.0);
  }
}

}  // namespace wspkit::nn
