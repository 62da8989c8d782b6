#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wspkit/nn/kernels.hpp"
#include "wspkit/rng.hpp"
#include "wspkit/tensor.hpp"

namespace wspkit::nn {

enum class LayerKind {
  conv2d,
  transposed_conv2d,
  relu,
  sigmoid,
  fully_connected,
  avgpool,
  softmax,
};

const char* layer_kind_name(LayerKind k);

struct LayerSpec {
  LayerKind kind{};
  std::string name;  // parameter prefix; required for parameterized layers
  int in_channels = 0, out_channels = 0;
  int kernel = 1, stride = 1, padding = 0;  // conv / transposed conv / avgpool
  int in_features = 0, out_features = 0;    // fully_connected

  bool has_params() const {
    return kind == LayerKind::conv2d || kind == LayerKind::transposed_conv2d ||
           kind == LayerKind::fully_connected;
  }
};

LayerSpec conv2d(std::string name, int in_c, int out_c, int kernel, int stride, int padding);
LayerSpec transposed_conv2d(std::string name, int in_c, int out_c, int kernel, int stride,
                            int padding);
LayerSpec fully_connected(std::string name, int in_features, int out_features);
LayerSpec relu();
LayerSpec sigmoid();
LayerSpec softmax();
LayerSpec avgpool(int kernel);

using Network = std::vector<LayerSpec>;

std::vector<std::size_t> layer_output_shape(const LayerSpec& layer,
                                            const std::vector<std::size_t>& in);
std::vector<std::size_t> network_output_shape(const Network& net, std::vector<std::size_t> in);

struct Param {
  Tensor value;
  Tensor grad;
  Tensor velocity;  // momentum buffer, lazily sized by sgd_step
};

// Named parameters with matching gradient slots. std::map keeps iteration
// order (and therefore checkpoints and update sweeps) deterministic.
class ParamStore {
 public:
  Param& add(const std::string& name, std::vector<std::size_t> shape);
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  Tensor& value(const std::string& name) { return at(name).value; }
  Tensor& grad(const std::string& name) { return at(name).grad; }
  void zero_grads();
  std::size_t size() const { return params_.size(); }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::uint64_t rng_seed = 0;  // seed used at init

 private:
  std::map<std::string, Param> params_;
};

// He-style uniform fan-in init for weights, zero biases. Draw order follows
// the layer sequence, so a fixed seed fixes every parameter.
void init_params(const Network& net, ParamStore& params, Rng& rng);

struct Tape {
  const Network* net = nullptr;
  std::vector<Tensor> acts;  // acts[0] = input, acts[i + 1] = output of layer i
  bool valid = false;
};

// Chain forward; the tape caches every activation for backward. Throws
// DataError naming the offending layer on a shape mismatch.
Tensor forward(const Network& net, const ParamStore& params, const Tensor& x, Tape& tape);

// Reverse sweep; accumulates parameter gradients and returns dL/dx.
Tensor backward(const Tape& tape, const Tensor& dy, ParamStore& params);

// SGD with momentum: v = momentum * v + g; p -= lr * v. Gradients are zeroed
// after the step. Non-finite gradients raise NumericError with the name.
void sgd_step(ParamStore& params, double lr, double momentum);

}  // namespace wspkit::nn
