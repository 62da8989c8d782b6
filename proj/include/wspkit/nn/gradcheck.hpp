#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wspkit/nn/net.hpp"

namespace wspkit::nn {

struct GradCheckEntry {
  std::string param;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  bool pass = true;
  double eps = 0.0, rtol = 0.0, atol = 0.0;

  std::string to_string() const;
};

// Maps a network output to (loss, dL/dy).
using LossFn = std::function<std::pair<double, Tensor>(const Tensor&)>;

// Central finite differences against the analytic gradient, parameter by
// parameter. An element passes when |a - n| <= atol + rtol * max(|a|, |n|).
GradCheckReport grad_check(const Network& net, ParamStore& params, const Tensor& x,
                           const LossFn& loss_fn, double eps = 1e-5, double rtol = 1e-4,
                           double atol = 1e-7);

// Generalized form for models that are not a single chain. `loss_and_grads`
// runs forward + backward once, accumulating into params' grad slots;
// `loss_only` evaluates the loss at the current parameter values.
GradCheckReport grad_check_model(ParamStore& params, const std::function<double()>& loss_only,
                                 const std::function<double()>& loss_and_grads, double eps = 1e-5,
                                 double rtol = 1e-4, double atol = 1e-7);

}  // namespace wspkit::nn
