#include "wspkit/nn/gradcheck.hpp"

#include <cmath>
#include <sstream>

namespace wspkit::nn {

std::string GradCheckReport::to_string() const {
  std::ostringstream os;
  os << "grad check (eps=" << eps << ", rtol=" << rtol << ", atol=" << atol << ")\n";
  for (const auto& e : entries) {
    os << "  " << (e.pass ? "ok  " : "FAIL") << "  " << e.param
       << "  max_rel=" << e.max_rel_err << "  max_abs=" << e.max_abs_err << "\n";
  }
  os << (pass ? "PASS" : "FAIL") << "\n";
  return os.str();
}

GradCheckReport grad_check_model(ParamStore& params, const std::function<double()>& loss_only,
                                 const std::function<double()>& loss_and_grads, double eps,
                                 double rtol, double atol) {
  GradCheckReport report;
  report.eps = eps;
  report.rtol = rtol;
  report.atol = atol;

  params.zero_grads();
  loss_and_grads();

  for (auto& [name, p] : params) {
    GradCheckEntry entry;
    entry.param = name;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + eps;
      const double lp = loss_only();
      p.value[i] = saved - eps;
      const double lm = loss_only();
      p.value[i] = saved;
      const double numeric = (lp - lm) / (2.0 * eps);
      const double analytic = p.grad[i];
      const double abs_err = std::abs(analytic - numeric);
      const double scale = std::max(std::abs(analytic), std::abs(numeric));
      const double rel_err = scale > 0.0 ? abs_err / scale : 0.0;
      entry.max_abs_err = std::max(entry.max_abs_err, abs_err);
      if (abs_err > atol + rtol * scale) {
        entry.pass = false;
        entry.max_rel_err = std::max(entry.max_rel_err, rel_err);
      } else {
        entry.max_rel_err = std::max(entry.max_rel_err, rel_err);
      }
    }
    report.pass = report.pass && entry.pass;
    report.entries.push_back(std::move(entry));
  }
  params.zero_grads();
  return report;
}

GradCheckReport grad_check(const Network& net, ParamStore& params, const Tensor& x,
                           const LossFn& loss_fn, double eps, double rtol, double atol) {
  auto loss_only = [&]() {
    Tape tape;
    Tensor y = forward(net, params, x, tape);
    return loss_fn(y).first;
  };
  auto loss_and_grads = [&]() {
    Tape tape;
    Tensor y = forward(net, params, x, tape);
    auto [loss, dy] = loss_fn(y);
    backward(tape, dy, params);
    return loss;
  };
  return grad_check_model(params, loss_only, loss_and_grads, eps, rtol, atol);
}

}  // namespace wspkit::nn
