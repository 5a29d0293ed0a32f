#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "corefqa/tensor.hpp"

namespace corefqa {

struct AdamState {
  std::vector<double> m;  // first-moment estimate
  std::vector<double> v;  // second-moment estimate
  long step = 0;
};

/// One bias-corrected Adam update of a single parameter in place.
inline void adam_step(Tensor param, const std::vector<double>& grad, AdamState& state, double lr,
                      double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  const std::size_t n = param.size();
  if (grad.size() != n) {
    throw ShapeError("adam_step: gradient size " + std::to_string(grad.size()) +
                     " does not match parameter " + shape_str(param.shape()));
  }
  if (state.m.empty()) state.m.assign(n, 0.0);
  if (state.v.empty()) state.v.assign(n, 0.0);
  if (state.m.size() != n || state.v.size() != n) {
    throw ShapeError("adam_step: optimizer state does not match parameter " +
                     shape_str(param.shape()));
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

/// Adam over a fixed list of parameters; state indexed by position.
class Adam {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// Applies one step using each parameter's accumulated .grad().
  void step(std::vector<Tensor>& params) {
    if (states_.empty()) states_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      adam_step(params[i], params[i].grad(), states_[i], lr_, beta1_, beta2_, eps_);
    }
  }

  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<AdamState> states_;
};

}  // namespace corefqa
