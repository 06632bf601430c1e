// SPDX-License-Identifier: Apache-2.0
#include "gpa/optim.hpp"

#include <cmath>

#include "gpa/errors.hpp"

namespace gpa {

void adam_step(ModelParams& params, const Gradient& grad, AdamState& state, long t,
               const AdamConfig& cfg) {
  if (t < 1) throw ConfigError("adam_step: step index must be >= 1");
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (int i = 0; i < kParamTensorCount; ++i) {
    auto p = params.tensor(i).array();
    const auto g = grad.tensor(i).array();
    auto m = state.m.tensor(i).array();
    auto v = state.v.tensor(i).array();
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.square();
    p -= cfg.lr * (m / c1) / ((v / c2).sqrt() + cfg.eps);
  }
  state.step = t;
}

}  // namespace gpa
