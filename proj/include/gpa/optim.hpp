// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "gpa/params.hpp"

namespace gpa {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moment estimates, shaped like the parameters.
struct AdamState {
  ModelParams m;
  ModelParams v;
  long step = 0;

  static AdamState zeros(const ModelShape& shape) {
    return {ModelParams::zeros(shape), ModelParams::zeros(shape), 0};
  }
};

/// One bias-corrected Adam update at step t (t >= 1); sets state.step = t.
void adam_step(ModelParams& params, const Gradient& grad, AdamState& state, long t,
               const AdamConfig& cfg);

}  // namespace gpa
