// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "gpa/kernels.hpp"

namespace gpa {

struct GradCheckOptions {
  double eps = 1e-5;
  double tolerance = 1e-5;
  /// Error metric: |analytic - numeric| / max(floor, |analytic|, |numeric|).
  double floor = 1e-4;
  /// Test hook: perturbs one analytic entry so the check must fail.
  bool corrupt = false;
};

struct TensorCheck {
  std::string name;
  std::size_t entries = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_entry = 0;  // row-major index
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;
  std::string worst_tensor;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;

  std::string summary() const;
};

/// Compares the analytic batch gradient with central finite differences of
/// the summed loss, one parameter entry at a time.
GradCheckReport gradcheck(std::span<const ImageRecord> batch, const AdjacencyPrior& A,
                          const ModelParams& params, FeatureMask mask = {},
                          const GradCheckOptions& opts = {});

struct GradCheckInstance {
  std::vector<ImageRecord> batch;
  AdjacencyPrior prior;
  ModelParams params;
};

/// K=3, L=2, batch of 4 synthetic records, random-valued prior (so every
/// block of the prior is exercised) and seeded random parameters.
GradCheckInstance small_gradcheck_instance(std::uint64_t seed = 1, int K = 3, int L = 2,
                                           std::size_t batch = 4);

}  // namespace gpa
