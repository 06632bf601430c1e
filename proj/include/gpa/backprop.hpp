// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include <Eigen/Dense>

#include "gpa/model.hpp"

namespace gpa {

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before the log.
inline constexpr double kProbClamp = 1e-12;

struct LossValue {
  double value = 0.0;
  std::size_t batch_size = 0;
};

/// Binary cross-entropy summed over the batch, with p_n the private-class
/// probability of each 2-vector.
LossValue loss(std::span<const Eigen::Vector2d> probs, std::span<const PrivacyClass> labels);

/// Cross-entropy of a single prediction.
double record_loss(const Eigen::Vector2d& probs, PrivacyClass label);

/// Loss and exact parameter gradient for one record, by reverse-mode
/// differentiation through the head, attention and every GRU round.
std::pair<double, Gradient> record_backward(const ImageRecord& record, PrivacyClass label,
                                            const AdjacencyPrior& A, const ModelParams& params,
                                            FeatureMask mask = {});

/// Gradient from an existing forward trace.
Gradient backward_from_trace(const ForwardTrace& trace, PrivacyClass label,
                             const AdjacencyPrior& A, const ModelParams& params);

/// Throws NumericError naming the first tensor holding a non-finite entry.
void check_finite(const Gradient& grad);

}  // namespace gpa
