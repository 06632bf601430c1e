// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "gpa/backprop.hpp"

namespace gpa {

/// How batch kernels distribute records. Both policies produce bit-identical
/// results: per-record work is independent and reductions run in record order.
enum class Exec { Serial, Parallel };

struct BatchGradient {
  LossValue loss;
  Gradient grad;
};

/// Summed loss and gradient over `batch` (records carry their labels).
BatchGradient batch_gradient(std::span<const ImageRecord> batch, const AdjacencyPrior& A,
                             const ModelParams& params, FeatureMask mask = {},
                             Exec exec = Exec::Parallel);

/// Serial reference: one record at a time, accumulated in order.
BatchGradient batch_gradient_serial(std::span<const ImageRecord> batch, const AdjacencyPrior& A,
                                    const ModelParams& params, FeatureMask mask = {});

/// OpenMP version: records in parallel, ordered reduction afterwards.
BatchGradient batch_gradient_parallel(std::span<const ImageRecord> batch,
                                      const AdjacencyPrior& A, const ModelParams& params,
                                      FeatureMask mask = {});

/// Class probabilities of every record.
std::vector<Eigen::Vector2d> predict_probs(std::span<const ImageRecord> records,
                                           const AdjacencyPrior& A, const ModelParams& params,
                                           FeatureMask mask = {}, Exec exec = Exec::Parallel);

std::vector<PrivacyClass> predict_labels(std::span<const ImageRecord> records,
                                         const AdjacencyPrior& A, const ModelParams& params,
                                         FeatureMask mask = {}, Exec exec = Exec::Parallel);

}  // namespace gpa
