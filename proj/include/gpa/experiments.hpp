// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "gpa/metrics.hpp"
#include "gpa/train.hpp"

namespace gpa {

/// Cross-validated training followed by evaluation.
///
/// `cv` pools the out-of-fold validation predictions (every non-test record
/// is predicted once, by the fold model that did not train on it). `test`
/// is present when the split holds out a test set and uses the fold model
/// with the best validation U-F1. `train_accuracy` pools each fold's
/// selected model over its own training records.
struct ProtocolResult {
  TrainResult training;
  EvalReport cv;
  std::optional<EvalReport> test;
  double train_accuracy = 0.0;
  std::vector<PrivacyClass> eval_labels;  // labels behind `headline()`

  const EvalReport& headline() const { return test ? *test : cv; }
};

ProtocolResult run_protocol(const Corpus& corpus, const TrainConfig& cfg);

/// Rows in order: random generator, uniform, random, ones, class,
/// co-occurrence. Every prior row reuses the same protocol and seed; the
/// random-generator row scores fair-coin predictions against the same labels.
std::vector<ReportRow> ablate_prior(const Corpus& corpus, const TrainConfig& cfg,
                                    BaselineCoin coin = BaselineCoin::Fair);

/// Rows for the feature subsets {f_s}, {f_c}, {f_s, f_c} with the
/// configured prior.
std::vector<ReportRow> ablate_features(const Corpus& corpus, const TrainConfig& cfg);

}  // namespace gpa
