// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gpa/corpus.hpp"
#include "gpa/kernels.hpp"
#include "gpa/metrics.hpp"
#include "gpa/optim.hpp"
#include "gpa/prior.hpp"

namespace gpa {

enum class LossReduction { Sum, Mean };

struct TrainConfig {
  int epochs = 50;
  int batch_size = 64;
  AdamConfig adam{};
  int n_folds = 3;
  double test_fraction = 0.0;
  std::uint64_t seed = 0;
  ModelShape shape{};
  PriorKind prior_kind = PriorKind::Cooccurrence;
  FeatureMask features{};
  LossReduction reduction = LossReduction::Sum;
  Exec exec = Exec::Parallel;
  bool parallel_folds = false;
  /// Wall-clock seconds in the log; off by default so logs are reproducible.
  bool record_timing = false;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

struct EpochLog {
  int epoch = 0;  // 1-based
  int fold = 0;
  double train_loss = 0.0;  // mean per-record loss over the epoch's batches
  std::optional<EvalReport> val;
  double seconds = 0.0;
};

struct FitResult {
  ModelParams best;
  ModelParams last;
  int best_epoch = 0;  // 0 = initialisation
  std::optional<EvalReport> best_val;
  std::vector<EpochLog> log;
};

/// Mini-batch Adam on `train_set`, evaluating on `val` after every epoch and
/// retaining the highest val U-F1 parameters (earlier epoch wins ties).
/// With an empty `val` the last epoch is retained.
FitResult fit(std::span<const ImageRecord> train_set, std::span<const ImageRecord> val,
              const AdjacencyPrior& A, const TrainConfig& cfg, int fold = 0,
              std::optional<ModelParams> initial = std::nullopt);

/// Summed (or mean) loss of `params` over a record set.
double dataset_loss(std::span<const ImageRecord> records, const AdjacencyPrior& A,
                    const ModelParams& params, FeatureMask mask = {},
                    LossReduction reduction = LossReduction::Sum);

double accuracy(std::span<const ImageRecord> records, const AdjacencyPrior& A,
                const ModelParams& params, FeatureMask mask = {});

std::vector<PrivacyClass> labels_of(std::span<const ImageRecord> records);

/// Parameter seed and per-epoch shuffle seed for a fold.
std::uint64_t init_seed(std::uint64_t seed, int fold);
std::uint64_t epoch_seed(std::uint64_t seed, int fold, int epoch);

struct FoldResult {
  AdjacencyPrior prior;  // built from the fold's training records
  FitResult fit;
};

struct TrainResult {
  SplitPlan plan;
  std::vector<FoldResult> folds;
  std::vector<EpochLog> log;  // ordered by fold, then epoch
};

/// Stratified k-fold cross-validation with per-fold model selection.
TrainResult train(const Corpus& corpus, const TrainConfig& cfg);

/// CSV: epoch,fold,train_loss,val_uba,val_f1_public,val_f1_private,val_uf1,seconds
std::string log_to_csv(const std::vector<EpochLog>& log);

}  // namespace gpa
