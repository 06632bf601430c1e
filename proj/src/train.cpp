// SPDX-License-Identifier: Apache-2.0
#include "gpa/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>

#include "gpa/errors.hpp"
#include "gpa/rng.hpp"

namespace gpa {

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(adam.lr > 0.0) || !std::isfinite(adam.lr)) throw ConfigError("lr must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(adam.eps > 0.0)) throw ConfigError("adam eps must be > 0");
  if (n_folds < 2) throw ConfigError("n_folds must be >= 2");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in [0, 1)");
  }
  if (shape.K < 1 || shape.L < 0 || shape.h1 < 1 || shape.d_a < 1) {
    throw ConfigError("model shape needs K>=1, L>=0, h1>=1, d_a>=1");
  }
  if (!features.any()) throw ConfigError("at least one feature channel must be enabled");
}

std::uint64_t init_seed(std::uint64_t seed, int fold) {
  return mix_seed(mix_seed(seed) + static_cast<std::uint64_t>(fold));
}

std::uint64_t epoch_seed(std::uint64_t seed, int fold, int epoch) {
  return mix_seed((seed ^ static_cast<std::uint64_t>(epoch)) +
                  (static_cast<std::uint64_t>(fold) << 32));
}

std::vector<PrivacyClass> labels_of(std::span<const ImageRecord> records) {
  std::vector<PrivacyClass> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.label);
  return out;
}

double dataset_loss(std::span<const ImageRecord> records, const AdjacencyPrior& A,
                    const ModelParams& params, FeatureMask mask, LossReduction reduction) {
  const auto probs = predict_probs(records, A, params, mask);
  const auto labels = labels_of(records);
  double value = loss(probs, labels).value;
  if (reduction == LossReduction::Mean && !records.empty()) value /= static_cast<double>(records.size());
  return value;
}

double accuracy(std::span<const ImageRecord> records, const AdjacencyPrior& A,
                const ModelParams& params, FeatureMask mask) {
  if (records.empty()) return 0.0;
  const auto pred = predict_labels(records, A, params, mask);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < records.size(); ++i) hit += pred[i] == records[i].label;
  return static_cast<double>(hit) / static_cast<double>(records.size());
}

FitResult fit(std::span<const ImageRecord> train_set, std::span<const ImageRecord> val,
              const AdjacencyPrior& A, const TrainConfig& cfg, int fold,
              std::optional<ModelParams> initial) {
  cfg.validate();
  if (train_set.empty()) throw ConfigError("fit: empty training set");
  ModelParams params =
      initial ? std::move(*initial) : ModelParams::init(cfg.shape, init_seed(cfg.seed, fold));
  check_compatible(A, params);

  FitResult out{params, params, 0, std::nullopt, {}};
  double best_uf1 = -std::numeric_limits<double>::infinity();
  AdamState state = AdamState::zeros(params.shape);
  long step = 0;
  const auto val_labels = labels_of(val);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<ImageRecord> batch;
  batch.reserve(static_cast<std::size_t>(cfg.batch_size));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    Rng rng(epoch_seed(cfg.seed, fold, epoch));
    rng.shuffle(order);

    double epoch_loss = 0.0;
    int batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      batch.clear();
      for (std::size_t k = begin; k < end; ++k) batch.push_back(train_set[order[k]]);

      const auto where = [&] {
        return " (fold " + std::to_string(fold) + ", epoch " + std::to_string(epoch) +
               ", batch " + std::to_string(batch_index) + ")";
      };
      BatchGradient bg;
      try {
        bg = batch_gradient(batch, A, params, cfg.features, cfg.exec);
      } catch (const NumericError& e) {
        throw NumericError(std::string("training diverged: ") + e.what() + where());
      }
      if (!std::isfinite(bg.loss.value)) {
        throw NumericError("training diverged: non-finite loss" + where());
      }
      epoch_loss += bg.loss.value;
      if (cfg.reduction == LossReduction::Mean) bg.grad *= 1.0 / static_cast<double>(batch.size());
      adam_step(params, bg.grad, state, ++step, cfg.adam);
      if (!params.all_finite()) {
        throw NumericError("training diverged: non-finite parameters" + where());
      }
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.fold = fold;
    entry.train_loss = epoch_loss / static_cast<double>(train_set.size());
    if (!val.empty()) {
      entry.val = evaluate(predict_labels(val, A, params, cfg.features, cfg.exec), val_labels);
      if (entry.val->uf1 > best_uf1) {
        best_uf1 = entry.val->uf1;
        out.best = params;
        out.best_epoch = epoch;
        out.best_val = entry.val;
      }
    } else {
      out.best = params;
      out.best_epoch = epoch;
    }
    if (cfg.record_timing) {
      entry.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    out.log.push_back(std::move(entry));
  }
  out.last = std::move(params);
  return out;
}

TrainResult train(const Corpus& corpus, const TrainConfig& cfg) {
  cfg.validate();
  if (corpus.K() != cfg.shape.K) {
    throw ConfigError("corpus has K=" + std::to_string(corpus.K()) + " but the config says K=" +
                      std::to_string(cfg.shape.K));
  }
  TrainResult result;
  result.plan = make_splits(corpus, cfg.n_folds, cfg.test_fraction, cfg.seed);
  const int n_folds = cfg.n_folds;
  std::vector<std::optional<FoldResult>> folds(n_folds);

  auto run_fold = [&](int f, Exec exec) {
    const auto& fold = result.plan.folds[f];
    const Corpus train_part = corpus.subset(fold.train_ids);
    const auto val_part = corpus.select(fold.val_ids);
    TrainConfig fold_cfg = cfg;
    fold_cfg.exec = exec;
    AdjacencyPrior prior = build_prior(cfg.prior_kind, train_part, cfg.seed);
    FitResult fr = fit(train_part.records(), val_part, prior, fold_cfg, f);
    folds[f] = FoldResult{std::move(prior), std::move(fr)};
  };

  if (cfg.parallel_folds) {
    std::exception_ptr error;
#pragma omp parallel for schedule(static, 1)
    for (int f = 0; f < n_folds; ++f) {
      try {
        run_fold(f, Exec::Serial);
      } catch (...) {
#pragma omp critical(gpa_fold_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  } else {
    for (int f = 0; f < n_folds; ++f) run_fold(f, cfg.exec);
  }

  for (auto& f : folds) {
    result.log.insert(result.log.end(), f->fit.log.begin(), f->fit.log.end());
    result.folds.push_back(std::move(*f));
  }
  return result;
}

std::string log_to_csv(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out << "epoch,fold,train_loss,val_uba,val_f1_public,val_f1_private,val_uf1,seconds\n";
  char buf[256];
  for (const auto& e : log) {
    if (e.val) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.6f,%.2f,%.3f,%.3f,%.3f,%.3f\n", e.epoch, e.fold,
                    e.train_loss, e.val->uba, e.val->public_class.f1, e.val->private_class.f1,
                    e.val->uf1, e.seconds);
    } else {
      std::snprintf(buf, sizeof buf, "%d,%d,%.6f,,,,,%.3f\n", e.epoch, e.fold, e.train_loss,
                    e.seconds);
    }
    out << buf;
  }
  return out.str();
}

}  // namespace gpa
