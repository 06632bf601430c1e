// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <limits>

#include "gpa/errors.hpp"
#include "gpa/experiments.hpp"
#include "gpa/train.hpp"

using namespace gpa;

namespace {

TrainConfig small_config(int K, int epochs) {
  TrainConfig cfg;
  cfg.shape = {K, 2, 16, 4};
  cfg.epochs = epochs;
  cfg.adam.lr = 1e-3;
  cfg.batch_size = 16;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_CASE("zero epochs return the initialisation and an empty log") {
  const auto corpus = synth_corpus(12, 4, SynthRule::ScenePair, 1);
  auto cfg = small_config(4, 0);
  const auto A = build_cooccurrence(corpus);
  const auto r = fit(corpus.records(), corpus.records(), A, cfg);
  CHECK(r.log.empty());
  CHECK(r.best_epoch == 0);
  CHECK(r.best == ModelParams::init(cfg.shape, init_seed(cfg.seed, 0)));
}

TEST_CASE("overfits a separable corpus") {
  const auto corpus = synth_corpus(32, 5, SynthRule::ScenePair, 7);
  auto cfg = small_config(5, 500);
  cfg.shape = {5, 3, 32, 4};
  cfg.batch_size = 64;
  const auto A = build_cooccurrence(corpus);
  const double before =
      dataset_loss(corpus.records(), A, ModelParams::init(cfg.shape, init_seed(cfg.seed, 0)));
  const auto r = fit(corpus.records(), {}, A, cfg);
  CHECK(accuracy(corpus.records(), A, r.last) >= 0.99);
  CHECK(dataset_loss(corpus.records(), A, r.last) < 0.1 * before);
  CHECK(r.log.size() == 500);
  CHECK(r.best_epoch == 500);
}

TEST_CASE("model selection keeps the first epoch with the best val U-F1") {
  const auto corpus = synth_corpus(40, 5, SynthRule::ScenePair, 2);
  const auto plan = make_splits(corpus, 2, 0.0, 1);
  const auto tr = corpus.select(plan.folds[0].train_ids);
  const auto val = corpus.select(plan.folds[0].val_ids);
  const auto A = build_cooccurrence(corpus.subset(plan.folds[0].train_ids));
  const auto r = fit(tr, val, A, small_config(5, 40));
  double best = -1.0;
  int first = 0;
  for (const auto& e : r.log) {
    REQUIRE(e.val);
    if (e.val->uf1 > best) {
      best = e.val->uf1;
      first = e.epoch;
    }
  }
  CHECK(r.best_epoch == first);
  CHECK(r.best_val->uf1 == best);
  // The retained parameters reproduce the logged validation score.
  const auto again = evaluate(predict_labels(val, A, r.best), labels_of(val));
  CHECK(again.uf1 == best);
}

TEST_CASE("cross-validated training is reproducible") {
  const auto corpus = synth_corpus(30, 4, SynthRule::ScenePair, 9);
  auto cfg = small_config(4, 5);
  const auto a = train(corpus, cfg);
  const auto b = train(corpus, cfg);
  CHECK(log_to_csv(a.log) == log_to_csv(b.log));
  REQUIRE(a.folds.size() == 3);
  for (std::size_t f = 0; f < 3; ++f) CHECK(a.folds[f].fit.best == b.folds[f].fit.best);

  SUBCASE("serial, parallel and parallel-fold execution agree") {
    auto serial = cfg;
    serial.exec = Exec::Serial;
    auto folds = cfg;
    folds.parallel_folds = true;
    CHECK(log_to_csv(train(corpus, serial).log) == log_to_csv(a.log));
    CHECK(log_to_csv(train(corpus, folds).log) == log_to_csv(a.log));
  }
  SUBCASE("a different seed changes the run") {
    auto other = cfg;
    other.seed = 4;
    CHECK(log_to_csv(train(corpus, other).log) != log_to_csv(a.log));
  }
}

TEST_CASE("log CSV layout") {
  const auto corpus = synth_corpus(30, 4, SynthRule::ScenePair, 9);
  const auto r = train(corpus, small_config(4, 2));
  const auto csv = log_to_csv(r.log);
  CHECK(csv.rfind("epoch,fold,train_loss,val_uba,val_f1_public,val_f1_private,val_uf1,seconds\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 2);
  CHECK(r.log[0].fold == 0);
  CHECK(r.log.back().fold == 2);
  CHECK(r.log.back().epoch == 2);
  // Timing is opt-in, so the column is constant by default.
  for (const auto& e : r.log) CHECK(e.seconds == 0.0);
}

TEST_CASE("the prior is built from training records only") {
  const auto corpus = synth_corpus(30, 6, SynthRule::ScenePair, 9);
  const auto r = train(corpus, small_config(6, 1));
  for (std::size_t f = 0; f < r.folds.size(); ++f) {
    const auto expect = build_cooccurrence(corpus.subset(r.plan.folds[f].train_ids));
    CHECK(r.folds[f].prior.matrix == expect.matrix);
  }
}

TEST_CASE("mean reduction scales the step inputs, not the selection rule") {
  const auto corpus = synth_corpus(20, 4, SynthRule::ScenePair, 1);
  auto cfg = small_config(4, 3);
  cfg.reduction = LossReduction::Mean;
  const auto A = build_cooccurrence(corpus);
  const auto r = fit(corpus.records(), {}, A, cfg);
  CHECK(r.log.size() == 3);
  CHECK(dataset_loss(corpus.records(), A, r.last, {}, LossReduction::Mean) ==
        doctest::Approx(dataset_loss(corpus.records(), A, r.last) / 20.0));
}

TEST_CASE("divergence aborts with coordinates") {
  const auto corpus = synth_corpus(20, 4, SynthRule::ScenePair, 1);
  auto cfg = small_config(4, 3);
  auto params = ModelParams::init(cfg.shape, 1);
  params.g2_w(0, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    fit(corpus.records(), {}, build_cooccurrence(corpus), cfg, 0, params);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch 1") != std::string::npos);
    CHECK(msg.find("batch 0") != std::string::npos);
  }
}

TEST_CASE("configuration validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  auto bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.adam.lr = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.features = {false, false};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  const auto corpus = synth_corpus(20, 4, SynthRule::ScenePair, 1);
  CHECK_THROWS_AS(train(corpus, cfg), ConfigError);  // K mismatch
}

TEST_CASE("protocol pools out-of-fold predictions") {
  const auto corpus = synth_corpus(45, 5, SynthRule::ScenePair, 4);
  auto cfg = small_config(5, 30);
  cfg.test_fraction = 0.2;
  const auto r = run_protocol(corpus, cfg);
  std::size_t val_total = 0;
  for (const auto& f : r.training.plan.folds) val_total += f.val_ids.size();
  CHECK(r.cv.total() == val_total);
  REQUIRE(r.test);
  CHECK(r.test->total() == r.training.plan.test_ids.size());
  CHECK(&r.headline() == &*r.test);
  CHECK(r.train_accuracy >= 0.0);
  CHECK(r.train_accuracy <= 1.0);
}

TEST_CASE("ablation tables have the expected rows") {
  const auto corpus = synth_corpus(36, 5, SynthRule::ScenePair, 4);
  auto cfg = small_config(5, 3);
  const auto priors = ablate_prior(corpus, cfg);
  REQUIRE(priors.size() == 6);
  CHECK(priors[0].name == "random generator");
  CHECK(priors[5].name == "co-occurrence");
  CHECK_FALSE(priors[0].train_accuracy);
  const auto features = ablate_features(corpus, cfg);
  REQUIRE(features.size() == 3);
  CHECK(features[2].name == "f_s+f_c");
  CHECK(rows_to_csv(ablate_prior(corpus, cfg), "adjacency") == rows_to_csv(priors, "adjacency"));
}

TEST_CASE("disabling the informative channel drops accuracy to chance") {
  // Labels depend on the designated object pair only.
  const auto corpus = synth_corpus(48, 5, SynthRule::PairOnly, 6);
  auto cfg = small_config(5, 150);
  auto scene_only = cfg;
  scene_only.features = {true, false};
  const auto r = run_protocol(corpus, scene_only);
  const auto counts = corpus.class_counts();
  const double majority = static_cast<double>(std::max(counts[0], counts[1])) / corpus.size();
  CHECK(std::abs(r.train_accuracy - 0.5) <= 0.1 + std::abs(majority - 0.5));
  // With both channels the same corpus is fit exactly.
  auto full = cfg;
  full.shape = {5, 3, 32, 4};
  full.epochs = 300;
  const auto A = build_cooccurrence(corpus);
  CHECK(accuracy(corpus.records(), A, fit(corpus.records(), {}, A, full).last) >= 0.99);
}
