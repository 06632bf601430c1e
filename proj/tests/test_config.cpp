// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "gpa/config.hpp"
#include "gpa/errors.hpp"

using namespace gpa;
using nlohmann::json;

TEST_CASE("defaults follow the training protocol") {
  const auto c = run_config_from_json(json::object());
  CHECK(c.train.epochs == 50);
  CHECK(c.train.batch_size == 64);
  CHECK(c.train.adam.lr == 1e-4);
  CHECK(c.train.adam.beta1 == 0.9);
  CHECK(c.train.adam.beta2 == 0.999);
  CHECK(c.train.adam.eps == 1e-8);
  CHECK(c.train.n_folds == 3);
  CHECK(c.train.shape == ModelShape{81, 3, 32, 4});
  CHECK(c.train.prior_kind == PriorKind::Cooccurrence);
  CHECK(c.max_objects == 12);
}

TEST_CASE("keys are typed and unknown keys rejected") {
  CHECK_THROWS_AS(run_config_from_json({{"learning_rate", 0.1}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json({{"epochs", "ten"}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json({{"epochs", 1.5}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json({{"prior_kind", "learned"}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json({{"features", ""}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json({{"lr", -1}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(json::array()), ConfigError);

  const auto c = run_config_from_json({{"features", json::array({"f_c"})},
                                       {"prior_kind", "class"},
                                       {"loss_reduction", "mean"},
                                       {"seed", 12}});
  CHECK(c.train.features == FeatureMask{false, true});
  CHECK(c.train.prior_kind == PriorKind::ClassFreq);
  CHECK(c.train.reduction == LossReduction::Mean);
  CHECK(c.train.seed == 12);
}

TEST_CASE("file values are overridden by flags") {
  const auto path = std::filesystem::temp_directory_path() / "gpa_config_test.json";
  {
    std::ofstream out(path);
    out << R"({"epochs": 7, "lr": 0.01, "prior_kind": "ones"})";
  }
  const auto j = merge_config(path, {{"lr", "1e-3"}, {"prior_kind", "uniform"}, {"corpus", "x.jsonl"}});
  const auto c = run_config_from_json(j);
  CHECK(c.train.epochs == 7);
  CHECK(c.train.adam.lr == 1e-3);
  CHECK(c.train.prior_kind == PriorKind::Uniform);
  CHECK(c.corpus_path == "x.jsonl");
  std::filesystem::remove(path);

  CHECK_THROWS_AS(merge_config("/nonexistent.json", {}), ConfigError);
}

TEST_CASE("config JSON round trip") {
  auto c = run_config_from_json({{"epochs", 3}, {"features", "scene"}, {"rule", "pair_only"}});
  const auto back = run_config_from_json(run_config_to_json(c));
  CHECK(back.train.epochs == 3);
  CHECK(back.train.features == FeatureMask{true, false});
  CHECK(back.rule == SynthRule::PairOnly);
}
