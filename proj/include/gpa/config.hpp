// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpa/corpus.hpp"
#include "gpa/metrics.hpp"
#include "gpa/train.hpp"

namespace gpa {

/// Everything a CLI command may read. Populated from a JSON object whose keys
/// are listed by run_config_keys(); unknown keys are rejected.
struct RunConfig {
  TrainConfig train;
  std::filesystem::path corpus_path;
  std::filesystem::path output_dir = "out";
  bool overwrite = false;
  int max_objects = kDefaultMaxObjects;
  int threads = 0;  // 0 keeps the OpenMP default

  // synth
  std::filesystem::path out;
  std::size_t n = 128;
  SynthRule rule = SynthRule::ScenePair;

  // evaluate
  std::filesystem::path checkpoint;
  std::filesystem::path prior_path;

  BaselineCoin baseline_coin = BaselineCoin::Fair;
  bool corrupt_gradient = false;
};

const std::vector<std::string>& run_config_keys();

/// Throws ConfigError on unknown keys, wrong types or invalid values.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& cfg);

/// Reads a JSON config file and applies `--key value` overrides on top.
/// Override values are parsed as JSON when possible, otherwise taken as
/// strings.
nlohmann::json merge_config(const std::filesystem::path& file,
                            const std::map<std::string, std::string>& overrides);

std::string features_to_string(FeatureMask mask);
FeatureMask parse_features(const std::string& text);

}  // namespace gpa
