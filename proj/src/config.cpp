// SPDX-License-Identifier: Apache-2.0
#include "gpa/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "gpa/errors.hpp"

namespace gpa {

using nlohmann::json;

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys{
      "corpus",      "output_dir",     "overwrite",      "K",         "max_objects",
      "epochs",      "batch_size",     "lr",             "beta1",     "beta2",
      "eps",         "n_folds",        "test_fraction",  "seed",      "L",
      "h1",          "d_a",            "prior_kind",     "features",  "loss_reduction",
      "exec",        "parallel_folds", "record_timing",  "threads",   "out",
      "n",           "rule",           "checkpoint",     "prior",     "baseline_coin",
      "corrupt_gradient"};
  return keys;
}

std::string features_to_string(FeatureMask mask) {
  if (mask.scene && mask.cardinality) return "scene,cardinality";
  if (mask.scene) return "scene";
  if (mask.cardinality) return "cardinality";
  return "";
}

FeatureMask parse_features(const std::string& text) {
  FeatureMask mask{false, false};
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "scene" || item == "f_s") mask.scene = true;
    else if (item == "cardinality" || item == "f_c") mask.cardinality = true;
    else if (!item.empty()) throw ConfigError("unknown feature '" + item + "'");
  }
  if (!mask.any()) throw ConfigError("feature set is empty");
  return mask;
}

namespace {

template <class T>
T get(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

int get_int(const json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
  return v.get<int>();
}

double get_number(const json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return v.get<double>();
}

bool get_bool(const json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError("config key '" + key + "' must be true or false");
  return v.get<bool>();
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const auto& keys = run_config_keys();
  for (const auto& [key, value] : j.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  RunConfig c;
  auto& t = c.train;
  auto has = [&](const char* k) { return j.contains(k); };
  if (has("corpus")) c.corpus_path = get<std::string>(j, "corpus");
  if (has("output_dir")) c.output_dir = get<std::string>(j, "output_dir");
  if (has("overwrite")) c.overwrite = get_bool(j, "overwrite");
  if (has("K")) t.shape.K = get_int(j, "K");
  if (has("max_objects")) c.max_objects = get_int(j, "max_objects");
  if (has("epochs")) t.epochs = get_int(j, "epochs");
  if (has("batch_size")) t.batch_size = get_int(j, "batch_size");
  if (has("lr")) t.adam.lr = get_number(j, "lr");
  if (has("beta1")) t.adam.beta1 = get_number(j, "beta1");
  if (has("beta2")) t.adam.beta2 = get_number(j, "beta2");
  if (has("eps")) t.adam.eps = get_number(j, "eps");
  if (has("n_folds")) t.n_folds = get_int(j, "n_folds");
  if (has("test_fraction")) t.test_fraction = get_number(j, "test_fraction");
  if (has("seed")) {
    const auto& v = j["seed"];
    const bool ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    if (!ok) throw ConfigError("config key 'seed' must be a nonnegative integer");
    t.seed = j["seed"].get<std::uint64_t>();
  }
  if (has("L")) t.shape.L = get_int(j, "L");
  if (has("h1")) t.shape.h1 = get_int(j, "h1");
  if (has("d_a")) t.shape.d_a = get_int(j, "d_a");
  if (has("prior_kind")) t.prior_kind = parse_prior_kind(get<std::string>(j, "prior_kind"));
  if (has("features")) {
    const auto& f = j["features"];
    if (f.is_array()) {
      std::string joined;
      for (const auto& item : f) joined += get<std::string>(json{{"f", item}}, "f") + ",";
      t.features = parse_features(joined);
    } else {
      t.features = parse_features(get<std::string>(j, "features"));
    }
  }
  if (has("loss_reduction")) {
    const auto r = get<std::string>(j, "loss_reduction");
    if (r == "sum") t.reduction = LossReduction::Sum;
    else if (r == "mean") t.reduction = LossReduction::Mean;
    else throw ConfigError("loss_reduction must be 'sum' or 'mean'");
  }
  if (has("exec")) {
    const auto e = get<std::string>(j, "exec");
    if (e == "serial") t.exec = Exec::Serial;
    else if (e == "parallel") t.exec = Exec::Parallel;
    else throw ConfigError("exec must be 'serial' or 'parallel'");
  }
  if (has("parallel_folds")) t.parallel_folds = get_bool(j, "parallel_folds");
  if (has("record_timing")) t.record_timing = get_bool(j, "record_timing");
  if (has("threads")) c.threads = get_int(j, "threads");
  if (has("out")) c.out = get<std::string>(j, "out");
  if (has("n")) {
    const int n = get_int(j, "n");
    if (n < 2) throw ConfigError("n must be >= 2");
    c.n = static_cast<std::size_t>(n);
  }
  if (has("rule")) c.rule = parse_synth_rule(get<std::string>(j, "rule"));
  if (has("checkpoint")) c.checkpoint = get<std::string>(j, "checkpoint");
  if (has("prior")) c.prior_path = get<std::string>(j, "prior");
  if (has("baseline_coin")) {
    const auto b = get<std::string>(j, "baseline_coin");
    if (b == "fair") c.baseline_coin = BaselineCoin::Fair;
    else if (b == "prior") c.baseline_coin = BaselineCoin::ClassPrior;
    else throw ConfigError("baseline_coin must be 'fair' or 'prior'");
  }
  if (has("corrupt_gradient")) c.corrupt_gradient = get_bool(j, "corrupt_gradient");

  if (c.max_objects < 1) throw ConfigError("max_objects must be >= 1");
  if (c.threads < 0) throw ConfigError("threads must be >= 0");
  t.validate();
  return c;
}

json run_config_to_json(const RunConfig& c) {
  const auto& t = c.train;
  return {{"corpus", c.corpus_path.string()},
          {"output_dir", c.output_dir.string()},
          {"overwrite", c.overwrite},
          {"K", t.shape.K},
          {"max_objects", c.max_objects},
          {"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"lr", t.adam.lr},
          {"beta1", t.adam.beta1},
          {"beta2", t.adam.beta2},
          {"eps", t.adam.eps},
          {"n_folds", t.n_folds},
          {"test_fraction", t.test_fraction},
          {"seed", t.seed},
          {"L", t.shape.L},
          {"h1", t.shape.h1},
          {"d_a", t.shape.d_a},
          {"prior_kind", to_string(t.prior_kind)},
          {"features", features_to_string(t.features)},
          {"loss_reduction", t.reduction == LossReduction::Sum ? "sum" : "mean"},
          {"exec", t.exec == Exec::Serial ? "serial" : "parallel"},
          {"parallel_folds", t.parallel_folds},
          {"record_timing", t.record_timing},
          {"threads", c.threads},
          {"out", c.out.string()},
          {"n", c.n},
          {"rule", to_string(c.rule)},
          {"checkpoint", c.checkpoint.string()},
          {"prior", c.prior_path.string()},
          {"baseline_coin", c.baseline_coin == BaselineCoin::Fair ? "fair" : "prior"},
          {"corrupt_gradient", c.corrupt_gradient}};
}

json merge_config(const std::filesystem::path& file,
                  const std::map<std::string, std::string>& overrides) {
  json j = json::object();
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file '" + file.string() + "'");
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file: " + std::string(e.what()));
    }
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  }
  for (const auto& [key, text] : overrides) {
    json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
    j[key] = value.is_discarded() ? json(text) : value;
  }
  return j;
}

}  // namespace gpa
