// SPDX-License-Identifier: Apache-2.0
#include "gpa/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "gpa/errors.hpp"
#include "gpa/rng.hpp"

namespace gpa {

using nlohmann::json;

int ImageRecord::total_objects() const {
  int total = 0;
  for (const auto& [k, n] : objects) total += n;
  return total;
}

int ImageRecord::count(int category) const {
  auto it = objects.find(category);
  return it == objects.end() ? 0 : it->second;
}

namespace {

std::string where(const ImageRecord& r) { return "record '" + r.id + "'"; }

void validate_record(const ImageRecord& r, int K) {
  const int label = to_int(r.label);
  if (label != 0 && label != 1) {
    throw DataError(where(r) + ": label must be 0 or 1");
  }
  for (double s : r.scene_logits) {
    if (!std::isfinite(s)) throw DataError(where(r) + ": non-finite scene logit");
  }
  for (const auto& [k, n] : r.objects) {
    if (k < 0 || k >= K) {
      throw DataError(where(r) + ": category " + std::to_string(k) +
                      " outside [0, " + std::to_string(K - 1) + "]");
    }
    if (n < 1) {
      throw DataError(where(r) + ": count for category " + std::to_string(k) +
                      " must be positive");
    }
  }
}

}  // namespace

Corpus::Corpus(std::vector<ImageRecord> records, int K,
               std::vector<std::string> category_names)
    : records_(std::move(records)), K_(K), names_(std::move(category_names)) {
  if (K_ < 1) throw DataError("K must be at least 1");
  if (!names_.empty() && static_cast<int>(names_.size()) != K_) {
    throw DataError("category_names must list exactly K names");
  }
  for (std::size_t i = 0; i < records_.size(); ++i) {
    validate_record(records_[i], K_);
    if (!index_.emplace(records_[i].id, i).second) {
      throw DataError("duplicate record id '" + records_[i].id + "'");
    }
  }
}

std::size_t Corpus::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw DataError("unknown record id '" + id + "'");
  return it->second;
}

const ImageRecord& Corpus::at(const std::string& id) const {
  return records_[index_of(id)];
}

std::vector<ImageRecord> Corpus::select(const std::vector<std::string>& ids) const {
  std::vector<ImageRecord> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(at(id));
  return out;
}

Corpus Corpus::subset(const std::vector<std::string>& ids) const {
  return Corpus(select(ids), K_, names_);
}

std::array<std::size_t, 2> Corpus::class_counts() const {
  std::array<std::size_t, 2> counts{0, 0};
  for (const auto& r : records_) ++counts[to_int(r.label)];
  return counts;
}

void clip_objects(ImageRecord& record, int max_objects) {
  int total = record.total_objects();
  while (total > max_objects) {
    auto top = record.objects.begin();
    for (auto it = record.objects.begin(); it != record.objects.end(); ++it) {
      if (it->second > top->second) top = it;
    }
    if (--top->second == 0) record.objects.erase(top);
    --total;
  }
}

ImageRecord parse_record(const std::string& line, std::size_t line_no) {
  const std::string at = "line " + std::to_string(line_no) + ": ";
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(at + "malformed JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw DataError(at + "expected a JSON object");

  static const std::set<std::string> allowed{"id", "label", "scene_logits",
                                             "objects", "split"};
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw DataError(at + "unknown key '" + key + "'");
  }
  for (const char* key : {"id", "label", "scene_logits", "objects"}) {
    if (!j.contains(key)) throw DataError(at + "missing key '" + key + "'");
  }

  ImageRecord r;
  if (!j["id"].is_string()) throw DataError(at + "'id' must be a string");
  r.id = j["id"].get<std::string>();

  const auto& label = j["label"];
  if (!label.is_number_integer()) throw DataError(at + "'label' must be an integer");
  const auto lv = label.get<std::int64_t>();
  if (lv != 0 && lv != 1) throw DataError(at + "'label' must be 0 or 1");
  r.label = static_cast<PrivacyClass>(lv);

  const auto& scene = j["scene_logits"];
  if (!scene.is_array() || scene.size() != 2 || !scene[0].is_number() ||
      !scene[1].is_number()) {
    throw DataError(at + "'scene_logits' must be an array of 2 numbers");
  }
  r.scene_logits = {scene[0].get<double>(), scene[1].get<double>()};

  const auto& objects = j["objects"];
  if (!objects.is_object()) throw DataError(at + "'objects' must be an object");
  for (const auto& [key, value] : objects.items()) {
    const bool decimal = !key.empty() && key.size() <= 9 &&
                         std::all_of(key.begin(), key.end(),
                                     [](unsigned char c) { return std::isdigit(c); });
    if (!decimal) throw DataError(at + "object key '" + key + "' is not a category index");
    if (!value.is_number_integer() || value.get<std::int64_t>() < 1 ||
        value.get<std::int64_t>() > 1'000'000) {
      throw DataError(at + "count for category " + key + " must be a positive integer");
    }
    r.objects[std::stoi(key)] = static_cast<int>(value.get<std::int64_t>());
  }

  if (j.contains("split")) {
    if (!j["split"].is_string()) throw DataError(at + "'split' must be a string");
    r.split_hint = j["split"].get<std::string>();
  }
  return r;
}

json record_to_json(const ImageRecord& r) {
  json objects = json::object();
  for (const auto& [k, n] : r.objects) objects[std::to_string(k)] = n;
  json j = {{"id", r.id},
            {"label", to_int(r.label)},
            {"scene_logits", {r.scene_logits[0], r.scene_logits[1]}},
            {"objects", objects}};
  if (r.split_hint) j["split"] = *r.split_hint;
  return j;
}

Corpus read_corpus(std::istream& in, int K, int max_objects) {
  if (max_objects < 1) throw ConfigError("max_objects must be at least 1");
  std::vector<ImageRecord> records;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ImageRecord r = parse_record(line, line_no);
    if (!seen.insert(r.id).second) {
      throw DataError("line " + std::to_string(line_no) + ": duplicate id '" + r.id + "'");
    }
    try {
      validate_record(r, K);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    clip_objects(r, max_objects);
    records.push_back(std::move(r));
  }
  return Corpus(std::move(records), K);
}

Corpus load_corpus(const std::filesystem::path& path, int K, int max_objects) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open corpus file '" + path.string() + "'");
  return read_corpus(in, K, max_objects);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& r : corpus.records()) out << record_to_json(r).dump() << '\n';
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  write_corpus(out, corpus);
}

SplitPlan make_splits(const Corpus& corpus, int n_folds, double test_fraction,
                      std::uint64_t seed) {
  if (n_folds < 2) throw ConfigError("n_folds must be at least 2");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in [0, 1)");
  }

  Rng rng(seed);
  std::vector<int> test_rank, fold_of(corpus.size(), -1);
  std::vector<bool> is_test(corpus.size(), false);
  for (int c = 0; c < 2; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (to_int(corpus.records()[i].label) == c) members.push_back(i);
    }
    rng.shuffle(members);
    const auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(members.size())));
    if (members.size() - n_test < static_cast<std::size_t>(n_folds)) {
      throw ConfigError("class " + std::to_string(c) + " has " +
                        std::to_string(members.size() - n_test) +
                        " non-test records, fewer than n_folds=" +
                        std::to_string(n_folds));
    }
    for (std::size_t p = 0; p < members.size(); ++p) {
      if (p < n_test) {
        is_test[members[p]] = true;
      } else {
        fold_of[members[p]] = static_cast<int>((p - n_test) % n_folds);
      }
    }
  }

  SplitPlan plan;
  plan.seed = seed;
  plan.n_folds = n_folds;
  plan.folds.resize(n_folds);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& id = corpus.records()[i].id;
    if (is_test[i]) {
      plan.test_ids.push_back(id);
      continue;
    }
    for (int f = 0; f < n_folds; ++f) {
      (f == fold_of[i] ? plan.folds[f].val_ids : plan.folds[f].train_ids).push_back(id);
    }
  }
  return plan;
}

json split_plan_to_json(const SplitPlan& plan) {
  json folds = json::array();
  for (const auto& f : plan.folds) folds.push_back({{"train", f.train_ids}, {"val", f.val_ids}});
  return {{"seed", plan.seed}, {"n_folds", plan.n_folds}, {"test", plan.test_ids},
          {"folds", folds}};
}

SplitPlan split_plan_from_json(const json& j) {
  try {
    SplitPlan plan;
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.n_folds = j.at("n_folds").get<int>();
    plan.test_ids = j.at("test").get<std::vector<std::string>>();
    for (const auto& f : j.at("folds")) {
      plan.folds.push_back({f.at("train").get<std::vector<std::string>>(),
                            f.at("val").get<std::vector<std::string>>()});
    }
    if (static_cast<int>(plan.folds.size()) != plan.n_folds) {
      throw DataError("split plan: folds array length differs from n_folds");
    }
    return plan;
  } catch (const json::exception& e) {
    throw DataError(std::string("split plan: ") + e.what());
  }
}

SynthRule parse_synth_rule(const std::string& name) {
  if (name == "scene_pair") return SynthRule::ScenePair;
  if (name == "scene_only") return SynthRule::SceneOnly;
  if (name == "pair_only") return SynthRule::PairOnly;
  throw ConfigError("unknown synthetic rule '" + name +
                    "' (expected scene_pair, scene_only or pair_only)");
}

std::string to_string(SynthRule rule) {
  switch (rule) {
    case SynthRule::ScenePair: return "scene_pair";
    case SynthRule::SceneOnly: return "scene_only";
    case SynthRule::PairOnly: return "pair_only";
  }
  return "?";
}

std::array<int, 2> designated_pair(int K) { return {K - 2, K - 1}; }

PrivacyClass synth_rule_label(const ImageRecord& r, SynthRule rule, int K) {
  const auto [a, b] = designated_pair(K);
  const bool pair = r.count(a) > 0 && r.count(b) > 0;
  const bool scene = r.scene_logits[0] > r.scene_logits[1];
  bool priv = false;
  switch (rule) {
    case SynthRule::ScenePair: priv = pair && scene; break;
    case SynthRule::SceneOnly: priv = scene; break;
    case SynthRule::PairOnly: priv = pair; break;
  }
  return priv ? PrivacyClass::Private : PrivacyClass::Public;
}

Corpus synth_corpus(std::size_t n, int K, SynthRule rule, std::uint64_t seed) {
  if (n < 2) throw ConfigError("synthetic corpus needs n >= 2");
  if (K < 2) throw ConfigError("synthetic corpus needs K >= 2");

  Rng rng(seed);
  const auto [pa, pb] = designated_pair(K);
  // Noise categories exclude background (0) and the designated pair.
  std::vector<int> noise_pool;
  for (int k = 1; k < K - 2; ++k) noise_pool.push_back(k);

  std::vector<ImageRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ImageRecord r;
    std::ostringstream id;
    id << "synth-" << std::setw(6) << std::setfill('0') << i;
    r.id = id.str();
    const bool priv = rng.coin();

    const double s1 = rng.uniform(-1.0, 1.0);
    const double margin = rng.uniform(0.5, 1.5);
    if (rule == SynthRule::PairOnly) {
      r.scene_logits = {s1, rng.uniform(-1.0, 1.0)};
    } else {
      r.scene_logits = {s1, priv ? s1 - margin : s1 + margin};
    }

    // 0: both, 1: first only, 2: second only, 3: neither.
    std::uint64_t pair_state;
    if (rule == SynthRule::SceneOnly) {
      pair_state = rng.below(4);
    } else {
      pair_state = priv ? 0 : 1 + rng.below(3);
    }
    if (pair_state == 0 || pair_state == 1) r.objects[pa] = 1;
    if (pair_state == 0 || pair_state == 2) r.objects[pb] = 1;

    if (!noise_pool.empty()) {
      const auto n_noise = rng.below(3);
      for (std::uint64_t t = 0; t < n_noise; ++t) {
        const int k = noise_pool[rng.below(noise_pool.size())];
        r.objects[k] = 1 + static_cast<int>(rng.below(2));
      }
    }
    if (r.objects.empty()) r.objects[0] = 1;

    r.label = synth_rule_label(r, rule, K);
    records.push_back(std::move(r));
  }
  return Corpus(std::move(records), K);
}

}  // namespace gpa
