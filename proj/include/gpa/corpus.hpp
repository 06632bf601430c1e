// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace gpa {

enum class PrivacyClass : int { Public = 0, Private = 1 };

inline int to_int(PrivacyClass c) { return static_cast<int>(c); }

inline constexpr int kDefaultCategories = 81;
inline constexpr int kDefaultMaxObjects = 12;

/// One image as seen by the classifier: label, two scene logits and
/// per-category object counts. Categories absent from `objects` have count 0.
struct ImageRecord {
  std::string id;
  PrivacyClass label = PrivacyClass::Public;
  std::array<double, 2> scene_logits{0.0, 0.0};
  std::map<int, int> objects;
  std::optional<std::string> split_hint;

  int total_objects() const;
  int count(int category) const;
  bool operator==(const ImageRecord&) const = default;
};

/// Validated, immutable collection of records over K object categories.
class Corpus {
 public:
  Corpus() = default;
  /// Throws DataError if any record violates the invariants for K.
  Corpus(std::vector<ImageRecord> records, int K,
         std::vector<std::string> category_names = {});

  const std::vector<ImageRecord>& records() const { return records_; }
  int K() const { return K_; }
  const std::vector<std::string>& category_names() const { return names_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  /// Index of the record with the given id. Throws DataError if unknown.
  std::size_t index_of(const std::string& id) const;
  const ImageRecord& at(const std::string& id) const;

  /// Records in the order of `ids`.
  std::vector<ImageRecord> select(const std::vector<std::string>& ids) const;
  /// Sub-corpus over the same K, keeping the order of `ids`.
  Corpus subset(const std::vector<std::string>& ids) const;

  std::array<std::size_t, 2> class_counts() const;

 private:
  std::vector<ImageRecord> records_;
  int K_ = kDefaultCategories;
  std::vector<std::string> names_;
  std::map<std::string, std::size_t> index_;
};

/// Reduces object counts one unit at a time, always from the category with
/// the highest remaining count (lower index first on ties), until the total
/// is at most max_objects.
void clip_objects(ImageRecord& record, int max_objects);

/// Parses one JSON Lines record. `line_no` only labels error messages.
ImageRecord parse_record(const std::string& line, std::size_t line_no);
nlohmann::json record_to_json(const ImageRecord& record);

Corpus read_corpus(std::istream& in, int K = kDefaultCategories,
                   int max_objects = kDefaultMaxObjects);
/// Throws ConfigError if the file cannot be opened, DataError on bad content.
Corpus load_corpus(const std::filesystem::path& path, int K = kDefaultCategories,
                   int max_objects = kDefaultMaxObjects);
void write_corpus(std::ostream& out, const Corpus& corpus);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);

struct Fold {
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  bool operator==(const Fold&) const = default;
};

struct SplitPlan {
  std::vector<Fold> folds;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;
  int n_folds = 0;
  bool operator==(const SplitPlan&) const = default;
};

/// Stratified test hold-out plus stratified k-fold partition of the rest.
/// test_fraction may be 0 (no test set). Deterministic in `seed`.
SplitPlan make_splits(const Corpus& corpus, int n_folds, double test_fraction,
                      std::uint64_t seed);

nlohmann::json split_plan_to_json(const SplitPlan& plan);
SplitPlan split_plan_from_json(const nlohmann::json& j);

/// How synthetic labels relate to the generated features.
enum class SynthRule {
  /// Private iff the designated pair is present and s1 > s2; generated so
  /// that both cues agree.
  ScenePair,
  /// Private iff s1 > s2; pair presence is independent noise.
  SceneOnly,
  /// Private iff the designated pair is present; scene logits are noise.
  PairOnly,
};

SynthRule parse_synth_rule(const std::string& name);
std::string to_string(SynthRule rule);

/// The two categories whose joint presence carries the label in synthetic
/// corpora: (K-2, K-1).
std::array<int, 2> designated_pair(int K);

/// The label the generating rule assigns to a record.
PrivacyClass synth_rule_label(const ImageRecord& record, SynthRule rule, int K);

Corpus synth_corpus(std::size_t n, int K, SynthRule rule, std::uint64_t seed);

}  // namespace gpa
