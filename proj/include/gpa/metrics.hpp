// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpa/corpus.hpp"

namespace gpa {

/// Precision and recall are absent when their denominator is zero; F1 is
/// then 0.
struct ClassMetrics {
  std::optional<double> precision;
  std::optional<double> recall;
  double f1 = 0.0;
};

/// Binary evaluation with private as the positive class.
struct EvalReport {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  ClassMetrics public_class;
  ClassMetrics private_class;
  double uba = 0.0;  // percent
  double uf1 = 0.0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  double accuracy() const { return uba / 100.0; }
};

/// Builds the report from confusion counts. Throws DataError if all are zero.
EvalReport report_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t tn,
                              std::uint64_t fn);

/// Throws DataError on empty or mismatched inputs.
EvalReport evaluate(std::span<const PrivacyClass> predictions,
                    std::span<const PrivacyClass> labels);

enum class BaselineCoin { Fair, ClassPrior };

/// Scores random predictions: a fair coin per record, or a coin biased to the
/// private fraction of `labels`. Deterministic per seed.
EvalReport random_baseline(std::span<const PrivacyClass> labels, std::uint64_t seed,
                           BaselineCoin coin = BaselineCoin::Fair);

nlohmann::json report_to_json(const EvalReport& report);

struct ReportRow {
  std::string name;
  EvalReport report;
  std::optional<double> train_accuracy;
};

/// CSV with a header; three decimals, UBA two. Absent precision is empty.
/// A train_acc column is appended when any row carries one.
std::string rows_to_csv(const std::vector<ReportRow>& rows, const std::string& name_column);
/// Aligned text table in the order Public P/R/F1, Private P/R/F1, UBA, U-F1.
std::string rows_to_table(const std::vector<ReportRow>& rows, const std::string& name_column);

}  // namespace gpa
