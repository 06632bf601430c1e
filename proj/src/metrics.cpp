// SPDX-License-Identifier: Apache-2.0
#include "gpa/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "gpa/errors.hpp"
#include "gpa/rng.hpp"

namespace gpa {

using nlohmann::json;

namespace {

ClassMetrics class_metrics(std::uint64_t hit, std::uint64_t false_pos, std::uint64_t false_neg) {
  ClassMetrics m;
  if (hit + false_pos > 0) m.precision = static_cast<double>(hit) / static_cast<double>(hit + false_pos);
  if (hit + false_neg > 0) m.recall = static_cast<double>(hit) / static_cast<double>(hit + false_neg);
  if (hit > 0) {
    m.f1 = 2.0 * static_cast<double>(hit) /
           static_cast<double>(2 * hit + false_pos + false_neg);
  }
  return m;
}

std::string fixed(double v, int decimals) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string opt_fixed(const std::optional<double>& v, const char* absent) {
  return v ? fixed(*v, 3) : absent;
}

std::vector<std::string> cells(const ReportRow& row, const char* absent) {
  const auto& r = row.report;
  return {row.name,
          opt_fixed(r.public_class.precision, absent),
          opt_fixed(r.public_class.recall, absent),
          fixed(r.public_class.f1, 3),
          opt_fixed(r.private_class.precision, absent),
          opt_fixed(r.private_class.recall, absent),
          fixed(r.private_class.f1, 3),
          fixed(r.uba, 2),
          fixed(r.uf1, 3)};
}

}  // namespace

EvalReport report_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t tn,
                              std::uint64_t fn) {
  EvalReport r{tp, fp, tn, fn, {}, {}, 0.0, 0.0};
  if (r.total() == 0) throw DataError("evaluate: no records");
  r.private_class = class_metrics(tp, fp, fn);
  r.public_class = class_metrics(tn, fn, fp);
  r.uba = 100.0 * static_cast<double>(tp + tn) / static_cast<double>(r.total());
  r.uf1 = (r.public_class.f1 + r.private_class.f1) / 2.0;
  return r;
}

EvalReport evaluate(std::span<const PrivacyClass> predictions,
                    std::span<const PrivacyClass> labels) {
  if (predictions.size() != labels.size()) {
    throw DataError("evaluate: " + std::to_string(predictions.size()) + " predictions for " +
                    std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw DataError("evaluate: no records");
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = predictions[i] == PrivacyClass::Private;
    const bool truth = labels[i] == PrivacyClass::Private;
    if (pred && truth) ++tp;
    else if (pred) ++fp;
    else if (truth) ++fn;
    else ++tn;
  }
  return report_from_counts(tp, fp, tn, fn);
}

EvalReport random_baseline(std::span<const PrivacyClass> labels, std::uint64_t seed,
                           BaselineCoin coin) {
  if (labels.empty()) throw DataError("random_baseline: no labels");
  double p_private = 0.5;
  if (coin == BaselineCoin::ClassPrior) {
    const auto n_private = std::count(labels.begin(), labels.end(), PrivacyClass::Private);
    p_private = static_cast<double>(n_private) / static_cast<double>(labels.size());
  }
  Rng rng(seed);
  std::vector<PrivacyClass> predictions;
  predictions.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    predictions.push_back(rng.coin(p_private) ? PrivacyClass::Private : PrivacyClass::Public);
  }
  return evaluate(predictions, labels);
}

json report_to_json(const EvalReport& r) {
  auto cls = [](const ClassMetrics& m) {
    return json{{"precision", m.precision ? json(*m.precision) : json(nullptr)},
                {"recall", m.recall ? json(*m.recall) : json(nullptr)},
                {"f1", m.f1}};
  };
  return {{"tp", r.tp},
          {"fp", r.fp},
          {"tn", r.tn},
          {"fn", r.fn},
          {"public", cls(r.public_class)},
          {"private", cls(r.private_class)},
          {"uba", r.uba},
          {"uf1", r.uf1}};
}

std::string rows_to_csv(const std::vector<ReportRow>& rows, const std::string& name_column) {
  const bool with_train = std::any_of(rows.begin(), rows.end(),
                                      [](const ReportRow& r) { return r.train_accuracy.has_value(); });
  std::ostringstream out;
  out << name_column << ",public_p,public_r,public_f1,private_p,private_r,private_f1,uba,uf1"
      << (with_train ? ",train_acc" : "") << '\n';
  for (const auto& row : rows) {
    const auto c = cells(row, "");
    for (std::size_t i = 0; i < c.size(); ++i) out << (i ? "," : "") << c[i];
    if (with_train) out << ',' << (row.train_accuracy ? fixed(*row.train_accuracy, 3) : "");
    out << '\n';
  }
  return out.str();
}

std::string rows_to_table(const std::vector<ReportRow>& rows, const std::string& name_column) {
  const std::vector<std::string> header{name_column, "Pub P", "Pub R", "Pub F1", "Priv P",
                                        "Priv R",    "Priv F1", "UBA(%)", "U-F1"};
  const bool with_train = std::any_of(rows.begin(), rows.end(),
                                      [](const ReportRow& r) { return r.train_accuracy.has_value(); });
  std::vector<std::string> header_cells = header;
  if (with_train) header_cells.push_back("Train acc");
  std::vector<std::vector<std::string>> body;
  for (const auto& row : rows) {
    body.push_back(cells(row, "-"));
    if (with_train) body.back().push_back(row.train_accuracy ? fixed(*row.train_accuracy, 3) : "-");
  }
  std::vector<std::size_t> width(header_cells.size());
  for (std::size_t i = 0; i < header_cells.size(); ++i) {
    width[i] = header_cells[i].size();
    for (const auto& b : body) width[i] = std::max(width[i], b[i].size());
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& line) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i == 0) {
        out << line[i] << std::string(width[i] - line[i].size(), ' ');
      } else {
        out << "  " << std::string(width[i] - line[i].size(), ' ') << line[i];
      }
    }
    out << '\n';
  };
  emit(header_cells);
  for (const auto& b : body) emit(b);
  return out.str();
}

}  // namespace gpa
