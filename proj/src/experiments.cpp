// SPDX-License-Identifier: Apache-2.0
#include "gpa/experiments.hpp"

#include "gpa/errors.hpp"

namespace gpa {

ProtocolResult run_protocol(const Corpus& corpus, const TrainConfig& cfg) {
  ProtocolResult out;
  out.training = train(corpus, cfg);
  const auto& plan = out.training.plan;

  std::vector<PrivacyClass> cv_pred, cv_truth;
  std::size_t train_hits = 0, train_total = 0;
  int best_fold = 0;
  double best_uf1 = -1.0;
  for (int f = 0; f < static_cast<int>(out.training.folds.size()); ++f) {
    const auto& fold = out.training.folds[f];
    const auto& params = fold.fit.best;
    const auto val = corpus.select(plan.folds[f].val_ids);
    const auto pred = predict_labels(val, fold.prior, params, cfg.features, cfg.exec);
    cv_pred.insert(cv_pred.end(), pred.begin(), pred.end());
    for (const auto& r : val) cv_truth.push_back(r.label);

    const auto tr = corpus.select(plan.folds[f].train_ids);
    const auto tr_pred = predict_labels(tr, fold.prior, params, cfg.features, cfg.exec);
    for (std::size_t i = 0; i < tr.size(); ++i) train_hits += tr_pred[i] == tr[i].label;
    train_total += tr.size();

    const double uf1 = fold.fit.best_val ? fold.fit.best_val->uf1 : 0.0;
    if (uf1 > best_uf1) {
      best_uf1 = uf1;
      best_fold = f;
    }
  }
  out.cv = evaluate(cv_pred, cv_truth);
  out.train_accuracy =
      train_total ? static_cast<double>(train_hits) / static_cast<double>(train_total) : 0.0;
  out.eval_labels = cv_truth;

  if (!plan.test_ids.empty()) {
    const auto& fold = out.training.folds[best_fold];
    const auto test = corpus.select(plan.test_ids);
    out.test = evaluate(predict_labels(test, fold.prior, fold.fit.best, cfg.features, cfg.exec),
                        labels_of(test));
    out.eval_labels = labels_of(test);
  }
  return out;
}

std::vector<ReportRow> ablate_prior(const Corpus& corpus, const TrainConfig& cfg,
                                    BaselineCoin coin) {
  std::vector<ReportRow> rows;
  std::vector<PrivacyClass> labels;
  const std::pair<const char*, PriorKind> kinds[] = {{"uniform", PriorKind::Uniform},
                                                    {"random", PriorKind::Random},
                                                    {"ones", PriorKind::Ones},
                                                    {"class", PriorKind::ClassFreq},
                                                    {"co-occurrence", PriorKind::Cooccurrence}};
  for (const auto& [name, kind] : kinds) {
    TrainConfig row_cfg = cfg;
    row_cfg.prior_kind = kind;
    const auto result = run_protocol(corpus, row_cfg);
    labels = result.eval_labels;
    rows.push_back({name, result.headline(), result.train_accuracy});
  }
  rows.insert(rows.begin(), ReportRow{"random generator", random_baseline(labels, cfg.seed, coin),
                                      std::nullopt});
  return rows;
}

std::vector<ReportRow> ablate_features(const Corpus& corpus, const TrainConfig& cfg) {
  const std::pair<const char*, FeatureMask> subsets[] = {
      {"f_s", {true, false}}, {"f_c", {false, true}}, {"f_s+f_c", {true, true}}};
  std::vector<ReportRow> rows;
  for (const auto& [name, mask] : subsets) {
    TrainConfig row_cfg = cfg;
    row_cfg.features = mask;
    const auto result = run_protocol(corpus, row_cfg);
    rows.push_back({name, result.headline(), result.train_accuracy});
  }
  return rows;
}

}  // namespace gpa
