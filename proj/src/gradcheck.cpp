// SPDX-License-Identifier: Apache-2.0
#include "gpa/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gpa/rng.hpp"

namespace gpa {

std::string GradCheckReport::summary() const {
  std::string out;
  char buf[256];
  for (const auto& t : tensors) {
    std::snprintf(buf, sizeof buf, "  %-16s entries=%-5zu max_rel=%.3e max_abs=%.3e\n",
                  t.name.c_str(), t.entries, t.max_rel_error, t.max_abs_error);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%s: max relative error %.3e (tolerance %.1e), worst tensor %s\n",
                passed ? "PASS" : "FAIL", max_rel_error, tolerance, worst_tensor.c_str());
  out += buf;
  return out;
}

GradCheckReport gradcheck(std::span<const ImageRecord> batch, const AdjacencyPrior& A,
                          const ModelParams& params, FeatureMask mask,
                          const GradCheckOptions& opts) {
  Gradient analytic = batch_gradient_serial(batch, A, params, mask).grad;
  if (opts.corrupt) analytic.g2_b(0, 0) += 0.1;

  auto summed_loss = [&](const ModelParams& p) {
    double total = 0.0;
    for (const auto& r : batch) total += record_loss(forward(r, A, p, mask).probs(), r.label);
    return total;
  };

  GradCheckReport report;
  report.tolerance = opts.tolerance;
  ModelParams probe = params;
  for (int t = 0; t < kParamTensorCount; ++t) {
    Eigen::MatrixXd& m = probe.tensor(t);
    const Eigen::MatrixXd& a = analytic.tensor(t);
    TensorCheck check{std::string(kParamNames[t]), static_cast<std::size_t>(m.size()), 0.0, 0.0, 0};
    std::size_t flat = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c, ++flat) {
        const double saved = m(r, c);
        m(r, c) = saved + opts.eps;
        const double up = summed_loss(probe);
        m(r, c) = saved - opts.eps;
        const double down = summed_loss(probe);
        m(r, c) = saved;
        const double numeric = (up - down) / (2.0 * opts.eps);
        const double abs_err = std::abs(numeric - a(r, c));
        const double rel_err =
            abs_err / std::max({opts.floor, std::abs(numeric), std::abs(a(r, c))});
        check.max_abs_error = std::max(check.max_abs_error, abs_err);
        if (rel_err > check.max_rel_error) {
          check.max_rel_error = rel_err;
          check.worst_entry = flat;
        }
      }
    }
    if (check.max_rel_error >= report.max_rel_error) {
      report.max_rel_error = check.max_rel_error;
      report.worst_tensor = check.name;
    }
    report.tensors.push_back(std::move(check));
  }
  report.passed = report.max_rel_error <= opts.tolerance;
  return report;
}

GradCheckInstance small_gradcheck_instance(std::uint64_t seed, int K, int L, std::size_t batch) {
  const Corpus corpus = synth_corpus(batch, K, SynthRule::ScenePair, seed);
  GradCheckInstance inst{corpus.records(), build_fixed(PriorKind::Random, K, seed),
                         ModelParams::init(ModelShape{K, L, 32, 4}, mix_seed(seed))};
  return inst;
}

}  // namespace gpa
