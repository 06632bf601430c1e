// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <limits>

#include "gpa/backprop.hpp"
#include "gpa/errors.hpp"
#include "gpa/gradcheck.hpp"
#include "gpa/kernels.hpp"
#include "oracle.hpp"

using namespace gpa;

namespace {

double max_rel(const Gradient& a, const Gradient& b, std::string* worst = nullptr) {
  double out = 0.0;
  for (int t = 0; t < kParamTensorCount; ++t) {
    const auto& x = a.tensor(t);
    const auto& y = b.tensor(t);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double d = std::abs(x(i) - y(i)) / std::max({1e-4, std::abs(x(i)), std::abs(y(i))});
      if (d > out) {
        out = d;
        if (worst) *worst = std::string(kParamNames[t]);
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("cross-entropy values") {
  const std::vector<Eigen::Vector2d> half{{0.5, 0.5}};
  const std::vector<PrivacyClass> priv{PrivacyClass::Private};
  CHECK(loss(half, priv).value == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  const std::vector<Eigen::Vector2d> sure{{1e-12, 1.0 - 1e-12}};
  CHECK(loss(sure, priv).value == doctest::Approx(1e-12).epsilon(1e-3));

  const std::vector<Eigen::Vector2d> three{{0.1, 0.9}, {0.8, 0.2}, {0.3, 0.7}};
  const std::vector<PrivacyClass> labels{PrivacyClass::Private, PrivacyClass::Public,
                                         PrivacyClass::Private};
  const auto l = loss(three, labels);
  CHECK(l.batch_size == 3);
  CHECK(l.value == doctest::Approx(0.105361 + 0.223144 + 0.356675).epsilon(1e-6));

  // Exact 0/1 probabilities are clamped instead of producing infinities.
  const std::vector<Eigen::Vector2d> wrong{{1.0, 0.0}};
  CHECK(loss(wrong, priv).value == doctest::Approx(-std::log(1e-12)));

  const std::vector<Eigen::Vector2d> doubled{{0.1, 0.9}, {0.8, 0.2}, {0.3, 0.7},
                                             {0.1, 0.9}, {0.8, 0.2}, {0.3, 0.7}};
  const std::vector<PrivacyClass> labels2{labels[0], labels[1], labels[2],
                                          labels[0], labels[1], labels[2]};
  CHECK(loss(doubled, labels2).value == 2.0 * l.value);

  CHECK_THROWS_AS(loss(three, priv), ConfigError);
}

TEST_CASE("analytic gradient agrees with finite differences of the oracle") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto inst = small_gradcheck_instance(seed);
    const auto analytic = batch_gradient_serial(inst.batch, inst.prior, inst.params).grad;
    const auto numeric =
        oracle::fd_gradient(inst.batch, oracle::to_mat(inst.prior.matrix), inst.params, 1e-5);
    std::string worst;
    const double err = max_rel(analytic, numeric, &worst);
    CHECK_MESSAGE(err <= 1e-5, "worst tensor " << worst << " rel " << err);
  }
}

TEST_CASE("gradient is exact under the co-occurrence prior and feature masks") {
  const auto corpus = synth_corpus(6, 4, SynthRule::ScenePair, 5);
  const auto A = build_cooccurrence(corpus);
  const auto params = ModelParams::init({4, 2, 8, 3}, 11);
  for (FeatureMask mask : {FeatureMask{true, true}, FeatureMask{false, true}}) {
    std::vector<ImageRecord> batch = corpus.records();
    auto masked = batch;
    if (!mask.scene)
      for (auto& r : masked) r.scene_logits = {0.0, 0.0};
    const auto analytic = batch_gradient_serial(batch, A, params, mask).grad;
    const auto numeric = oracle::fd_gradient(masked, oracle::to_mat(A.matrix), params, 1e-5);
    CHECK(max_rel(analytic, numeric) <= 1e-5);
  }
}

TEST_CASE("zero parameters: output-bias gradient is probs minus one-hot") {
  const auto corpus = synth_corpus(8, 3, SynthRule::ScenePair, 2);
  const auto A = build_fixed(PriorKind::Ones, 3);
  const auto params = ModelParams::zeros({3, 2, 8, 4});
  const auto bg = batch_gradient_serial(corpus.records(), A, params);
  double want0 = 0.0, want1 = 0.0;
  for (const auto& r : corpus.records()) {
    want0 += 0.5 - (r.label == PrivacyClass::Public);
    want1 += 0.5 - (r.label == PrivacyClass::Private);
  }
  CHECK(bg.grad.g2_b(0, 0) == want0);
  CHECK(bg.grad.g2_b(1, 0) == want1);
  CHECK(bg.loss.value == doctest::Approx(8 * std::log(2.0)));
}

TEST_CASE("a duplicated record doubles its contribution") {
  const auto inst = small_gradcheck_instance(4);
  const auto& r = inst.batch[0];
  const auto single = batch_gradient_serial(std::vector{r}, inst.prior, inst.params);
  const auto twice = batch_gradient_serial(std::vector{r, r}, inst.prior, inst.params);
  CHECK(twice.loss.value == 2.0 * single.loss.value);
  for (int t = 0; t < kParamTensorCount; ++t) CHECK(twice.grad.tensor(t) == 2.0 * single.grad.tensor(t));
}

TEST_CASE("library gradcheck passes, and fails when the gradient is corrupted") {
  const auto inst = small_gradcheck_instance(1);
  const auto ok = gradcheck(inst.batch, inst.prior, inst.params);
  CHECK(ok.passed);
  CHECK(ok.max_rel_error <= 1e-5);
  CHECK(ok.tensors.size() == kParamTensorCount);
  CHECK_FALSE(ok.worst_tensor.empty());

  GradCheckOptions bad;
  bad.corrupt = true;
  const auto fail = gradcheck(inst.batch, inst.prior, inst.params, {}, bad);
  CHECK_FALSE(fail.passed);
  CHECK(fail.worst_tensor == "head.g2.bias");
  CHECK(fail.summary().find("FAIL") != std::string::npos);
  CHECK(fail.summary().find("head.g2.bias") != std::string::npos);
}

TEST_CASE("non-finite gradients name the tensor") {
  auto g = Gradient::zeros({3, 2, 4, 4});
  CHECK_NOTHROW(check_finite(g));
  g.U_r(1, 2) = std::numeric_limits<double>::infinity();
  try {
    check_finite(g);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("gru.U_r") != std::string::npos);
  }
}
