// SPDX-License-Identifier: Apache-2.0
#include "gpa/kernels.hpp"

#include <exception>
#include <mutex>


namespace gpa {

namespace {

/// Captures the first exception thrown inside an OpenMP region, since
/// exceptions cannot cross the region boundary.
class FirstError {
 public:
  template <class F>
  void run(F&& f) {
    try {
      f();
    } catch (...) {
      std::lock_guard lock(mutex_);
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mutex_;
  std::exception_ptr error_;
};

BatchGradient reduce(std::vector<std::pair<double, Gradient>>& per_record,
                     const ModelParams& params) {
  BatchGradient out{{0.0, per_record.size()}, Gradient::zeros(params.shape)};
  for (auto& [value, grad] : per_record) {
    out.loss.value += value;
    out.grad += grad;
  }
  check_finite(out.grad);
  return out;
}

}  // namespace

BatchGradient batch_gradient_serial(std::span<const ImageRecord> batch, const AdjacencyPrior& A,
                                    const ModelParams& params, FeatureMask mask) {
  BatchGradient out{{0.0, batch.size()}, Gradient::zeros(params.shape)};
  for (const auto& r : batch) {
    auto [value, grad] = record_backward(r, r.label, A, params, mask);
    out.loss.value += value;
    out.grad += grad;
  }
  check_finite(out.grad);
  return out;
}

BatchGradient batch_gradient_parallel(std::span<const ImageRecord> batch,
                                      const AdjacencyPrior& A, const ModelParams& params,
                                      FeatureMask mask) {
  std::vector<std::pair<double, Gradient>> per_record(batch.size());
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
  FirstError errors;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    errors.run([&] {
      const auto& r = batch[static_cast<std::size_t>(i)];
      per_record[static_cast<std::size_t>(i)] = record_backward(r, r.label, A, params, mask);
    });
  }
  errors.rethrow();
  return reduce(per_record, params);
}

BatchGradient batch_gradient(std::span<const ImageRecord> batch, const AdjacencyPrior& A,
                             const ModelParams& params, FeatureMask mask, Exec exec) {
  return exec == Exec::Serial ? batch_gradient_serial(batch, A, params, mask)
                              : batch_gradient_parallel(batch, A, params, mask);
}

std::vector<Eigen::Vector2d> predict_probs(std::span<const ImageRecord> records,
                                           const AdjacencyPrior& A, const ModelParams& params,
                                           FeatureMask mask, Exec exec) {
  std::vector<Eigen::Vector2d> out(records.size());
  const auto n = static_cast<std::ptrdiff_t>(records.size());
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = forward(records[i], A, params, mask).probs();
    return out;
  }
  FirstError errors;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    errors.run([&] { out[i] = forward(records[i], A, params, mask).probs(); });
  }
  errors.rethrow();
  return out;
}

std::vector<PrivacyClass> predict_labels(std::span<const ImageRecord> records,
                                         const AdjacencyPrior& A, const ModelParams& params,
                                         FeatureMask mask, Exec exec) {
  const auto probs = predict_probs(records, A, params, mask, exec);
  std::vector<PrivacyClass> out;
  out.reserve(probs.size());
  for (const auto& p : probs) {
    out.push_back(p[1] > p[0] ? PrivacyClass::Private : PrivacyClass::Public);
  }
  return out;
}

}  // namespace gpa
