// SPDX-License-Identifier: Apache-2.0
#include "gpa/backprop.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gpa/errors.hpp"

namespace gpa {

double record_loss(const Eigen::Vector2d& probs, PrivacyClass label) {
  const double p = std::clamp(probs[1], kProbClamp, 1.0 - kProbClamp);
  return label == PrivacyClass::Private ? -std::log(p) : -std::log(1.0 - p);
}

LossValue loss(std::span<const Eigen::Vector2d> probs, std::span<const PrivacyClass> labels) {
  if (probs.size() != labels.size()) {
    throw ConfigError("loss: " + std::to_string(probs.size()) + " predictions for " +
                      std::to_string(labels.size()) + " labels");
  }
  LossValue out{0.0, probs.size()};
  for (std::size_t n = 0; n < probs.size(); ++n) out.value += record_loss(probs[n], labels[n]);
  return out;
}

Gradient backward_from_trace(const ForwardTrace& t, PrivacyClass label,
                             const AdjacencyPrior& A, const ModelParams& params) {
  const auto& ro = t.readout;
  const Eigen::MatrixXd& H = t.final_state();
  const Eigen::Index n = H.cols();
  const int d_a = params.shape.d_a;
  Gradient g = Gradient::zeros(params.shape);

  // d loss / d logits = probs - onehot(label), unless the clamp is active.
  Eigen::Vector2d g_logits = Eigen::Vector2d::Zero();
  const double p = ro.probs[1];
  if (p > kProbClamp && p < 1.0 - kProbClamp) {
    g_logits = ro.probs;
    g_logits[to_int(label)] -= 1.0;
  }

  // Head.
  g.g2_w.noalias() = g_logits * ro.hidden.transpose();
  g.g2_b.col(0) = g_logits;
  Eigen::VectorXd g_hidden = params.g2_w.transpose() * g_logits;
  for (Eigen::Index i = 0; i < g_hidden.size(); ++i) {
    if (ro.hidden_pre[i] <= 0.0) g_hidden[i] = 0.0;
  }
  g.g1_w.noalias() = g_hidden * ro.weighted.transpose();
  g.g1_b.col(0) = g_hidden;
  const Eigen::VectorXd g_weighted = params.g1_w.transpose() * g_hidden;

  // Node weighting: w(c,j) = beta_j H(c,j).
  Eigen::MatrixXd g_H(kStateDim, n);
  Eigen::VectorXd g_beta = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < kStateDim; ++c) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double gw = g_weighted[c * n + j];
      g_H(c, j) = ro.node_weight[j] * gw;
      g_beta[j] += gw * H(c, j);
    }
  }

  // Attention: beta_j = mean_i e(i,j), e = sigmoid(src_i + dst_j).
  Eigen::VectorXd g_src = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g_dst = Eigen::VectorXd::Zero(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = ro.attention(i, j);
      const double gs = g_beta[j] * inv_n * e * (1.0 - e);
      g_src[i] += gs;
      g_dst[j] += gs;
    }
  }
  g.a_vec.topRows(d_a).col(0) = ro.projected * g_src;
  g.a_vec.bottomRows(d_a).col(0) = ro.projected * g_dst;
  const Eigen::MatrixXd g_proj = params.a_vec.topRows(d_a).col(0) * g_src.transpose() +
                                 params.a_vec.bottomRows(d_a).col(0) * g_dst.transpose();
  g.W_a.noalias() = g_proj * H.transpose();
  g_H.noalias() += params.W_a.transpose() * g_proj;

  // GRU rounds, last to first.
  const Eigen::MatrixXd adj_t = (A.matrix + A.matrix.transpose()).transpose();
  for (std::size_t l = t.steps.size(); l-- > 0;) {
    const GruStep& s = t.steps[l];
    const Eigen::MatrixXd& H_prev = l == 0 ? t.H0 : t.steps[l - 1].state;
    const auto z = s.update.array();
    const auto r = s.reset.array();
    const auto cand = s.candidate.array();

    const Eigen::MatrixXd g_z_pre =
        (g_H.array() * (H_prev.array() - cand) * z * (1.0 - z)).matrix();
    const Eigen::MatrixXd g_n_pre =
        (g_H.array() * (1.0 - z) * (1.0 - cand.square())).matrix();
    Eigen::MatrixXd g_prev = (g_H.array() * z).matrix();

    g.W_n.noalias() += g_n_pre * s.messages.transpose();
    g.U_n.noalias() += g_n_pre * s.reset_state.transpose();
    g.b_n.col(0) += g_n_pre.rowwise().sum();
    Eigen::MatrixXd g_msg = params.W_n.transpose() * g_n_pre;
    const Eigen::MatrixXd g_rh = params.U_n.transpose() * g_n_pre;
    g_prev.array() += g_rh.array() * r;
    const Eigen::MatrixXd g_r_pre =
        (g_rh.array() * H_prev.array() * r * (1.0 - r)).matrix();

    g.W_r.noalias() += g_r_pre * s.messages.transpose();
    g.U_r.noalias() += g_r_pre * H_prev.transpose();
    g.b_r.col(0) += g_r_pre.rowwise().sum();
    g_msg.noalias() += params.W_r.transpose() * g_r_pre;
    g_prev.noalias() += params.U_r.transpose() * g_r_pre;

    g.W_z.noalias() += g_z_pre * s.messages.transpose();
    g.U_z.noalias() += g_z_pre * H_prev.transpose();
    g.b_z.col(0) += g_z_pre.rowwise().sum();
    g_msg.noalias() += params.W_z.transpose() * g_z_pre;
    g_prev.noalias() += params.U_z.transpose() * g_z_pre;

    g_prev.noalias() += g_msg * adj_t;
    g_H = std::move(g_prev);
  }
  return g;
}

std::pair<double, Gradient> record_backward(const ImageRecord& record, PrivacyClass label,
                                            const AdjacencyPrior& A, const ModelParams& params,
                                            FeatureMask mask) {
  const ForwardTrace t = forward(record, A, params, mask);
  return {record_loss(t.probs(), label), backward_from_trace(t, label, A, params)};
}

void check_finite(const Gradient& grad) {
  grad.for_each([](std::string_view name, const Eigen::MatrixXd& m) {
    if (!m.allFinite()) throw NumericError("non-finite gradient in " + std::string(name));
  });
}

}  // namespace gpa
