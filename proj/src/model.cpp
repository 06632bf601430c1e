// SPDX-License-Identifier: Apache-2.0
#include "gpa/model.hpp"

#include <cmath>
#include <string>

#include "gpa/errors.hpp"

namespace gpa {

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

}  // namespace

InfoMatrix assemble_info(const ImageRecord& record, int K, FeatureMask mask) {
  InfoMatrix C = InfoMatrix::Zero(2, node_count(K));
  if (mask.scene) {
    C(0, 0) = record.scene_logits[0];
    C(0, 1) = record.scene_logits[1];
  }
  for (const auto& [k, count] : record.objects) {
    if (k < 0 || k >= K) {
      throw DataError("record '" + record.id + "': category " + std::to_string(k) +
                      " outside [0, " + std::to_string(K - 1) + "]");
    }
    if (mask.cardinality) C(1, kFirstObjectNode + k) = count;
  }
  return C;
}

Eigen::MatrixXd init_graph(const InfoMatrix& C, const AdjacencyPrior& A) {
  const Eigen::Index n = A.matrix.rows();
  if (C.rows() != 2 || C.cols() != n || A.matrix.cols() != n) {
    throw DataError("init_graph: information matrix is 2x" + std::to_string(C.cols()) +
                    " but the prior is " + std::to_string(n) + "x" +
                    std::to_string(A.matrix.cols()));
  }
  Eigen::MatrixXd H0(4, n);
  H0.topRows(2).noalias() = C * A.matrix;
  H0.bottomRows(2).noalias() = C * A.matrix.transpose();
  return H0;
}

Eigen::MatrixXd propagate(const Eigen::MatrixXd& H0, const AdjacencyPrior& A,
                          const ModelParams& params, std::vector<GruStep>* steps) {
  const Eigen::MatrixXd adj = A.matrix + A.matrix.transpose();
  Eigen::MatrixXd H = H0;
  if (steps) steps->clear();
  for (int l = 1; l <= params.shape.L; ++l) {
    GruStep s;
    s.messages.noalias() = H * adj;
    Eigen::MatrixXd pre_z = params.W_z * s.messages + params.U_z * H;
    pre_z.colwise() += params.b_z.col(0);
    s.update = sigmoid(pre_z);
    Eigen::MatrixXd pre_r = params.W_r * s.messages + params.U_r * H;
    pre_r.colwise() += params.b_r.col(0);
    s.reset = sigmoid(pre_r);
    s.reset_state = s.reset.cwiseProduct(H);
    Eigen::MatrixXd pre_n = params.W_n * s.messages + params.U_n * s.reset_state;
    pre_n.colwise() += params.b_n.col(0);
    s.candidate = pre_n.array().tanh().matrix();
    s.state = (1.0 - s.update.array()) * s.candidate.array() + s.update.array() * H.array();
    if (!s.state.allFinite()) {
      throw NumericError("non-finite graph state at propagation iteration " + std::to_string(l));
    }
    H = s.state;
    if (steps) steps->push_back(std::move(s));
  }
  return H;
}

std::pair<Eigen::Vector2d, Readout> attend_and_classify(const Eigen::MatrixXd& H_L,
                                                        const ModelParams& params) {
  const Eigen::Index n = H_L.cols();
  const int d_a = params.shape.d_a;
  Readout out;
  out.projected.noalias() = params.W_a * H_L;
  // score(i,j) = a_src . P_i + a_dst . P_j
  const Eigen::VectorXd src = out.projected.transpose() * params.a_vec.topRows(d_a).col(0);
  const Eigen::VectorXd dst = out.projected.transpose() * params.a_vec.bottomRows(d_a).col(0);
  out.attention.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      out.attention(i, j) = 1.0 / (1.0 + std::exp(-(src[i] + dst[j])));
    }
  }
  out.node_weight = out.attention.colwise().sum().transpose() / static_cast<double>(n);

  out.weighted.resize(kStateDim * n);
  for (int c = 0; c < kStateDim; ++c) {
    for (Eigen::Index j = 0; j < n; ++j) out.weighted[c * n + j] = out.node_weight[j] * H_L(c, j);
  }
  out.hidden_pre = params.g1_w * out.weighted + params.g1_b.col(0);
  out.hidden = out.hidden_pre.cwiseMax(0.0);
  out.logits = params.g2_w * out.hidden + params.g2_b.col(0);
  const double m = out.logits.maxCoeff();
  const Eigen::Vector2d ex = (out.logits.array() - m).exp().matrix();
  out.probs = ex / ex.sum();
  if (!out.probs.allFinite()) throw NumericError("non-finite classifier output");
  return {out.probs, std::move(out)};
}

void check_compatible(const AdjacencyPrior& A, const ModelParams& params) {
  if (A.matrix.rows() != params.shape.nodes() || A.matrix.cols() != params.shape.nodes()) {
    throw ConfigError("prior is " + std::to_string(A.matrix.rows()) + "x" +
                      std::to_string(A.matrix.cols()) + " but the model expects K=" +
                      std::to_string(params.shape.K));
  }
}

ForwardTrace forward(const ImageRecord& record, const AdjacencyPrior& A,
                     const ModelParams& params, FeatureMask mask) {
  check_compatible(A, params);
  ForwardTrace t;
  t.info = assemble_info(record, params.shape.K, mask);
  t.H0 = init_graph(t.info, A);
  propagate(t.H0, A, params, &t.steps);
  t.readout = attend_and_classify(t.final_state(), params).second;
  return t;
}

PrivacyClass predict(const ForwardTrace& trace) {
  return trace.readout.probs[1] > trace.readout.probs[0] ? PrivacyClass::Private
                                                         : PrivacyClass::Public;
}

}  // namespace gpa
