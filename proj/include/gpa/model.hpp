// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gpa/corpus.hpp"
#include "gpa/params.hpp"
#include "gpa/prior.hpp"

namespace gpa {

/// Which input channels reach the information matrix.
struct FeatureMask {
  bool scene = true;        // f_s
  bool cardinality = true;  // f_c

  bool any() const { return scene || cardinality; }
  bool operator==(const FeatureMask&) const = default;
};

/// 2 x (K+2) per-image matrix. Row 0 is the scene channel (s1, s2 in the
/// class-node columns), row 1 the object channel (counts in object columns).
using InfoMatrix = Eigen::MatrixXd;

InfoMatrix assemble_info(const ImageRecord& record, int K, FeatureMask mask = {});

/// H0 = [C A ; C A^T], 4 x (K+2).
Eigen::MatrixXd init_graph(const InfoMatrix& C, const AdjacencyPrior& A);

/// Intermediates of one GRU propagation round, kept for the backward pass.
struct GruStep {
  Eigen::MatrixXd messages;   // H_prev (A + A^T)
  Eigen::MatrixXd update;     // z
  Eigen::MatrixXd reset;      // r
  Eigen::MatrixXd candidate;  // n~
  Eigen::MatrixXd reset_state;  // r .* H_prev
  Eigen::MatrixXd state;      // H after this round
};

/// Runs params.shape.L message-passing rounds. When `steps` is non-null it
/// receives one entry per round. Throws NumericError naming the round on a
/// non-finite state.
Eigen::MatrixXd propagate(const Eigen::MatrixXd& H0, const AdjacencyPrior& A,
                          const ModelParams& params, std::vector<GruStep>* steps = nullptr);

struct Readout {
  Eigen::MatrixXd projected;   // W_a H, d_a x (K+2)
  Eigen::MatrixXd attention;   // e(i,j) = sigmoid(score), (K+2) x (K+2)
  Eigen::VectorXd node_weight; // mean incoming coefficient per node
  Eigen::VectorXd weighted;    // flattened row-major 4 x (K+2)
  Eigen::VectorXd hidden_pre;  // g1(w)
  Eigen::VectorXd hidden;      // relu(g1(w))
  Eigen::Vector2d logits;
  Eigen::Vector2d probs;
};

/// Sigmoid pairwise attention, node weighting and the two-layer softmax head.
std::pair<Eigen::Vector2d, Readout> attend_and_classify(const Eigen::MatrixXd& H_L,
                                                        const ModelParams& params);

struct ForwardTrace {
  InfoMatrix info;
  Eigen::MatrixXd H0;
  std::vector<GruStep> steps;
  Readout readout;

  const Eigen::MatrixXd& final_state() const { return steps.empty() ? H0 : steps.back().state; }
  const Eigen::Vector2d& probs() const { return readout.probs; }
  /// Predicted probability of the private class.
  double p_private() const { return readout.probs[1]; }
};

ForwardTrace forward(const ImageRecord& record, const AdjacencyPrior& A,
                     const ModelParams& params, FeatureMask mask = {});

PrivacyClass predict(const ForwardTrace& trace);

/// Throws ConfigError if the prior and the parameters disagree on K.
void check_compatible(const AdjacencyPrior& A, const ModelParams& params);

}  // namespace gpa
