// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "gpa/corpus.hpp"

namespace gpa {

/// Node layout shared by the prior, the information matrix and the graph
/// state: node 0 is the public class/scene node, node 1 the private one, and
/// object category k sits at node kFirstObjectNode + k.
inline constexpr int kClassNodes = 2;
inline constexpr int kFirstObjectNode = kClassNodes;

inline int node_count(int K) { return K + kClassNodes; }

enum class PriorKind { Cooccurrence, ClassFreq, Uniform, Ones, Random };

PriorKind parse_prior_kind(const std::string& name);
/// "cooccurrence", "class_freq", "uniform", "ones", "random".
std::string to_string(PriorKind kind);

/// (K+2)x(K+2) adjacency used to initialise and propagate the graph.
struct AdjacencyPrior {
  PriorKind kind = PriorKind::Cooccurrence;
  int K = 0;
  std::optional<std::uint64_t> seed;
  Eigen::MatrixXd matrix;
};

/// Binary object co-occurrence: a(i,j) = 1 iff distinct categories i and j
/// appear together in at least one image. Class-node rows/columns are zero.
AdjacencyPrior build_cooccurrence(const Corpus& corpus);

/// Fraction of images of each class containing each category, placed in the
/// class-node/object blocks (mirrored). Throws ConfigError if a class is empty.
AdjacencyPrior build_class_freq(const Corpus& corpus);

/// Data-independent priors: uniform (1/K between class and object nodes),
/// ones, or i.i.d. uniform [0,1) values drawn from `seed`.
AdjacencyPrior build_fixed(PriorKind kind, int K, std::uint64_t seed = 0);

/// Dispatches on kind; data-dependent kinds use `corpus`.
AdjacencyPrior build_prior(PriorKind kind, const Corpus& corpus, std::uint64_t seed);

nlohmann::json prior_to_json(const AdjacencyPrior& prior);
AdjacencyPrior prior_from_json(const nlohmann::json& j);

}  // namespace gpa
