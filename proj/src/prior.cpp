// SPDX-License-Identifier: Apache-2.0
#include "gpa/prior.hpp"

#include <cmath>

#include "gpa/errors.hpp"
#include "gpa/rng.hpp"

namespace gpa {

using nlohmann::json;

PriorKind parse_prior_kind(const std::string& name) {
  if (name == "cooccurrence" || name == "co-occurrence") return PriorKind::Cooccurrence;
  if (name == "class_freq" || name == "class") return PriorKind::ClassFreq;
  if (name == "uniform") return PriorKind::Uniform;
  if (name == "ones") return PriorKind::Ones;
  if (name == "random") return PriorKind::Random;
  throw ConfigError("unknown prior kind '" + name + "'");
}

std::string to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::Cooccurrence: return "cooccurrence";
    case PriorKind::ClassFreq: return "class_freq";
    case PriorKind::Uniform: return "uniform";
    case PriorKind::Ones: return "ones";
    case PriorKind::Random: return "random";
  }
  return "?";
}

AdjacencyPrior build_cooccurrence(const Corpus& corpus) {
  const int n = node_count(corpus.K());
  AdjacencyPrior prior{PriorKind::Cooccurrence, corpus.K(), std::nullopt,
                       Eigen::MatrixXd::Zero(n, n)};
  std::vector<int> present;
  for (const auto& r : corpus.records()) {
    present.clear();
    for (const auto& [k, count] : r.objects) {
      if (count > 0) present.push_back(kFirstObjectNode + k);
    }
    for (std::size_t a = 0; a < present.size(); ++a) {
      for (std::size_t b = a + 1; b < present.size(); ++b) {
        prior.matrix(present[a], present[b]) = 1.0;
        prior.matrix(present[b], present[a]) = 1.0;
      }
    }
  }
  return prior;
}

AdjacencyPrior build_class_freq(const Corpus& corpus) {
  const int K = corpus.K();
  const int n = node_count(K);
  const auto per_class = corpus.class_counts();
  for (int c = 0; c < 2; ++c) {
    if (per_class[c] == 0) {
      throw ConfigError("class_freq prior: class " + std::to_string(c) + " has no images");
    }
  }
  Eigen::MatrixXd containing = Eigen::MatrixXd::Zero(2, K);
  for (const auto& r : corpus.records()) {
    for (const auto& [k, count] : r.objects) {
      if (count > 0) containing(to_int(r.label), k) += 1.0;
    }
  }
  AdjacencyPrior prior{PriorKind::ClassFreq, K, std::nullopt, Eigen::MatrixXd::Zero(n, n)};
  for (int c = 0; c < 2; ++c) {
    for (int k = 0; k < K; ++k) {
      const double f = containing(c, k) / static_cast<double>(per_class[c]);
      prior.matrix(c, kFirstObjectNode + k) = f;
      prior.matrix(kFirstObjectNode + k, c) = f;
    }
  }
  return prior;
}

AdjacencyPrior build_fixed(PriorKind kind, int K, std::uint64_t seed) {
  if (K < 1) throw ConfigError("prior needs K >= 1");
  const int n = node_count(K);
  AdjacencyPrior prior{kind, K, std::nullopt, Eigen::MatrixXd::Zero(n, n)};
  switch (kind) {
    case PriorKind::Uniform: {
      const double u = 1.0 / K;
      prior.matrix.block(0, kFirstObjectNode, kClassNodes, K).setConstant(u);
      prior.matrix.block(kFirstObjectNode, 0, K, kClassNodes).setConstant(u);
      break;
    }
    case PriorKind::Ones:
      prior.matrix.setOnes();
      break;
    case PriorKind::Random: {
      prior.seed = seed;
      Rng rng(seed);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) prior.matrix(i, j) = rng.uniform();
      }
      break;
    }
    default:
      throw ConfigError("build_fixed: '" + to_string(kind) + "' is data-dependent");
  }
  return prior;
}

AdjacencyPrior build_prior(PriorKind kind, const Corpus& corpus, std::uint64_t seed) {
  switch (kind) {
    case PriorKind::Cooccurrence: return build_cooccurrence(corpus);
    case PriorKind::ClassFreq: return build_class_freq(corpus);
    default: return build_fixed(kind, corpus.K(), seed);
  }
}

json prior_to_json(const AdjacencyPrior& prior) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < prior.matrix.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < prior.matrix.cols(); ++j) row.push_back(prior.matrix(i, j));
    rows.push_back(std::move(row));
  }
  return {{"kind", to_string(prior.kind)},
          {"K", prior.K},
          {"seed", prior.seed ? json(*prior.seed) : json(nullptr)},
          {"matrix", rows}};
}

AdjacencyPrior prior_from_json(const json& j) {
  try {
    AdjacencyPrior prior;
    prior.kind = parse_prior_kind(j.at("kind").get<std::string>());
    prior.K = j.at("K").get<int>();
    if (!j.at("seed").is_null()) prior.seed = j.at("seed").get<std::uint64_t>();
    const int n = node_count(prior.K);
    const auto& rows = j.at("matrix");
    if (prior.K < 1 || !rows.is_array() || static_cast<int>(rows.size()) != n) {
      throw DataError("prior: matrix must have K+2 rows");
    }
    prior.matrix.resize(n, n);
    for (int i = 0; i < n; ++i) {
      if (!rows[i].is_array() || static_cast<int>(rows[i].size()) != n) {
        throw DataError("prior: row " + std::to_string(i) + " must have K+2 entries");
      }
      for (int c = 0; c < n; ++c) {
        const double v = rows[i][c].get<double>();
        if (!std::isfinite(v)) throw DataError("prior: non-finite entry");
        prior.matrix(i, c) = v;
      }
    }
    return prior;
  } catch (const json::exception& e) {
    throw DataError(std::string("prior: ") + e.what());
  }
}

}  // namespace gpa
