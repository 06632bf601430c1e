// SPDX-License-Identifier: Apache-2.0
#include "gpa/params.hpp"

#include <cmath>
#include <fstream>

#include "gpa/errors.hpp"
#include "gpa/rng.hpp"

namespace gpa {

using nlohmann::json;

namespace {

std::array<std::pair<int, int>, kParamTensorCount> shapes_of(const ModelShape& s) {
  const int d = kStateDim;
  return {{{d, d}, {d, d}, {d, 1},
           {d, d}, {d, d}, {d, 1},
           {d, d}, {d, d}, {d, 1},
           {s.d_a, d}, {2 * s.d_a, 1},
           {s.h1, d * s.nodes()}, {s.h1, 1},
           {2, s.h1}, {2, 1}}};
}

void check_shape(const ModelShape& s) {
  if (s.K < 1 || s.L < 0 || s.h1 < 1 || s.d_a < 1) {
    throw ConfigError("invalid model shape: need K>=1, L>=0, h1>=1, d_a>=1");
  }
}

}  // namespace

int fan_in(const ModelShape& shape, int tensor_index) {
  switch (tensor_index) {
    case 9: return kStateDim;          // W_a
    case 10: return 2 * shape.d_a;     // a_vec
    case 11: case 12: return kStateDim * shape.nodes();
    case 13: case 14: return shape.h1;
    default: return kStateDim;         // GRU
  }
}

ModelParams ModelParams::zeros(const ModelShape& shape) {
  check_shape(shape);
  ModelParams p;
  p.shape = shape;
  const auto dims = shapes_of(shape);
  int i = 0;
  p.for_each([&](std::string_view, Eigen::MatrixXd& m) {
    m = Eigen::MatrixXd::Zero(dims[i].first, dims[i].second);
    ++i;
  });
  return p;
}

ModelParams ModelParams::init(const ModelShape& shape, std::uint64_t seed) {
  ModelParams p = zeros(shape);
  Rng rng(seed);
  int i = 0;
  p.for_each([&](std::string_view, Eigen::MatrixXd& m) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in(shape, i)));
    // Row-major fill so the stream order matches the serialized order.
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-bound, bound);
    }
    ++i;
  });
  return p;
}

Eigen::MatrixXd& ModelParams::tensor(int index) {
  Eigen::MatrixXd* out = nullptr;
  int i = 0;
  for_each([&](std::string_view, Eigen::MatrixXd& m) {
    if (i++ == index) out = &m;
  });
  if (!out) throw std::out_of_range("parameter tensor index");
  return *out;
}

const Eigen::MatrixXd& ModelParams::tensor(int index) const {
  return const_cast<ModelParams*>(this)->tensor(index);
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](std::string_view, const Eigen::MatrixXd& m) { n += m.size(); });
  return n;
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each([&](std::string_view, const Eigen::MatrixXd& m) { ok = ok && m.allFinite(); });
  return ok;
}

ModelParams& ModelParams::operator+=(const ModelParams& other) {
  for (int i = 0; i < kParamTensorCount; ++i) tensor(i) += other.tensor(i);
  return *this;
}

ModelParams& ModelParams::operator*=(double s) {
  for_each([&](std::string_view, Eigen::MatrixXd& m) { m *= s; });
  return *this;
}

bool ModelParams::operator==(const ModelParams& other) const {
  if (!(shape == other.shape)) return false;
  for (int i = 0; i < kParamTensorCount; ++i) {
    if (tensor(i) != other.tensor(i)) return false;
  }
  return true;
}

json checkpoint_to_json(const ModelParams& params, std::uint64_t seed) {
  json tensors = json::object();
  params.for_each([&](std::string_view name, const Eigen::MatrixXd& m) {
    json flat = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
    }
    tensors[std::string(name)] = std::move(flat);
  });
  const auto& s = params.shape;
  return {{"version", kCheckpointVersion}, {"K", s.K},     {"L", s.L},
          {"h1", s.h1},                    {"d_a", s.d_a}, {"seed", seed},
          {"params", tensors}};
}

ModelParams checkpoint_from_json(const json& j) {
  try {
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw DataError("checkpoint: unsupported version");
    }
    ModelShape shape{j.at("K").get<int>(), j.at("L").get<int>(), j.at("h1").get<int>(),
                     j.at("d_a").get<int>()};
    ModelParams p;
    try {
      p = ModelParams::zeros(shape);
    } catch (const ConfigError& e) {
      throw DataError(std::string("checkpoint: ") + e.what());
    }
    const auto& tensors = j.at("params");
    if (tensors.size() != kParamTensorCount) throw DataError("checkpoint: wrong tensor count");
    p.for_each([&](std::string_view name, Eigen::MatrixXd& m) {
      const auto& flat = tensors.at(std::string(name));
      if (static_cast<Eigen::Index>(flat.size()) != m.size()) {
        throw DataError("checkpoint: tensor '" + std::string(name) + "' has wrong size");
      }
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat[k++].get<double>();
      }
    });
    if (!p.all_finite()) throw DataError("checkpoint: non-finite parameter");
    return p;
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint '" + path.string() + "'");
  out << checkpoint_to_json(params, seed).dump(1) << '\n';
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace gpa
