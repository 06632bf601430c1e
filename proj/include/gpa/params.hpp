// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <utility>

#include <Eigen/Dense>
#include <json.hpp>

namespace gpa {

/// Hyper-parameters fixing every tensor shape.
struct ModelShape {
  int K = 81;
  int L = 3;     // propagation iterations
  int h1 = 32;   // classifier hidden width
  int d_a = 4;   // attention projection width

  int nodes() const { return K + 2; }
  bool operator==(const ModelShape&) const = default;
};

inline constexpr int kStateDim = 4;
inline constexpr int kParamTensorCount = 15;

/// Tensor names in enumeration order. This order is used for flattening,
/// gradient checking and checkpoint files.
inline constexpr std::array<std::string_view, kParamTensorCount> kParamNames{
    "gru.W_z", "gru.U_z", "gru.b_z",        //
    "gru.W_r", "gru.U_r", "gru.b_r",        //
    "gru.W_n", "gru.U_n", "gru.b_n",        //
    "attn.W_a", "attn.a_vec",               //
    "head.g1.weight", "head.g1.bias",       //
    "head.g2.weight", "head.g2.bias"};

/// All learnable weights. Biases and vectors are stored as one-column
/// matrices so every tensor has the same type.
///
/// Shapes: GRU input weights W_* and hidden weights U_* are 4x4, biases 4x1;
/// W_a is d_a x 4 (maps a node state to the attention space); a_vec is
/// 2*d_a x 1, the first half scoring the source node and the second half the
/// target node; g1 is h1 x 4(K+2); g2 is 2 x h1.
struct ModelParams {
  ModelShape shape;

  Eigen::MatrixXd W_z, U_z, b_z;
  Eigen::MatrixXd W_r, U_r, b_r;
  Eigen::MatrixXd W_n, U_n, b_n;
  Eigen::MatrixXd W_a, a_vec;
  Eigen::MatrixXd g1_w, g1_b, g2_w, g2_b;

  /// Zero-filled tensors of the right shapes.
  static ModelParams zeros(const ModelShape& shape);
  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per tensor.
  static ModelParams init(const ModelShape& shape, std::uint64_t seed);

  template <class F>
  void for_each(F&& f) {
    Eigen::MatrixXd* t[kParamTensorCount] = {&W_z, &U_z, &b_z, &W_r, &U_r,
                                             &b_r, &W_n, &U_n, &b_n, &W_a,
                                             &a_vec, &g1_w, &g1_b, &g2_w, &g2_b};
    for (int i = 0; i < kParamTensorCount; ++i) f(kParamNames[i], *t[i]);
  }
  template <class F>
  void for_each(F&& f) const {
    const_cast<ModelParams*>(this)->for_each(
        [&](std::string_view name, Eigen::MatrixXd& m) { f(name, std::as_const(m)); });
  }

  Eigen::MatrixXd& tensor(int index);
  const Eigen::MatrixXd& tensor(int index) const;

  std::size_t parameter_count() const;
  bool all_finite() const;

  /// Element-wise accumulate; shapes must match.
  ModelParams& operator+=(const ModelParams& other);
  ModelParams& operator*=(double s);
  bool operator==(const ModelParams& other) const;
};

/// Gradients share the parameter layout.
using Gradient = ModelParams;

/// Fan-in used for a tensor's initialisation range.
int fan_in(const ModelShape& shape, int tensor_index);

inline constexpr int kCheckpointVersion = 1;

nlohmann::json checkpoint_to_json(const ModelParams& params, std::uint64_t seed);
/// Throws DataError on version or shape mismatch.
ModelParams checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     std::uint64_t seed);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace gpa
