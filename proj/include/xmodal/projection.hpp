#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "xmodal/embedding_store.hpp"

namespace xmodal {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr std::size_t kDefaultEmbeddingDim = 768;
inline constexpr std::size_t kDefaultHiddenDim = 2048;

/// Weights of the three-layer ReLU adapter mapping modality-B embeddings into
/// modality-A space:
///
///   out = w3 * relu(w2 * relu(w1 * x + b1) + b2) + b3
///
/// with w1: h x d, w2: h x h, w3: d x h. Matrices are row-major, which is also
/// the PRJV1 on-disk order.
struct ProjectionParams {
  std::size_t d = 0;
  std::size_t h = 0;
  RowMatrix w1;
  Eigen::VectorXd b1;
  RowMatrix w2;
  Eigen::VectorXd b2;
  RowMatrix w3;
  Eigen::VectorXd b3;

  static ProjectionParams zeros(std::size_t d, std::size_t h);

  std::size_t parameter_count() const noexcept { return h * d + h + h * h + h + d * h + d; }

  /// The six tensors in storage order w1, b1, w2, b2, w3, b3.
  std::array<std::span<double>, 6> blocks();
  std::array<std::span<const double>, 6> blocks() const;

  /// Throws ValidationError on inconsistent shapes or non-finite entries.
  void validate() const;

  friend bool operator==(const ProjectionParams& lhs, const ProjectionParams& rhs);
};

/// Gradients share the parameter layout.
using ParamGrads = ProjectionParams;

/// Intermediate values of one forward pass, kept for backward().
struct ForwardTrace {
  Eigen::VectorXd input;
  Eigen::VectorXd pre1;
  Eigen::VectorXd act1;
  Eigen::VectorXd pre2;
  Eigen::VectorXd act2;
  Eigen::VectorXd output;
};

struct BackwardResult {
  ParamGrads grads;
  Eigen::VectorXd input_grad;
};

/// Uniform(-sqrt(6/fan_in), sqrt(6/fan_in)) weights, zero biases.
ProjectionParams init_params(std::size_t d, std::size_t h, std::uint64_t seed);

ForwardTrace forward(const ProjectionParams& params, const Eigen::VectorXd& input);
ForwardTrace forward(const ProjectionParams& params, std::span<const float> input);

/// Output of forward() alone, without keeping the trace.
Eigen::VectorXd project(const ProjectionParams& params, const Eigen::VectorXd& input);

/// Chain rule through the network. ReLU'(0) is taken as 0.
BackwardResult backward(const ProjectionParams& params, const ForwardTrace& trace,
                        const Eigen::VectorXd& grad_output);

/// Accumulating form used by the training loop: adds this example's
/// parameter gradients into `grads` and skips the input gradient.
void accumulate_backward(const ProjectionParams& params, const ForwardTrace& trace,
                         const Eigen::VectorXd& grad_output, ParamGrads& grads);

/// Projects every row of `set`; row i of the result is project(row i).
RowMatrix project_rows(const ProjectionParams& params, const EmbeddingSet& set);

inline constexpr std::size_t kProjectionHeaderBytes = 14;

std::vector<std::uint8_t> encode_params(const ProjectionParams& params);
ProjectionParams decode_params(std::span<const std::uint8_t> bytes);
void save_params(const ProjectionParams& params, const std::filesystem::path& path);
ProjectionParams load_params(const std::filesystem::path& path);

}  // namespace xmodal
