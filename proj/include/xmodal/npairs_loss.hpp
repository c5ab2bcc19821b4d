#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace xmodal {

inline constexpr double kDefaultMargin = 1.0;

/// One batch for the N-pairs hinge loss. Row i of `anchors` is A_i (modality
/// A) and row i of `candidates` is the projected modality-B embedding P_i.
struct LossBatch {
  Eigen::MatrixXd anchors;
  Eigen::MatrixXd candidates;
  std::vector<int> labels;
  double margin = kDefaultMargin;
};

struct LossResult {
  double value = 0.0;
  Eigen::MatrixXd grad_anchors;
  Eigen::MatrixXd grad_candidates;
  std::size_t active_terms = 0;
  /// Number of (i, j) terms averaged: positives x (N - 1).
  std::size_t count = 0;
};

/// Distances below this are treated as coincident points (zero gradient).
inline constexpr double kDistanceEpsilon = 1e-12;

/// Mean over every positive anchor i and every j != i of
///   max(0, |A_i - P_i| - |A_i - P_j| + margin).
///
/// Rows with label 0 contribute no anchor terms but their candidates still act
/// as negatives for the positive anchors. When no row is positive the value is
/// 0 and both gradients are zero. Gradients are exact subgradients: a hinge at
/// exactly zero and a zero distance both contribute nothing.
LossResult npairs_loss(const LossBatch& batch);

/// Euclidean distance. Throws ValidationError on a length mismatch.
double pairwise_distance(std::span<const double> x, std::span<const double> y);

}  // namespace xmodal
