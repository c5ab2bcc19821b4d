#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

#include "xmodal/embedding_store.hpp"

namespace xmodal {

/// A generated two-modality task with a known ground-truth alignment.
struct SyntheticTask {
  EmbeddingSet anchors;     // modality A, ids "a<i>"
  EmbeddingSet candidates;  // modality B, ids "b<i>"
  PairDataset pairs;
  /// Orthogonal map with candidates_i = rotation * anchors_i + noise_i.
  Eigen::MatrixXd rotation;
};

/// Deterministic stand-in for LLM-generated pair corpora.
///
/// Modality-A rows are standard-normal draws scaled to unit length. A seeded
/// random orthogonal matrix plus isotropic Gaussian noise of scale
/// `noise_sigma` produces the modality-B rows. Each index i yields a positive
/// example (a<i>, b<i>) followed by a negative (a<i>, b<pi(i)>) where pi is a
/// seeded derangement. Throws ValidationError if n_pairs < 2 or dim == 0.
SyntheticTask generate_synthetic(std::size_t n_pairs, std::size_t dim, double noise_sigma, std::uint64_t seed);

/// Seeded Haar-distributed orthogonal matrix (QR of a Gaussian matrix with
/// the sign of R's diagonal folded into Q).
Eigen::MatrixXd random_orthogonal(std::size_t dim, std::uint64_t seed);

}  // namespace xmodal
