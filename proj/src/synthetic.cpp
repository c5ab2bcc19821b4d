#include "xmodal/synthetic.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "xmodal/errors.hpp"

namespace xmodal {

namespace {

Eigen::MatrixXd gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  // Fill row by row so the draw order does not depend on Eigen's storage order.
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = normal(rng);
  }
  return m;
}

Eigen::MatrixXd orthogonal_from(std::size_t dim, std::mt19937_64& rng) {
  const Eigen::MatrixXd g = gaussian_matrix(dim, dim, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index c = 0; c < q.cols(); ++c) {
    if (r(c, c) < 0.0) q.col(c) *= -1.0;
  }
  return q;
}

// Sattolo's algorithm: a uniformly random single cycle, hence fixed-point free.
std::vector<std::size_t> cyclic_derangement(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(perm[i], perm[pick(rng)]);
  }
  return perm;
}

}  // namespace

Eigen::MatrixXd random_orthogonal(std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw ValidationError("orthogonal map dimension must be positive");
  std::mt19937_64 rng(seed);
  return orthogonal_from(dim, rng);
}

SyntheticTask generate_synthetic(std::size_t n_pairs, std::size_t dim, double noise_sigma, std::uint64_t seed) {
  if (n_pairs < 2) throw ValidationError("synthetic generation needs at least 2 pairs to form negatives");
  if (dim == 0) throw ValidationError("synthetic dimension must be positive");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ValidationError("noise_sigma must be a finite non-negative number");
  }

  std::mt19937_64 rng(seed);

  Eigen::MatrixXd a = gaussian_matrix(n_pairs, dim, rng);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double norm = a.row(i).norm();
    if (norm > 0.0) a.row(i) /= norm;
  }
  const Eigen::MatrixXd q = orthogonal_from(dim, rng);

  std::vector<float> a_values(n_pairs * dim);
  std::vector<float> b_values(n_pairs * dim);
  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::VectorXd stored_a(dim);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    for (std::size_t k = 0; k < dim; ++k) {
      const float v = static_cast<float>(a(i, k));
      a_values[i * dim + k] = v;
      stored_a[k] = v;
    }
    // Map the stored (rounded) anchor so the zero-noise relation holds on file contents.
    const Eigen::VectorXd mapped = q * stored_a;
    for (std::size_t k = 0; k < dim; ++k) {
      const double eps = noise_sigma > 0.0 ? noise_sigma * noise(rng) : 0.0;
      b_values[i * dim + k] = static_cast<float>(mapped[k] + eps);
    }
  }

  const auto partner = cyclic_derangement(n_pairs, rng);

  std::vector<std::string> a_ids(n_pairs);
  std::vector<std::string> b_ids(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    a_ids[i] = "a" + std::to_string(i);
    b_ids[i] = "b" + std::to_string(i);
  }

  PairDataset pairs;
  pairs.examples.reserve(2 * n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    pairs.examples.push_back({a_ids[i], b_ids[i], 1});
    pairs.examples.push_back({a_ids[i], b_ids[partner[i]], 0});
  }

  return SyntheticTask{EmbeddingSet(dim, std::move(a_ids), std::move(a_values)),
                       EmbeddingSet(dim, std::move(b_ids), std::move(b_values)), std::move(pairs), q};
}

}  // namespace xmodal
