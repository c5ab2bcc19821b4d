#include "xmodal/retrieval.hpp"

#include <algorithm>
#include <numeric>
#include <thread>

#include "xmodal/errors.hpp"

namespace xmodal {

std::string metric_name(Metric metric) { return metric == Metric::cosine ? "cosine" : "euclidean"; }

Metric parse_metric(const std::string& name) {
  if (name == "euclidean") return Metric::euclidean;
  if (name == "cosine") return Metric::cosine;
  throw ValidationError("unknown metric '" + name + "' (expected euclidean or cosine)");
}

Eigen::VectorXd to_vector(std::span<const float> row) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(row.size()));
  for (std::size_t k = 0; k < row.size(); ++k) v[static_cast<Eigen::Index>(k)] = row[k];
  return v;
}

RetrievalIndex::RetrievalIndex(const EmbeddingSet& entries, Metric metric) : metric_(metric), ids_(entries.ids()) {
  if (entries.empty()) throw ValidationError("cannot build a retrieval index over an empty set");
  const auto rows = static_cast<Eigen::Index>(entries.size());
  const auto cols = static_cast<Eigen::Index>(entries.dim());
  vectors_.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    vectors_.row(r) = to_vector(entries.row(static_cast<std::size_t>(r))).transpose();
  }
  norms_ = vectors_.rowwise().norm();
  if (metric_ == Metric::cosine) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (norms_[r] == 0.0) {
        throw ValidationError("entry '" + ids_[static_cast<std::size_t>(r)] + "' has zero norm; cosine undefined");
      }
    }
  }
}

Eigen::VectorXd RetrievalIndex::scores(const Eigen::VectorXd& q) const {
  if (q.size() != vectors_.cols()) {
    throw ValidationError("query has length " + std::to_string(q.size()) + ", index dim is " +
                          std::to_string(vectors_.cols()));
  }
  if (metric_ == Metric::euclidean) {
    return (vectors_.rowwise() - q.transpose()).rowwise().norm();
  }
  const double q_norm = q.norm();
  if (q_norm == 0.0) throw ValidationError("zero query vector; cosine undefined");
  return (vectors_ * q).cwiseQuotient(norms_) / q_norm;
}

RetrievalResult RetrievalIndex::query(const Eigen::VectorXd& q, std::size_t k) const {
  if (k == 0) throw ValidationError("k must be positive");
  if (k > size()) {
    throw ValidationError("k=" + std::to_string(k) + " exceeds pool size " + std::to_string(size()));
  }
  const Eigen::VectorXd s = scores(q);

  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const bool ascending = metric_ == Metric::euclidean;
  const auto before = [&](std::size_t a, std::size_t b) {
    const double sa = s[static_cast<Eigen::Index>(a)];
    const double sb = s[static_cast<Eigen::Index>(b)];
    if (sa != sb) return ascending ? sa < sb : sa > sb;
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), before);

  RetrievalResult result;
  result.hits.reserve(k);
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t pos = order[r];
    result.hits.push_back({ids_[pos], s[static_cast<Eigen::Index>(pos)], pos});
  }
  return result;
}

std::vector<RetrievalResult> RetrievalIndex::query_batch(const Eigen::MatrixXd& queries, std::size_t k,
                                                         std::size_t threads) const {
  const auto n = static_cast<std::size_t>(queries.rows());
  std::vector<RetrievalResult> results(n);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(n, 1));

  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) results[i] = query(queries.row(static_cast<Eigen::Index>(i)).transpose(), k);
    return results;
  }

  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> workers;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      try {
        for (std::size_t i = t * chunk; i < std::min(n, (t + 1) * chunk); ++i) {
          results[i] = query(queries.row(static_cast<Eigen::Index>(i)).transpose(), k);
        }
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

RetrievalIndex build_index(const EmbeddingSet& set, Metric metric) { return RetrievalIndex(set, metric); }

RetrievalResult project_and_query(const ProjectionParams& params, const RetrievalIndex& index,
                                  const Eigen::VectorXd& b_vector, std::size_t k) {
  return index.query(project(params, b_vector), k);
}

}  // namespace xmodal
