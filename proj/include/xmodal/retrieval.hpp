#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xmodal/embedding_store.hpp"
#include "xmodal/projection.hpp"

namespace xmodal {

enum class Metric { euclidean, cosine };

std::string metric_name(Metric metric);
Metric parse_metric(const std::string& name);

struct Hit {
  std::string id;
  double score = 0.0;
  /// Insertion position of the entry in the indexed pool.
  std::size_t position = 0;

  friend bool operator==(const Hit&, const Hit&) = default;
};

/// Ranked hits. Euclidean scores are distances (ascending); cosine scores
/// are similarities (descending). Equal scores keep insertion order.
struct RetrievalResult {
  std::vector<Hit> hits;

  friend bool operator==(const RetrievalResult&, const RetrievalResult&) = default;
};

/// Exact linear-scan nearest-neighbour index over an embedding set.
class RetrievalIndex {
 public:
  /// Throws ValidationError for an empty set, or for a zero-norm row under cosine.
  RetrievalIndex(const EmbeddingSet& entries, Metric metric = Metric::euclidean);

  Metric metric() const noexcept { return metric_; }
  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(vectors_.cols()); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  /// Top-k by the index metric. Throws ValidationError when k is 0 or exceeds
  /// the pool, when q has the wrong length, or for a zero query under cosine.
  RetrievalResult query(const Eigen::VectorXd& q, std::size_t k) const;

  /// Score of every pool entry against q, in insertion order.
  Eigen::VectorXd scores(const Eigen::VectorXd& q) const;

  /// One query per row of `queries`; result i belongs to row i regardless of
  /// `threads`. threads == 0 means hardware concurrency.
  std::vector<RetrievalResult> query_batch(const Eigen::MatrixXd& queries, std::size_t k,
                                           std::size_t threads = 1) const;

 private:
  Metric metric_;
  std::vector<std::string> ids_;
  RowMatrix vectors_;
  Eigen::VectorXd norms_;
};

RetrievalIndex build_index(const EmbeddingSet& set, Metric metric = Metric::euclidean);

/// query(index, project(params, b_vector), k).
RetrievalResult project_and_query(const ProjectionParams& params, const RetrievalIndex& index,
                                  const Eigen::VectorXd& b_vector, std::size_t k);

Eigen::VectorXd to_vector(std::span<const float> row);

}  // namespace xmodal
