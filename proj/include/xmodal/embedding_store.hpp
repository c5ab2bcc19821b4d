#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace xmodal {

/// A dense matrix of float32 vectors keyed by unique string ids.
///
/// Immutable after construction. The constructor enforces every invariant:
/// positive dimension, one row of `dim` values per id, unique non-empty ids
/// without embedded newlines, and finite values.
class EmbeddingSet {
 public:
  EmbeddingSet(std::size_t dim, std::vector<std::string> ids, std::vector<float> values);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::string& id(std::size_t row) const { return ids_.at(row); }

  /// Row-major payload, `size() * dim()` values.
  std::span<const float> values() const noexcept { return values_; }
  std::span<const float> row(std::size_t index) const;

  std::optional<std::size_t> find(const std::string& id) const;
  /// Like find(), but throws ValidationError for unknown ids.
  std::size_t index_of(const std::string& id) const;

  friend bool operator==(const EmbeddingSet& lhs, const EmbeddingSet& rhs);

 private:
  std::size_t dim_;
  std::vector<std::string> ids_;
  std::vector<float> values_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

EmbeddingSet load_embeddings(const std::filesystem::path& path);
void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);

/// Encodes a set in the EMBV1 layout. save_embeddings writes exactly these bytes.
std::vector<std::uint8_t> encode_embeddings(const EmbeddingSet& set);
EmbeddingSet decode_embeddings(std::span<const std::uint8_t> bytes);

/// Size in bytes of the fixed EMBV1 header (magic, count, dim, id-block length).
inline constexpr std::size_t kEmbeddingHeaderBytes = 22;

struct PairExample {
  std::string anchor_id;
  std::string candidate_id;
  int label = 0;

  friend bool operator==(const PairExample&, const PairExample&) = default;
};

/// Labeled (anchor, candidate) examples plus an optional raw-text corpus.
struct PairDataset {
  std::vector<PairExample> examples;
  std::map<std::string, std::string> raw_texts;

  std::size_t positive_count() const;

  /// Throws ValidationError unless every anchor resolves in `anchors` and every
  /// candidate resolves in `candidates`.
  void check_ids(const EmbeddingSet& anchors, const EmbeddingSet& candidates) const;

  friend bool operator==(const PairDataset&, const PairDataset&) = default;
};

std::vector<PairExample> load_pairs(const std::filesystem::path& path);
void save_pairs(const std::vector<PairExample>& pairs, const std::filesystem::path& path);

std::map<std::string, std::string> load_texts(const std::filesystem::path& path);
void save_texts(const std::map<std::string, std::string>& texts, const std::filesystem::path& path);

/// Train / held-out partition of a pair dataset.
struct DatasetSplit {
  PairDataset train;
  PairDataset test;
};

/// Moves the last `holdout_anchors` distinct anchors (in order of first
/// appearance) and their positive candidates into the test side. Examples that
/// touch any held-out id are excluded from the train side. With zero held-out
/// anchors everything lands in `train` and `test` is a copy of it.
DatasetSplit split_holdout(const PairDataset& data, std::size_t holdout_anchors);

}  // namespace xmodal
