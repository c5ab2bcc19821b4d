#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "xmodal/retrieval.hpp"

namespace xmodal {

/// Lowercases and splits on every non-alphanumeric codepoint; empty tokens
/// are dropped. Input is decoded as UTF-8 (invalid bytes act as separators).
std::vector<std::string> tokenize(std::string_view text);

struct Bm25Params {
  double k1 = 1.5;
  double b = 0.75;
};

/// Okapi BM25 over a fixed document collection.
///
///   score(q, D) = sum over query tokens t of
///       idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * |D| / avgdl))
///   idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))
///
/// Repeated query tokens count once per occurrence.
class Bm25Index {
 public:
  /// Documents as (id, text) in insertion order. Throws ValidationError for
  /// an empty collection, duplicate ids, or negative/non-finite parameters.
  explicit Bm25Index(const std::vector<std::pair<std::string, std::string>>& documents, Bm25Params params = {});

  std::size_t size() const noexcept { return ids_.size(); }
  double avgdl() const noexcept { return avgdl_; }
  const Bm25Params& params() const noexcept { return params_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  std::size_t document_frequency(const std::string& term) const;
  std::size_t document_length(const std::string& doc_id) const;

  double idf(const std::string& term) const;

  /// Throws ValidationError for an unknown doc_id.
  double score(const std::vector<std::string>& query_tokens, const std::string& doc_id) const;

  /// Top-k by descending score, insertion order on ties. Throws
  /// ValidationError when k is 0 or exceeds the collection size.
  RetrievalResult retrieve(std::string_view query_text, std::size_t k) const;

 private:
  double score_at(const std::vector<std::string>& query_tokens, std::size_t doc) const;

  Bm25Params params_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> lookup_;
  std::vector<std::unordered_map<std::string, std::size_t>> term_freqs_;
  std::vector<std::size_t> lengths_;
  std::unordered_map<std::string, std::size_t> df_;
  double avgdl_ = 0.0;
};

inline double bm25_score(const Bm25Index& index, const std::vector<std::string>& query_tokens,
                         const std::string& doc_id) {
  return index.score(query_tokens, doc_id);
}

inline RetrievalResult bm25_retrieve(const Bm25Index& index, std::string_view query_text, std::size_t k) {
  return index.retrieve(query_text, k);
}

}  // namespace xmodal
