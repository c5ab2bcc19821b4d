#include "xmodal/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xmodal/errors.hpp"

namespace xmodal {

namespace {

constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes one UTF-8 sequence starting at text[pos]; advances pos. Malformed
// input yields kInvalid and consumes a single byte.
char32_t next_codepoint(std::string_view text, std::size_t& pos) {
  const auto lead = static_cast<unsigned char>(text[pos]);
  std::size_t len = 0;
  char32_t cp = 0;
  if (lead < 0x80) {
    ++pos;
    return lead;
  } else if ((lead & 0xE0) == 0xC0) {
    len = 2;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    len = 3;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    len = 4;
    cp = lead & 0x07;
  } else {
    ++pos;
    return kInvalid;
  }
  if (pos + len > text.size()) {
    ++pos;
    return kInvalid;
  }
  for (std::size_t i = 1; i < len; ++i) {
    const auto cont = static_cast<unsigned char>(text[pos + i]);
    if ((cont & 0xC0) != 0x80) {
      ++pos;
      return kInvalid;
    }
    cp = (cp << 6) | (cont & 0x3F);
  }
  pos += len;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool in(char32_t cp, char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; }

// Table-driven approximation of Unicode alphanumerics: ASCII exactly, and
// outside ASCII everything except the separator, punctuation, symbol and
// combining-mark blocks listed here.
bool is_alnum(char32_t cp) {
  if (cp < 0x80) {
    return in(cp, U'0', U'9') || in(cp, U'a', U'z') || in(cp, U'A', U'Z');
  }
  if (cp == kInvalid) return false;
  if (in(cp, 0x80, 0xBF)) {
    // Latin-1: keep the ordinal indicators, micro sign, superscripts and fractions.
    return cp == 0xAA || cp == 0xB5 || cp == 0xBA || cp == 0xB2 || cp == 0xB3 || cp == 0xB9 || in(cp, 0xBC, 0xBE);
  }
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (in(cp, 0x02C2, 0x02C5) || in(cp, 0x02D2, 0x02DF)) return false;  // modifier symbols
  if (in(cp, 0x0300, 0x036F)) return false;                            // combining marks
  if (cp == 0x037E || cp == 0x0387) return false;                      // Greek punctuation
  if (in(cp, 0x2000, 0x206F)) return false;                            // general punctuation, spaces
  if (in(cp, 0x20A0, 0x20FF)) return false;                            // currency, combining symbols
  if (in(cp, 0x2190, 0x2BFF)) return false;                            // arrows, math, shapes, dingbats
  if (in(cp, 0x2E00, 0x2E7F)) return false;                            // supplemental punctuation
  if (in(cp, 0x3000, 0x3004) || in(cp, 0x3008, 0x3020) || cp == 0x3030) return false;  // CJK punctuation
  if (in(cp, 0xFE30, 0xFE4F) || in(cp, 0xFE50, 0xFE6F)) return false;
  if (in(cp, 0xFF00, 0xFF0F) || in(cp, 0xFF1A, 0xFF20) || in(cp, 0xFF3B, 0xFF40) || in(cp, 0xFF5B, 0xFF65)) {
    return false;
  }
  if (in(cp, 0xFFF0, 0xFFFF)) return false;    // specials, replacement character
  if (in(cp, 0x1F000, 0x1FAFF)) return false;  // emoji and pictographs
  if (in(cp, 0xD800, 0xDFFF) || cp > 0x10FFFF) return false;
  return true;
}

// Simple case folding for ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic.
char32_t to_lower(char32_t cp) {
  if (in(cp, U'A', U'Z')) return cp + 0x20;
  if (cp < 0x80) return cp;
  if (in(cp, 0xC0, 0xDE) && cp != 0xD7) return cp + 0x20;
  if (cp == 0x130) return U'i';
  if ((in(cp, 0x100, 0x137) || in(cp, 0x14A, 0x177)) && cp % 2 == 0) return cp + 1;
  if ((in(cp, 0x139, 0x148) || in(cp, 0x179, 0x17E)) && cp % 2 == 1) return cp + 1;
  if (cp == 0x178) return 0xFF;
  if (in(cp, 0x391, 0x3A9) && cp != 0x3A2) return cp + 0x20;
  if (cp == 0x386) return 0x3AC;
  if (in(cp, 0x388, 0x38A)) return cp + 0x25;
  if (cp == 0x38C) return 0x3CC;
  if (in(cp, 0x38E, 0x38F)) return cp + 0x3F;
  if (in(cp, 0x410, 0x42F)) return cp + 0x20;
  if (in(cp, 0x400, 0x40F)) return cp + 0x50;
  return cp;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t cp = next_codepoint(text, pos);
    if (is_alnum(cp)) {
      append_utf8(current, to_lower(cp));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Bm25Index::Bm25Index(const std::vector<std::pair<std::string, std::string>>& documents, Bm25Params params)
    : params_(params) {
  if (documents.empty()) throw ValidationError("BM25 index needs at least one document");
  if (!(params_.k1 >= 0.0) || !std::isfinite(params_.k1) || !(params_.b >= 0.0) || !std::isfinite(params_.b) ||
      params_.b > 1.0) {
    throw ValidationError("BM25 parameters require k1 >= 0 and 0 <= b <= 1");
  }
  ids_.reserve(documents.size());
  term_freqs_.reserve(documents.size());
  lengths_.reserve(documents.size());
  std::size_t total_length = 0;
  for (const auto& [id, text] : documents) {
    if (!lookup_.emplace(id, ids_.size()).second) throw ValidationError("duplicate document id '" + id + "'");
    ids_.push_back(id);
    const auto tokens = tokenize(text);
    std::unordered_map<std::string, std::size_t> tf;
    for (const auto& t : tokens) ++tf[t];
    for (const auto& [term, count] : tf) ++df_[term];
    lengths_.push_back(tokens.size());
    total_length += tokens.size();
    term_freqs_.push_back(std::move(tf));
  }
  avgdl_ = static_cast<double>(total_length) / static_cast<double>(ids_.size());
}

std::size_t Bm25Index::document_frequency(const std::string& term) const {
  const auto it = df_.find(term);
  return it == df_.end() ? 0 : it->second;
}

std::size_t Bm25Index::document_length(const std::string& doc_id) const {
  const auto it = lookup_.find(doc_id);
  if (it == lookup_.end()) throw ValidationError("unknown document id '" + doc_id + "'");
  return lengths_[it->second];
}

double Bm25Index::idf(const std::string& term) const {
  const double n = static_cast<double>(ids_.size());
  const double df = static_cast<double>(document_frequency(term));
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double Bm25Index::score_at(const std::vector<std::string>& query_tokens, std::size_t doc) const {
  const auto& tf_map = term_freqs_[doc];
  // Every document is empty when avgdl is 0; no term can match, so any factor works.
  const double length_ratio = avgdl_ > 0.0 ? static_cast<double>(lengths_[doc]) / avgdl_ : 1.0;
  const double norm = params_.k1 * (1.0 - params_.b + params_.b * length_ratio);
  double score = 0.0;
  for (const auto& term : query_tokens) {
    const auto it = tf_map.find(term);
    if (it == tf_map.end()) continue;
    const double tf = static_cast<double>(it->second);
    score += idf(term) * tf * (params_.k1 + 1.0) / (tf + norm);
  }
  return score;
}

double Bm25Index::score(const std::vector<std::string>& query_tokens, const std::string& doc_id) const {
  const auto it = lookup_.find(doc_id);
  if (it == lookup_.end()) throw ValidationError("unknown document id '" + doc_id + "'");
  return score_at(query_tokens, it->second);
}

RetrievalResult Bm25Index::retrieve(std::string_view query_text, std::size_t k) const {
  if (k == 0) throw ValidationError("k must be positive");
  if (k > ids_.size()) {
    throw ValidationError("k=" + std::to_string(k) + " exceeds collection size " + std::to_string(ids_.size()));
  }
  const auto tokens = tokenize(query_text);
  std::vector<double> scores(ids_.size());
  for (std::size_t d = 0; d < ids_.size(); ++d) scores[d] = score_at(tokens, d);

  std::vector<std::size_t> order(ids_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  RetrievalResult result;
  for (std::size_t r = 0; r < k; ++r) result.hits.push_back({ids_[order[r]], scores[order[r]], order[r]});
  return result;
}

}  // namespace xmodal
