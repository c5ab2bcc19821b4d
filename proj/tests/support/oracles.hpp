#pragma once

// Independent reference implementations used only by tests. None of these
// call into the library code paths they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major, Mat[r][c]

/// Plain nested-loop evaluation of w3 * relu(w2 * relu(w1 * x + b1) + b2) + b3.
inline Vec mlp_forward(const Mat& w1, const Vec& b1, const Mat& w2, const Vec& b2, const Mat& w3, const Vec& b3,
                       const Vec& x) {
  Vec h1(b1.size());
  for (std::size_t i = 0; i < w1.size(); ++i) {
    double s = b1[i];
    for (std::size_t k = 0; k < x.size(); ++k) s += w1[i][k] * x[k];
    h1[i] = s > 0.0 ? s : 0.0;
  }
  Vec h2(b2.size());
  for (std::size_t i = 0; i < w2.size(); ++i) {
    double s = b2[i];
    for (std::size_t k = 0; k < h1.size(); ++k) s += w2[i][k] * h1[k];
    h2[i] = s > 0.0 ? s : 0.0;
  }
  Vec out(b3.size());
  for (std::size_t i = 0; i < w3.size(); ++i) {
    double s = b3[i];
    for (std::size_t k = 0; k < h2.size(); ++k) s += w3[i][k] * h2[k];
    out[i] = s;
  }
  return out;
}

/// Central difference of f at every coordinate of x.
inline Vec central_difference(const std::function<double(const Vec&)>& f, Vec x, double step) {
  Vec grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double plus = f(x);
    x[i] = saved - step;
    const double minus = f(x);
    x[i] = saved;
    grad[i] = (plus - minus) / (2.0 * step);
  }
  return grad;
}

/// |a - n| / max(|a|, |n|, floor). The floor keeps exact zeros (dead ReLU
/// paths) from turning finite-difference round-off into a relative blow-up.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline double euclid(const Vec& x, const Vec& y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
  return std::sqrt(s);
}

/// Line-by-line transliteration of the custom N-pairs loss pseudocode.
inline double npairs_triple_loop(const Mat& A, const Mat& P, const std::vector<int>& labels, double margin,
                                 std::size_t* count_out = nullptr) {
  double loss = 0.0;
  std::size_t count = 0;
  const std::size_t N = A.size();
  for (std::size_t i = 0; i < N; ++i) {
    if (labels[i] == 1) {
      const double positive_distance = euclid(A[i], P[i]);
      for (std::size_t j = 0; j < N; ++j) {
        if (i != j) {
          const double negative_distance = euclid(A[i], P[j]);
          loss = loss + std::max(0.0, positive_distance - negative_distance + margin);
          count = count + 1;
        }
      }
    }
  }
  if (count_out) *count_out = count;
  if (count > 0) return loss / static_cast<double>(count);
  return 0.0;
}

/// Full sort of all (score, position) pairs; returns positions in rank order.
inline std::vector<std::size_t> full_sort(const Vec& scores, bool ascending) {
  std::vector<std::pair<double, std::size_t>> keyed;
  for (std::size_t i = 0; i < scores.size(); ++i) keyed.emplace_back(ascending ? scores[i] : -scores[i], i);
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> order;
  for (const auto& [key, pos] : keyed) order.push_back(pos);
  return order;
}

struct Prf {
  double accuracy, precision, recall, f1;
};

/// Builds the explicit confusion matrix over the label union, then derives
/// support-weighted precision / recall / F1.
inline Prf confusion_weighted(const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
  std::set<std::string> label_set(gold.begin(), gold.end());
  label_set.insert(pred.begin(), pred.end());
  const std::vector<std::string> labels(label_set.begin(), label_set.end());
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < labels.size(); ++i) idx[labels[i]] = i;
  const std::size_t L = labels.size();
  std::vector<std::vector<double>> cm(L, std::vector<double>(L, 0.0));  // cm[true][pred]
  for (std::size_t i = 0; i < gold.size(); ++i) cm[idx[gold[i]]][idx[pred[i]]] += 1.0;

  Prf out{0, 0, 0, 0};
  double diag = 0.0;
  for (std::size_t c = 0; c < L; ++c) diag += cm[c][c];
  out.accuracy = diag / static_cast<double>(gold.size());
  for (std::size_t c = 0; c < L; ++c) {
    double row = 0.0, col = 0.0;
    for (std::size_t k = 0; k < L; ++k) {
      row += cm[c][k];
      col += cm[k][c];
    }
    if (row == 0.0) continue;
    const double p = col == 0.0 ? 0.0 : cm[c][c] / col;
    const double r = cm[c][c] / row;
    const double f = p + r == 0.0 ? 0.0 : 2 * p * r / (p + r);
    const double w = row / static_cast<double>(gold.size());
    out.precision += w * p;
    out.recall += w * r;
    out.f1 += w * f;
  }
  return out;
}

/// Textbook BM25 with the plus-one idf, recomputing all statistics from
/// already-tokenized documents on every call.
inline double bm25_bruteforce(const std::vector<std::vector<std::string>>& docs, const std::vector<std::string>& query,
                              std::size_t doc, double k1, double b) {
  const double N = static_cast<double>(docs.size());
  double total_len = 0.0;
  for (const auto& d : docs) total_len += static_cast<double>(d.size());
  const double avgdl = total_len / N;
  double score = 0.0;
  for (const auto& term : query) {
    double df = 0.0;
    for (const auto& d : docs) df += std::count(d.begin(), d.end(), term) > 0 ? 1.0 : 0.0;
    const double tf = static_cast<double>(std::count(docs[doc].begin(), docs[doc].end(), term));
    if (tf == 0.0) continue;
    const double idf = std::log(1.0 + (N - df + 0.5) / (df + 0.5));
    const double dl = static_cast<double>(docs[doc].size());
    score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
  }
  return score;
}

}  // namespace oracle
