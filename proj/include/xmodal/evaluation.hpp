#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "xmodal/retrieval.hpp"

namespace xmodal {

/// How per-class precision/recall/F1 are combined. Every gold candidate id is
/// its own class with a single true instance.
///
/// weighted: classes weighted by gold support (only gold classes count), which
///           makes recall equal to accuracy.
/// macro:    unweighted mean over every class that is gold or predicted.
enum class Averaging { weighted, macro };

std::string averaging_name(Averaging averaging);
Averaging parse_averaging(const std::string& name);

struct ClassificationMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Metrics over (gold, predicted) label pairs. Throws ValidationError when empty.
ClassificationMetrics score_predictions(const std::vector<std::pair<std::string, std::string>>& gold_and_predicted,
                                        Averaging averaging = Averaging::weighted);

using Retriever = std::function<RetrievalResult(const std::string& query_id)>;

/// Runs the retriever once per query and scores its top-1 hit against `gold`
/// (query id -> correct candidate id).
ClassificationMetrics evaluate_retrieval(const Retriever& retriever, const std::map<std::string, std::string>& gold,
                                         Averaging averaging = Averaging::weighted);

/// 2 * f1 * throughput / (f1 + throughput), or 0 when f1 is 0. Throws
/// ValidationError for negative or non-finite inputs.
double harmonic_mean(double f1, double throughput);

struct EnvironmentInfo {
  std::string cpu_model;
  unsigned cores = 0;

  std::string describe() const;
};

EnvironmentInfo detect_environment();

struct LatencyStats {
  double avg_query_seconds = 0.0;
  double throughput_qps = 0.0;
  std::size_t n_queries = 0;
  std::size_t warmup = 0;
  std::size_t repetitions = 0;
  EnvironmentInfo environment;
};

inline constexpr std::size_t kDefaultWarmup = 10;
inline constexpr std::size_t kDefaultRepetitions = 3;

/// Sequential single-query timing of the full retrieve path on a monotonic
/// clock. `warmup` calls (cycling through the queries) are discarded, then
/// every query is run `repetitions` times. throughput_qps is 1 / avg.
LatencyStats benchmark_latency(const Retriever& retriever, const std::vector<std::string>& queries,
                               std::size_t warmup = kDefaultWarmup, std::size_t repetitions = kDefaultRepetitions);

struct EvalReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double avg_query_seconds = 0.0;
  double throughput_qps = 0.0;
  double harmonic_mean = 0.0;
  std::size_t n_queries = 0;
  std::string config;
  std::string environment;
  std::string dataset;
  std::string model;

  /// Throws ValidationError if a metric leaves [0, 1], timings are not
  /// positive reciprocals, or harmonic_mean disagrees with f1 and throughput.
  void validate() const;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

EvalReport make_report(const ClassificationMetrics& metrics, const LatencyStats& latency, std::string model,
                       std::string dataset, std::string config);

/// Validates, then writes one report as a JSON object.
void emit_report(const EvalReport& report, const std::filesystem::path& path);
EvalReport read_report(const std::filesystem::path& path);

/// Several reports (model and baselines) in one `{"reports": [...]}` document.
void emit_report_document(const std::vector<EvalReport>& reports, const std::filesystem::path& path);
std::vector<EvalReport> read_report_document(const std::filesystem::path& path);

}  // namespace xmodal
