#include "xmodal/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "xmodal/errors.hpp"

namespace xmodal {

namespace {

using Json = nlohmann::ordered_json;

struct ClassCounts {
  std::size_t support = 0;
  std::size_t predicted = 0;
  std::size_t true_positive = 0;
};

double safe_ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f_score(double precision, double recall) {
  return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

Json to_json(const EvalReport& r) {
  Json j;
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["avg_query_seconds"] = r.avg_query_seconds;
  j["throughput_qps"] = r.throughput_qps;
  j["harmonic_mean"] = r.harmonic_mean;
  j["n_queries"] = r.n_queries;
  j["config"] = r.config;
  j["environment"] = r.environment;
  j["dataset"] = r.dataset;
  j["model"] = r.model;
  return j;
}

EvalReport from_json(const Json& j) {
  try {
    EvalReport r;
    r.accuracy = j.at("accuracy").get<double>();
    r.precision = j.at("precision").get<double>();
    r.recall = j.at("recall").get<double>();
    r.f1 = j.at("f1").get<double>();
    r.avg_query_seconds = j.at("avg_query_seconds").get<double>();
    r.throughput_qps = j.at("throughput_qps").get<double>();
    r.harmonic_mean = j.at("harmonic_mean").get<double>();
    r.n_queries = j.at("n_queries").get<std::size_t>();
    r.config = j.at("config").get<std::string>();
    r.environment = j.at("environment").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.model = j.at("model").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
}

void write_json(const Json& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out.flush()) throw IoError("write failed on " + path.string());
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace

std::string averaging_name(Averaging averaging) { return averaging == Averaging::macro ? "macro" : "weighted"; }

Averaging parse_averaging(const std::string& name) {
  if (name == "weighted") return Averaging::weighted;
  if (name == "macro") return Averaging::macro;
  throw ValidationError("unknown averaging '" + name + "' (expected weighted or macro)");
}

ClassificationMetrics score_predictions(const std::vector<std::pair<std::string, std::string>>& gold_and_predicted,
                                        Averaging averaging) {
  if (gold_and_predicted.empty()) throw ValidationError("cannot score an empty prediction set");

  std::unordered_map<std::string, ClassCounts> classes;
  std::size_t correct = 0;
  for (const auto& [gold, predicted] : gold_and_predicted) {
    ++classes[gold].support;
    ++classes[predicted].predicted;
    if (gold == predicted) {
      ++classes[gold].true_positive;
      ++correct;
    }
  }

  const double n = static_cast<double>(gold_and_predicted.size());
  ClassificationMetrics m;
  m.accuracy = static_cast<double>(correct) / n;

  // Sum in a fixed (sorted) class order so results do not depend on hashing.
  std::set<std::string> names;
  for (const auto& entry : classes) names.insert(entry.first);

  std::size_t averaged = 0;
  for (const auto& name : names) {
    const auto& c = classes.at(name);
    const double precision = safe_ratio(c.true_positive, c.predicted);
    const double recall = safe_ratio(c.true_positive, c.support);
    const double f1 = f_score(precision, recall);
    if (averaging == Averaging::weighted) {
      if (c.support == 0) continue;
      const double support = static_cast<double>(c.support);
      m.precision += support * precision;
      m.recall += support * recall;
      m.f1 += support * f1;
    } else {
      m.precision += precision;
      m.recall += recall;
      m.f1 += f1;
      ++averaged;
    }
  }
  const double divisor = averaging == Averaging::weighted ? n : static_cast<double>(averaged);
  // Rounding in the sums must not push a perfect score past 1.
  m.precision = std::min(1.0, m.precision / divisor);
  m.recall = std::min(1.0, m.recall / divisor);
  m.f1 = std::min(1.0, m.f1 / divisor);
  return m;
}

ClassificationMetrics evaluate_retrieval(const Retriever& retriever, const std::map<std::string, std::string>& gold,
                                         Averaging averaging) {
  if (gold.empty()) throw ValidationError("gold map is empty");
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(gold.size());
  for (const auto& [query, answer] : gold) {
    const auto result = retriever(query);
    if (result.hits.empty()) throw ValidationError("retriever returned no hits for '" + query + "'");
    pairs.emplace_back(answer, result.hits.front().id);
  }
  return score_predictions(pairs, averaging);
}

double harmonic_mean(double f1, double throughput) {
  if (!(f1 >= 0.0) || !(throughput >= 0.0) || !std::isfinite(f1) || !std::isfinite(throughput)) {
    throw ValidationError("harmonic_mean needs finite non-negative inputs");
  }
  if (f1 == 0.0 || throughput == 0.0) return 0.0;
  return 2.0 * f1 * throughput / (f1 + throughput);
}

std::string EnvironmentInfo::describe() const {
  return cpu_model + " (" + std::to_string(cores) + " logical cores)";
}

EnvironmentInfo detect_environment() {
  EnvironmentInfo env;
  env.cores = std::thread::hardware_concurrency();
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        env.cpu_model = line.substr(line.find_first_not_of(" \t", colon + 1));
        break;
      }
    }
  }
  if (env.cpu_model.empty()) env.cpu_model = "unknown cpu";
  return env;
}

LatencyStats benchmark_latency(const Retriever& retriever, const std::vector<std::string>& queries,
                               std::size_t warmup, std::size_t repetitions) {
  if (queries.empty()) throw ValidationError("benchmark needs at least one query");
  if (repetitions < 1) throw ValidationError("benchmark repetitions must be at least 1");

  std::size_t sink = 0;
  for (std::size_t i = 0; i < warmup; ++i) sink += retriever(queries[i % queries.size()]).hits.size();

  const auto start = std::chrono::steady_clock::now();
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    for (const auto& q : queries) sink += retriever(q).hits.size();
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (sink == 0) throw ValidationError("benchmark retriever returned no hits");

  LatencyStats stats;
  stats.n_queries = queries.size();
  stats.warmup = warmup;
  stats.repetitions = repetitions;
  // A clock with coarse resolution can report 0 for tiny runs; clamp to one tick.
  const double ticks = static_cast<double>(std::chrono::steady_clock::period::num) /
                       static_cast<double>(std::chrono::steady_clock::period::den);
  stats.avg_query_seconds = std::max(total, ticks) / static_cast<double>(repetitions * queries.size());
  stats.throughput_qps = 1.0 / stats.avg_query_seconds;
  stats.environment = detect_environment();
  return stats;
}

void EvalReport::validate() const {
  const auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!unit(accuracy) || !unit(precision) || !unit(recall) || !unit(f1)) {
    throw ValidationError("report metrics must lie in [0, 1]");
  }
  if (!(avg_query_seconds > 0.0) || !(throughput_qps > 0.0) || !std::isfinite(avg_query_seconds) ||
      !std::isfinite(throughput_qps)) {
    throw ValidationError("report timings must be positive and finite");
  }
  if (std::abs(throughput_qps * avg_query_seconds - 1.0) > 1e-12) {
    throw ValidationError("throughput_qps is not the reciprocal of avg_query_seconds");
  }
  const double expected = xmodal::harmonic_mean(f1, throughput_qps);
  if (std::abs(harmonic_mean - expected) > 1e-12 * std::max(1.0, expected)) {
    throw ValidationError("harmonic_mean does not match f1 and throughput_qps");
  }
  if (n_queries == 0) throw ValidationError("report covers zero queries");
}

EvalReport make_report(const ClassificationMetrics& metrics, const LatencyStats& latency, std::string model,
                       std::string dataset, std::string config) {
  EvalReport r;
  r.accuracy = metrics.accuracy;
  r.precision = metrics.precision;
  r.recall = metrics.recall;
  r.f1 = metrics.f1;
  r.avg_query_seconds = latency.avg_query_seconds;
  r.throughput_qps = latency.throughput_qps;
  r.harmonic_mean = harmonic_mean(metrics.f1, latency.throughput_qps);
  r.n_queries = latency.n_queries;
  r.config = std::move(config);
  r.environment = latency.environment.describe();
  r.dataset = std::move(dataset);
  r.model = std::move(model);
  return r;
}

void emit_report(const EvalReport& report, const std::filesystem::path& path) {
  report.validate();
  write_json(to_json(report), path);
}

EvalReport read_report(const std::filesystem::path& path) {
  auto report = from_json(read_json(path));
  report.validate();
  return report;
}

void emit_report_document(const std::vector<EvalReport>& reports, const std::filesystem::path& path) {
  Json doc;
  doc["reports"] = Json::array();
  for (const auto& r : reports) {
    r.validate();
    doc["reports"].push_back(to_json(r));
  }
  write_json(doc, path);
}

std::vector<EvalReport> read_report_document(const std::filesystem::path& path) {
  const auto doc = read_json(path);
  if (!doc.contains("reports") || !doc["reports"].is_array()) {
    throw FormatError(path.string() + ": missing 'reports' array");
  }
  std::vector<EvalReport> reports;
  for (const auto& j : doc["reports"]) {
    reports.push_back(from_json(j));
    reports.back().validate();
  }
  return reports;
}

}  // namespace xmodal
