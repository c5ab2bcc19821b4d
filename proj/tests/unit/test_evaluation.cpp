#include <doctest.h>

#include <chrono>
#include <random>
#include <thread>

#include "oracles.hpp"
#include "temp_dir.hpp"
#include "xmodal/errors.hpp"
#include "xmodal/evaluation.hpp"

using namespace xmodal;

namespace {

using Pairs = std::vector<std::pair<std::string, std::string>>;

Retriever fixed_retriever(std::map<std::string, std::string> answers) {
  return [answers = std::move(answers)](const std::string& q) {
    return RetrievalResult{{Hit{answers.at(q), 0.0, 0}}};
  };
}

LatencyStats fake_latency(double avg) {
  LatencyStats s;
  s.avg_query_seconds = avg;
  s.throughput_qps = 1.0 / avg;
  s.n_queries = 4;
  s.warmup = 1;
  s.repetitions = 1;
  return s;
}

}  // namespace

TEST_CASE("four-query worked example") {
  const Pairs pairs{{"c1", "c1"}, {"c2", "c2"}, {"c3", "c3"}, {"c4", "c3"}};
  const auto m = score_predictions(pairs);
  const auto o = oracle::confusion_weighted({"c1", "c2", "c3", "c4"}, {"c1", "c2", "c3", "c3"});
  CHECK(m.accuracy == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(m.recall == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(m.precision == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(m.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(std::abs(m.precision - o.precision) <= 1e-12);
  CHECK(std::abs(m.f1 - o.f1) <= 1e-12);
}

TEST_CASE("perfect and fully wrong predictions") {
  const auto perfect = score_predictions({{"a", "a"}, {"b", "b"}, {"c", "c"}});
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  const auto wrong = score_predictions({{"a", "z"}, {"b", "z"}, {"c", "z"}});
  CHECK(wrong.accuracy == 0.0);
  CHECK(wrong.precision == 0.0);
  CHECK(wrong.recall == 0.0);
  CHECK(wrong.f1 == 0.0);
  CHECK_THROWS_AS(score_predictions({}), ValidationError);
}

TEST_CASE("random prediction sets agree with the confusion-matrix oracle") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 30;
    const std::size_t labels = 1 + rng() % 12;
    std::vector<std::string> gold, pred;
    Pairs pairs;
    for (std::size_t i = 0; i < n; ++i) {
      gold.push_back("g" + std::to_string(rng() % labels));
      pred.push_back("g" + std::to_string(rng() % (labels + 2)));
      pairs.emplace_back(gold.back(), pred.back());
    }
    const auto m = score_predictions(pairs);
    const auto o = oracle::confusion_weighted(gold, pred);
    CHECK(std::abs(m.accuracy - o.accuracy) <= 1e-12);
    CHECK(std::abs(m.precision - o.precision) <= 1e-12);
    CHECK(std::abs(m.recall - o.recall) <= 1e-12);
    CHECK(std::abs(m.f1 - o.f1) <= 1e-12);
    CHECK(std::abs(m.recall - m.accuracy) <= 1e-12);
  }
}

TEST_CASE("one-gold-per-class retrieval keeps F1 between precision and recall") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng() % 20;
    Pairs pairs;
    for (std::size_t i = 0; i < n; ++i) pairs.emplace_back("c" + std::to_string(i), "c" + std::to_string(rng() % n));
    const auto m = score_predictions(pairs);
    CHECK(m.precision <= m.f1 + 1e-12);
    CHECK(m.f1 <= m.recall + 1e-12);
  }
}

TEST_CASE("macro averaging counts predicted-only classes") {
  const auto macro = score_predictions({{"a", "a"}, {"b", "z"}}, Averaging::macro);
  // classes a, b, z: f1 = (1 + 0 + 0) / 3
  CHECK(macro.f1 == doctest::Approx(1.0 / 3.0));
  CHECK(macro.recall == doctest::Approx(1.0 / 3.0));
  CHECK(macro.accuracy == 0.5);
  CHECK(parse_averaging("macro") == Averaging::macro);
  CHECK(averaging_name(Averaging::weighted) == "weighted");
  CHECK_THROWS_AS(parse_averaging("micro-ish"), ValidationError);
}

TEST_CASE("evaluate_retrieval scores the top hit") {
  const std::map<std::string, std::string> gold{{"q1", "c1"}, {"q2", "c2"}, {"q3", "c3"}, {"q4", "c4"}};
  const auto m = evaluate_retrieval(fixed_retriever({{"q1", "c1"}, {"q2", "c2"}, {"q3", "c3"}, {"q4", "c3"}}), gold);
  CHECK(m.accuracy == doctest::Approx(0.75));
  CHECK(m.precision == doctest::Approx(0.625));
  CHECK_THROWS_AS(evaluate_retrieval(fixed_retriever({}), {}), ValidationError);
}

TEST_CASE("harmonic mean") {
  CHECK(std::abs(harmonic_mean(0.6591, 714.29) - 1.3170) <= 5e-4);
  CHECK(harmonic_mean(1.0, 1.0) == 1.0);
  CHECK(harmonic_mean(0.0, 500.0) == 0.0);
  CHECK(harmonic_mean(0.5, 0.0) == 0.0);
  CHECK_THROWS_AS(harmonic_mean(-0.1, 2.0), ValidationError);
  CHECK_THROWS_AS(harmonic_mean(0.5, std::numeric_limits<double>::infinity()), ValidationError);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> f1s(0.01, 1.0), tps(1.0, 1e5);
  for (int i = 0; i < 100; ++i) {
    const double f = f1s(rng);
    const double t = tps(rng);
    CHECK(harmonic_mean(f, t) < 2.0 * f);
    CHECK(harmonic_mean(f, t) == doctest::Approx(2.0 * f * t / (f + t)).epsilon(1e-12));
  }
}

TEST_CASE("benchmark throughput is the reciprocal of average latency") {
  int calls = 0;
  const Retriever counting = [&](const std::string& q) {
    ++calls;
    return RetrievalResult{{Hit{q, 0.0, 0}}};
  };
  const std::vector<std::string> queries{"a", "b", "c"};
  const auto stats = benchmark_latency(counting, queries, 5, 4);
  CHECK(calls == 5 + 3 * 4);
  CHECK(stats.avg_query_seconds > 0.0);
  CHECK(std::abs(stats.throughput_qps * stats.avg_query_seconds - 1.0) <= 1e-12);
  CHECK(stats.n_queries == 3);
  CHECK_THROWS_AS(benchmark_latency(counting, {}, 1, 1), ValidationError);
  CHECK_THROWS_AS(benchmark_latency(counting, queries, 1, 0), ValidationError);
}

TEST_CASE("benchmark sees a known delay") {
  const Retriever sleepy = [](const std::string& q) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
    return RetrievalResult{{Hit{q, 0.0, 0}}};
  };
  const auto stats = benchmark_latency(sleepy, {"x", "y"}, 1, 2);
  CHECK(stats.avg_query_seconds >= 0.010);
  CHECK(stats.avg_query_seconds < 0.1);
}

TEST_CASE("benchmark average is stable when repetitions double") {
  const Retriever busy = [](const std::string& q) {
    volatile double acc = 0.0;
    for (int i = 0; i < 20000; ++i) acc = acc + std::sqrt(static_cast<double>(i));
    return RetrievalResult{{Hit{q, acc, 0}}};
  };
  const std::vector<std::string> queries{"a", "b", "c", "d"};
  const auto once = benchmark_latency(busy, queries, 4, 20);
  const auto twice = benchmark_latency(busy, queries, 4, 40);
  const double ratio = twice.avg_query_seconds / once.avg_query_seconds;
  MESSAGE("avg ratio when doubling repetitions: " << ratio);
  CHECK(ratio > 0.5);
  CHECK(ratio < 2.0);
}

TEST_CASE("report round trip and validation") {
  testing_support::TempDir dir;
  ClassificationMetrics m{0.75, 0.625, 0.75, 2.0 / 3.0};
  const auto report = make_report(m, fake_latency(0.002), "projection", "synthetic", "{\"k\":1}");
  CHECK(report.harmonic_mean == doctest::Approx(harmonic_mean(m.f1, 500.0)).epsilon(1e-12));
  CHECK_NOTHROW(report.validate());
  emit_report(report, dir / "r.json");
  CHECK(read_report(dir / "r.json") == report);

  auto baseline = report;
  baseline.model = "bm25";
  emit_report_document({report, baseline}, dir / "doc.json");
  const auto back = read_report_document(dir / "doc.json");
  REQUIRE(back.size() == 2);
  CHECK(back[0] == report);
  CHECK(back[1].model == "bm25");

  auto bad = report;
  bad.harmonic_mean *= 1.01;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK_THROWS_AS(emit_report(bad, dir / "bad.json"), ValidationError);
  CHECK_FALSE(std::filesystem::exists(dir / "bad.json"));

  bad = report;
  bad.throughput_qps = 400.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = report;
  bad.precision = 1.5;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK_THROWS_AS(read_report(dir / "missing.json"), IoError);
}

TEST_CASE("environment description is non-empty") {
  const auto env = detect_environment();
  CHECK(env.cores >= 1);
  CHECK_FALSE(env.describe().empty());
}

TEST_CASE("a perfect run over many classes scores exactly one") {
  Pairs pairs;
  for (int i = 0; i < 100; ++i) pairs.emplace_back("c" + std::to_string(i), "c" + std::to_string(i));
  const auto m = score_predictions(pairs);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  CHECK(m.f1 == 1.0);
}
