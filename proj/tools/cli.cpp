#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "xmodal/xmodal.hpp"

namespace xmodal::cli {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Flags given on the command line win over values from --config.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::optional<std::string> config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (!config_path || args.empty()) return args;

  std::ifstream in(*config_path);
  if (!in) throw IoError("cannot open config " + *config_path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::exception& e) {
    throw FormatError("config " + *config_path + ": " + e.what());
  }
  if (!doc.is_object()) throw FormatError("config " + *config_path + " must hold a JSON object");

  std::vector<std::string> injected;
  for (const auto& [key, value] : doc.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (given) continue;
    const auto add = [&](const Json& v) {
      if (v.is_boolean()) {
        if (v.get<bool>()) injected.push_back(flag);
      } else {
        injected.push_back(flag);
        injected.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      }
    };
    if (value.is_array()) {
      for (const auto& v : value) add(v);
    } else {
      add(value);
    }
  }
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

PairDataset load_dataset(const fs::path& pairs_path) {
  PairDataset data;
  data.examples = load_pairs(pairs_path);
  return data;
}

std::vector<std::pair<std::string, std::string>> positive_pairs(const PairDataset& data) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& ex : data.examples)
    if (ex.label == 1) out.emplace_back(ex.anchor_id, ex.candidate_id);
  if (out.empty()) throw ValidationError("evaluation split has no positive pairs");
  return out;
}

EmbeddingSet subset(const EmbeddingSet& set, const std::vector<std::string>& ids) {
  std::vector<float> values;
  values.reserve(ids.size() * set.dim());
  for (const auto& id : ids) {
    const auto row = set.row(set.index_of(id));
    values.insert(values.end(), row.begin(), row.end());
  }
  return EmbeddingSet(set.dim(), ids, std::move(values));
}

// --- gen-synth -------------------------------------------------------------

struct GenArgs {
  std::size_t pairs = 1000;
  std::size_t dim = 64;
  double noise = 0.05;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
};

int gen_synth(const GenArgs& a, std::ostream& out, std::ostream& err) {
  const auto task = generate_synthetic(a.pairs, a.dim, a.noise, a.seed);
  const fs::path dir(a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  save_embeddings(task.anchors, dir / "a.embv");
  save_embeddings(task.candidates, dir / "b.embv");
  save_pairs(task.pairs.examples, dir / "pairs.jsonl");

  Json doc;
  doc["anchors"] = (dir / "a.embv").string();
  doc["candidates"] = (dir / "b.embv").string();
  doc["pairs"] = (dir / "pairs.jsonl").string();
  doc["n_pairs"] = a.pairs;
  doc["n_examples"] = task.pairs.examples.size();
  doc["dim"] = a.dim;
  doc["noise"] = a.noise;
  doc["seed"] = a.seed;
  out << doc.dump() << '\n';
  err << "wrote " << task.pairs.examples.size() << " examples of dim " << a.dim << " to " << dir.string() << '\n';
  return kExitOk;
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string a, b, pairs, out;
  std::optional<std::string> report;
  std::size_t holdout = 0;
  std::string optimizer = "adam";
  bool no_shuffle = false;
  TrainConfig cfg;
};

int train_cmd(TrainArgs& a, std::ostream& out, std::ostream& err) {
  a.cfg.optimizer = parse_optimizer(a.optimizer);
  a.cfg.shuffle = !a.no_shuffle;
  const auto anchors = load_embeddings(a.a);
  const auto candidates = load_embeddings(a.b);
  const auto split = split_holdout(load_dataset(a.pairs), a.holdout);

  auto result = train(anchors, candidates, split.train, a.cfg);
  save_params(result.params, a.out);
  result.report.checkpoint_path = a.out;
  if (a.report) write_train_report(result.report, a.cfg, *a.report);

  Json doc;
  doc["epoch_losses"] = result.report.epoch_losses;
  doc["wall_clock_seconds"] = result.report.wall_clock_seconds;
  doc["checkpoint_path"] = a.out;
  doc["train_examples"] = split.train.examples.size();
  out << doc.dump() << '\n';
  err << "trained " << a.cfg.epochs << " epochs in " << result.report.wall_clock_seconds << " s, final loss "
      << result.report.epoch_losses.back() << ", checkpoint " << a.out << '\n';
  return kExitOk;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::optional<std::string> checkpoint;
  std::string a, b, pairs;
  std::optional<std::string> texts, out;
  std::size_t holdout = 0;
  std::vector<std::string> baselines;
  std::string metric = "euclidean";
  std::string averaging = "weighted";
  std::size_t warmup = kDefaultWarmup;
  std::size_t repetitions = kDefaultRepetitions;
};

int eval_cmd(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  if (!a.checkpoint && a.baselines.empty()) throw ValidationError("nothing to evaluate: give --checkpoint or --baseline");
  for (const auto& name : a.baselines) {
    if (name != "raw-embedding" && name != "bm25") throw ValidationError("unknown baseline '" + name + "'");
  }
  const auto metric = parse_metric(a.metric);
  const auto averaging = parse_averaging(a.averaging);
  const auto anchors = load_embeddings(a.a);
  const auto candidates = load_embeddings(a.b);
  const auto data = load_dataset(a.pairs);
  data.check_ids(anchors, candidates);
  const auto test = split_holdout(data, a.holdout).test;

  // Held-out candidates are the queries; held-out anchors form the pool.
  const auto positives = positive_pairs(test);
  std::map<std::string, std::string> gold;
  std::vector<std::string> pool_ids, queries;
  for (const auto& [anchor, candidate] : positives) {
    const auto [it, inserted] = gold.emplace(candidate, anchor);
    if (!inserted && it->second != anchor) {
      throw ValidationError("candidate '" + candidate + "' is the positive for more than one anchor");
    }
    if (inserted) queries.push_back(candidate);
    if (std::find(pool_ids.begin(), pool_ids.end(), anchor) == pool_ids.end()) pool_ids.push_back(anchor);
  }
  const RetrievalIndex index(subset(anchors, pool_ids), metric);
  std::map<std::string, Eigen::VectorXd> query_vectors;
  for (const auto& q : queries) query_vectors.emplace(q, to_vector(candidates.row(candidates.index_of(q))));

  Json settings;
  settings["metric"] = a.metric;
  settings["averaging"] = a.averaging;
  settings["warmup"] = a.warmup;
  settings["repetitions"] = a.repetitions;
  settings["holdout"] = a.holdout;
  const std::string dataset = a.pairs + " (" + std::to_string(queries.size()) + " queries, pool " +
                              std::to_string(pool_ids.size()) + ")";

  std::vector<EvalReport> reports;
  const auto run_one = [&](const std::string& model, const Retriever& retriever, Json config) {
    const auto metrics = evaluate_retrieval(retriever, gold, averaging);
    const auto latency = benchmark_latency(retriever, queries, a.warmup, a.repetitions);
    reports.push_back(make_report(metrics, latency, model, dataset, config.dump()));
    const auto& r = reports.back();
    err << model << ": accuracy " << r.accuracy << ", f1 " << r.f1 << ", " << r.throughput_qps << " q/s, harmonic "
        << r.harmonic_mean << '\n';
  };

  if (a.checkpoint) {
    const auto params = load_params(*a.checkpoint);
    if (params.d != anchors.dim()) {
      throw ValidationError("checkpoint dim " + std::to_string(params.d) + " does not match embeddings dim " +
                            std::to_string(anchors.dim()));
    }
    Json config = settings;
    config["checkpoint"] = *a.checkpoint;
    config["hidden_dim"] = params.h;
    run_one("projection", [&](const std::string& q) { return project_and_query(params, index, query_vectors.at(q), 1); },
            config);
  }
  for (const auto& name : a.baselines) {
    if (name == "raw-embedding") {
      run_one(name, [&](const std::string& q) { return index.query(query_vectors.at(q), 1); }, settings);
    } else {
      if (!a.texts) throw ValidationError("the bm25 baseline needs --texts");
      const auto texts = load_texts(*a.texts);
      const auto text_of = [&](const std::string& id) -> const std::string& {
        const auto it = texts.find(id);
        if (it == texts.end()) throw ValidationError("no text for id '" + id + "'");
        return it->second;
      };
      std::vector<std::pair<std::string, std::string>> docs;
      for (const auto& id : pool_ids) docs.emplace_back(id, text_of(id));
      for (const auto& q : queries) (void)text_of(q);
      const Bm25Index bm25(docs);
      Json config = settings;
      config["metric"] = "bm25";
      config["k1"] = bm25.params().k1;
      config["b"] = bm25.params().b;
      run_one(name, [&](const std::string& q) { return bm25.retrieve(texts.at(q), 1); }, config);
    }
  }

  if (a.out) emit_report_document(reports, *a.out);
  Json doc;
  doc["reports"] = Json::array();
  for (const auto& r : reports) {
    Json j;
    j["model"] = r.model;
    j["accuracy"] = r.accuracy;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["avg_query_seconds"] = r.avg_query_seconds;
    j["throughput_qps"] = r.throughput_qps;
    j["harmonic_mean"] = r.harmonic_mean;
    j["n_queries"] = r.n_queries;
    doc["reports"].push_back(j);
  }
  out << doc.dump() << '\n';
  return kExitOk;
}

// --- retrieve / bench ------------------------------------------------------

struct QueryArgs {
  std::optional<std::string> checkpoint;
  std::string index, queries;
  std::vector<std::string> query_ids;
  std::size_t k = 1;
  std::string metric = "euclidean";
  std::size_t threads = 1;
  std::size_t warmup = kDefaultWarmup;
  std::size_t repetitions = kDefaultRepetitions;
};

struct QuerySetup {
  RetrievalIndex index;
  std::optional<ProjectionParams> params;
  std::vector<std::string> ids;
  std::map<std::string, Eigen::VectorXd> vectors;
};

QuerySetup setup_queries(const QueryArgs& a) {
  const auto pool = load_embeddings(a.index);
  const auto queries = load_embeddings(a.queries);
  QuerySetup s{RetrievalIndex(pool, parse_metric(a.metric)), std::nullopt, a.query_ids, {}};
  if (a.checkpoint) {
    s.params = load_params(*a.checkpoint);
    if (s.params->d != queries.dim()) throw ValidationError("checkpoint dim does not match query dim");
  }
  if (s.ids.empty()) s.ids = queries.ids();
  for (const auto& id : s.ids) s.vectors.emplace(id, to_vector(queries.row(queries.index_of(id))));
  return s;
}

int retrieve_cmd(const QueryArgs& a, std::ostream& out, std::ostream& err) {
  const auto s = setup_queries(a);
  Eigen::MatrixXd q(static_cast<Eigen::Index>(s.ids.size()), static_cast<Eigen::Index>(s.index.dim()));
  for (std::size_t i = 0; i < s.ids.size(); ++i) {
    const auto& v = s.vectors.at(s.ids[i]);
    if (static_cast<std::size_t>(v.size()) != s.index.dim()) throw ValidationError("query dim does not match index dim");
    q.row(static_cast<Eigen::Index>(i)) = (s.params ? project(*s.params, v) : v).transpose();
  }
  const auto results = s.index.query_batch(q, a.k, a.threads);
  for (std::size_t i = 0; i < results.size(); ++i) {
    for (std::size_t r = 0; r < results[i].hits.size(); ++r) {
      const auto& hit = results[i].hits[r];
      Json line;
      line["query_id"] = s.ids[i];
      line["rank"] = r + 1;
      line["id"] = hit.id;
      line["score"] = hit.score;
      out << line.dump() << '\n';
    }
  }
  err << "answered " << results.size() << " queries against " << s.index.size() << " entries\n";
  return kExitOk;
}

int bench_cmd(const QueryArgs& a, std::ostream& out, std::ostream& err) {
  const auto s = setup_queries(a);
  const Retriever retriever = [&](const std::string& id) {
    const auto& v = s.vectors.at(id);
    return s.params ? project_and_query(*s.params, s.index, v, a.k) : s.index.query(v, a.k);
  };
  const auto stats = benchmark_latency(retriever, s.ids, a.warmup, a.repetitions);
  Json doc;
  doc["avg_query_seconds"] = stats.avg_query_seconds;
  doc["throughput_qps"] = stats.throughput_qps;
  doc["n_queries"] = stats.n_queries;
  doc["warmup"] = stats.warmup;
  doc["repetitions"] = stats.repetitions;
  doc["environment"] = stats.environment.describe();
  out << doc.dump() << '\n';
  err << stats.throughput_qps << " queries/s (" << stats.avg_query_seconds * 1e3 << " ms each) on "
      << stats.environment.describe() << '\n';
  return kExitOk;
}

void add_query_options(CLI::App* cmd, QueryArgs& q) {
  cmd->add_option("--checkpoint", q.checkpoint, "Projection checkpoint; raw vectors when omitted");
  cmd->add_option("--index", q.index, "Embeddings to search")->required();
  cmd->add_option("--queries", q.queries, "Embeddings holding the query vectors")->required();
  cmd->add_option("--query-id", q.query_ids, "Query ids to run (default: all)");
  cmd->add_option("--k", q.k, "Hits per query");
  cmd->add_option("--metric", q.metric, "euclidean or cosine");
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-modal projection training and retrieval"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synth", "Generate a synthetic aligned pair task");
  gen_cmd->add_option("--pairs", gen.pairs, "Number of aligned pairs");
  gen_cmd->add_option("--dim", gen.dim, "Embedding dimension");
  gen_cmd->add_option("--noise", gen.noise, "Noise standard deviation");
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  TrainArgs tr;
  auto* train_sub = app.add_subcommand("train", "Train a projection");
  train_sub->add_option("--a", tr.a, "Anchor embeddings")->required();
  train_sub->add_option("--b", tr.b, "Candidate embeddings")->required();
  train_sub->add_option("--pairs", tr.pairs, "Pair dataset (JSON lines)")->required();
  train_sub->add_option("--holdout", tr.holdout, "Anchors held out from training");
  train_sub->add_option("--epochs", tr.cfg.epochs);
  train_sub->add_option("--batch-size", tr.cfg.batch_size);
  train_sub->add_option("--lr", tr.cfg.learning_rate);
  train_sub->add_option("--margin", tr.cfg.margin);
  train_sub->add_option("--seed", tr.cfg.seed);
  train_sub->add_option("--optimizer", tr.optimizer, "adam or sgd");
  train_sub->add_option("--hidden", tr.cfg.hidden_dim, "Hidden width");
  train_sub->add_flag("--no-shuffle", tr.no_shuffle);
  train_sub->add_flag("--normalize-inputs", tr.cfg.normalize_inputs);
  train_sub->add_option("--out", tr.out, "Checkpoint path")->required();
  train_sub->add_option("--report", tr.report, "Training report path");

  EvalArgs ev;
  auto* eval_sub = app.add_subcommand("eval", "Score accuracy and latency on held-out pairs");
  eval_sub->add_option("--checkpoint", ev.checkpoint);
  eval_sub->add_option("--a", ev.a, "Anchor embeddings")->required();
  eval_sub->add_option("--b", ev.b, "Candidate embeddings")->required();
  eval_sub->add_option("--pairs", ev.pairs, "Pair dataset (JSON lines)")->required();
  eval_sub->add_option("--holdout", ev.holdout, "Anchors held out from training");
  eval_sub->add_option("--baseline", ev.baselines, "raw-embedding or bm25 (repeatable)");
  eval_sub->add_option("--texts", ev.texts, "Raw texts (JSON lines) for bm25");
  eval_sub->add_option("--metric", ev.metric, "euclidean or cosine");
  eval_sub->add_option("--averaging", ev.averaging, "weighted or macro");
  eval_sub->add_option("--warmup", ev.warmup);
  eval_sub->add_option("--repetitions", ev.repetitions);
  eval_sub->add_option("--out", ev.out, "Report document path");

  QueryArgs rq;
  auto* retrieve_sub = app.add_subcommand("retrieve", "Top-k retrieval, one JSON line per hit");
  add_query_options(retrieve_sub, rq);
  retrieve_sub->add_option("--threads", rq.threads, "Worker threads (0 = all cores)");

  QueryArgs bq;
  auto* bench_sub = app.add_subcommand("bench", "Sequential single-query latency");
  add_query_options(bench_sub, bq);
  bench_sub->add_option("--warmup", bq.warmup);
  bench_sub->add_option("--repetitions", bq.repetitions);

  try {
    auto args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }

  try {
    if (*gen_cmd) return gen_synth(gen, out, err);
    if (*train_sub) return train_cmd(tr, out, err);
    if (*eval_sub) return eval_cmd(ev, out, err);
    if (*retrieve_sub) return retrieve_cmd(rq, out, err);
    if (*bench_sub) return bench_cmd(bq, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace xmodal::cli
