#include "xmodal/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "xmodal/errors.hpp"

namespace xmodal {

namespace {

Eigen::VectorXd to_vector(std::span<const float> row, bool normalize) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(row.size()));
  for (std::size_t k = 0; k < row.size(); ++k) v[static_cast<Eigen::Index>(k)] = row[k];
  if (normalize) {
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
  }
  return v;
}

void zero(ParamGrads& grads) {
  for (auto block : grads.blocks()) std::fill(block.begin(), block.end(), 0.0);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be at least 1");
  if (batch_size < 2) throw ValidationError("batch_size must be at least 2 (a singleton batch has no negatives)");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate must be finite and non-negative");
  }
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw ValidationError("margin must be finite and non-negative");
  if (hidden_dim == 0) throw ValidationError("hidden_dim must be positive");
}

std::string optimizer_name(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ValidationError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

std::vector<std::vector<std::size_t>> make_batches(const std::vector<PairExample>& examples, std::size_t batch_size,
                                                   std::vector<std::size_t> order) {
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
    if (batch.size() < batch_size) {
      const auto positives = std::count_if(batch.begin(), batch.end(),
                                           [&](std::size_t i) { return examples[i].label == 1; });
      if (positives < 2) break;
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

TrainResult train(const EmbeddingSet& anchors, const EmbeddingSet& candidates, const PairDataset& data,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (anchors.dim() != candidates.dim()) {
    throw ValidationError("modality dims differ: " + std::to_string(anchors.dim()) + " vs " +
                          std::to_string(candidates.dim()));
  }
  data.check_ids(anchors, candidates);
  if (data.positive_count() == 0) throw ValidationError("training data has no positive examples");

  const auto started = std::chrono::steady_clock::now();
  const std::size_t d = anchors.dim();
  const auto& examples = data.examples;

  std::vector<Eigen::VectorXd> anchor_rows;
  std::vector<Eigen::VectorXd> candidate_rows;
  anchor_rows.reserve(examples.size());
  candidate_rows.reserve(examples.size());
  for (const auto& ex : examples) {
    anchor_rows.push_back(to_vector(anchors.row(anchors.index_of(ex.anchor_id)), cfg.normalize_inputs));
    candidate_rows.push_back(to_vector(candidates.row(candidates.index_of(ex.candidate_id)), cfg.normalize_inputs));
  }

  TrainResult result{init_params(d, cfg.hidden_dim, cfg.seed), {}};
  auto& params = result.params;
  ProjectionOptimizer optimizer(cfg.optimizer, params, cfg.learning_rate, cfg.adam);
  auto grads = ParamGrads::zeros(d, cfg.hidden_dim);

  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<ForwardTrace> traces;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng);
    const auto batches = make_batches(examples, cfg.batch_size, order);

    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& batch = batches[b];
      const auto n = static_cast<Eigen::Index>(batch.size());

      LossBatch loss_batch{Eigen::MatrixXd(n, static_cast<Eigen::Index>(d)),
                           Eigen::MatrixXd(n, static_cast<Eigen::Index>(d)), std::vector<int>(batch.size()),
                           cfg.margin};
      traces.clear();
      for (Eigen::Index r = 0; r < n; ++r) {
        const std::size_t ex = batch[static_cast<std::size_t>(r)];
        traces.push_back(forward(params, candidate_rows[ex]));
        if (!traces.back().output.allFinite()) {
          throw TrainingError("projection diverged (non-finite output) at epoch " + std::to_string(epoch + 1) +
                              ", batch " + std::to_string(b + 1));
        }
        loss_batch.anchors.row(r) = anchor_rows[ex].transpose();
        loss_batch.candidates.row(r) = traces.back().output.transpose();
        loss_batch.labels[static_cast<std::size_t>(r)] = examples[ex].label;
      }

      const LossResult loss = npairs_loss(loss_batch);
      if (!std::isfinite(loss.value)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                            std::to_string(b + 1));
      }
      loss_sum += loss.value;
      // A batch without positive anchors carries no signal; no optimizer step.
      if (loss.count == 0) continue;

      zero(grads);
      for (Eigen::Index r = 0; r < n; ++r) {
        accumulate_backward(params, traces[static_cast<std::size_t>(r)], loss.grad_candidates.row(r).transpose(),
                            grads);
      }
      optimizer.step(params, grads);
    }

    const double mean = batches.empty() ? 0.0 : loss_sum / static_cast<double>(batches.size());
    if (!std::isfinite(mean)) {
      throw TrainingError("non-finite mean loss at epoch " + std::to_string(epoch + 1));
    }
    result.report.epoch_losses.push_back(mean);
  }

  try {
    params.validate();
  } catch (const ValidationError& e) {
    throw TrainingError(std::string("training produced invalid parameters: ") + e.what());
  }
  result.report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

void write_train_report(const TrainReport& report, const TrainConfig& cfg, const std::filesystem::path& path) {
  nlohmann::ordered_json config;
  config["epochs"] = cfg.epochs;
  config["batch_size"] = cfg.batch_size;
  config["learning_rate"] = cfg.learning_rate;
  config["margin"] = cfg.margin;
  config["seed"] = cfg.seed;
  config["optimizer"] = optimizer_name(cfg.optimizer);
  config["shuffle"] = cfg.shuffle;
  config["hidden_dim"] = cfg.hidden_dim;
  config["normalize_inputs"] = cfg.normalize_inputs;

  nlohmann::ordered_json doc;
  doc["epoch_losses"] = report.epoch_losses;
  doc["wall_clock_seconds"] = report.wall_clock_seconds;
  doc["checkpoint_path"] = report.checkpoint_path;
  doc["config"] = config;

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out.flush()) throw IoError("write failed on " + path.string());
}

}  // namespace xmodal
