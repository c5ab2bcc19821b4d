#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xmodal/embedding_store.hpp"
#include "xmodal/npairs_loss.hpp"
#include "xmodal/optimizer.hpp"
#include "xmodal/projection.hpp"

namespace xmodal {

inline constexpr std::uint64_t kDefaultSeed = 20240917;

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double margin = kDefaultMargin;
  std::uint64_t seed = kDefaultSeed;
  OptimizerKind optimizer = OptimizerKind::adam;
  AdamHyper adam{};
  bool shuffle = true;
  std::size_t hidden_dim = kDefaultHiddenDim;
  /// L2-normalize both modalities before use. Off by default.
  bool normalize_inputs = false;

  /// Throws ValidationError for epochs < 1, batch_size < 2, negative or
  /// non-finite learning rate or margin, or a zero hidden size.
  void validate() const;
};

struct TrainReport {
  std::vector<double> epoch_losses;
  double wall_clock_seconds = 0.0;
  std::string checkpoint_path;
};

struct TrainResult {
  ProjectionParams params;
  TrainReport report;
};

/// Learns a projection from modality B into modality A with the N-pairs loss.
///
/// Each epoch shuffles the examples (seeded), cuts them into batches of
/// `batch_size`, projects every candidate, and takes one optimizer step on the
/// batch loss. Anchor embeddings are constants. A trailing partial batch with
/// fewer than two positives is dropped. Identical inputs and config give
/// bit-identical parameters.
TrainResult train(const EmbeddingSet& anchors, const EmbeddingSet& candidates, const PairDataset& data,
                  const TrainConfig& cfg);

/// Batches of example indices for one epoch, after the shuffle and the
/// trailing-batch rule. Exposed for tests.
std::vector<std::vector<std::size_t>> make_batches(const std::vector<PairExample>& examples, std::size_t batch_size,
                                                   std::vector<std::size_t> order);

std::string optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);

void write_train_report(const TrainReport& report, const TrainConfig& cfg, const std::filesystem::path& path);

}  // namespace xmodal
