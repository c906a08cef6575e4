#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "semlink/corpus.hpp"
#include "semlink/embedding.hpp"
#include "semlink/model.hpp"

namespace semlink {

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 1e-3;
  double lr_decay_factor = 0.8;
  int lr_decay_every = 50;
  double lambda_triplet = 0.0;
  double lambda_bce = 1.0;
  double triplet_margin = 1.0;
  int batch_size = 64;
  std::uint64_t seed = 42;
  double dropout_rate = 0.1;
  double threshold = 0.7;  // for validation F1
  ModelShape shape;

  /// Throws std::invalid_argument on any violated invariant.
  void validate() const;
  nlohmann::json fingerprint() const;
};

/// lr * factor^floor((epoch - 1) / every), epochs counted from 1.
double learning_rate_at(const TrainConfig& config, int epoch);

struct EpochRecord {
  int epoch = 0;
  double learning_rate = 0.0;
  double mean_loss = 0.0;
  std::size_t triplets = 0;
  std::optional<double> validation_f1;  // absent with no validation data or undefined F1
};

struct TrainResult {
  SiameseModel model;
  std::vector<EpochRecord> history;
  std::size_t positives = 0;
  std::size_t skipped_no_negative = 0;
};

/// Optional per-epoch observer, called after each epoch is recorded.
using EpochObserver = std::function<void(const EpochRecord&)>;

/// Positives are the train pairs not labeled Negative. Each epoch shuffles
/// them, pairs each with a fresh negative page from another source domain,
/// picks one source and one target feature text per side, and runs
/// mini-batch Adam on the total loss. Throws EmptyTrainSet.
TrainResult train(const CorpusSplit& corpus, EmbeddingProvider& provider, const TrainConfig& config,
                  EmbeddingCache* cache = nullptr, const EpochObserver& observer = {});

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);
void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

}  // namespace semlink
