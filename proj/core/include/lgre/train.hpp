#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lgre/config.hpp"
#include "lgre/data.hpp"
#include "lgre/errors.hpp"
#include "lgre/filter_index.hpp"
#include "lgre/grl.hpp"
#include "lgre/objective.hpp"
#include "lgre/optim.hpp"

namespace lgre {

struct EpochRecord {
  std::size_t epoch = 0;
  double main = 0.0;
  double temporal = 0.0;
  double total = 0.0;
  std::optional<double> val_mrr;
};

/// {"epoch":..,"main":..,"temporal":..,"total":..,"val_mrr":..|null}
std::string epoch_json(const EpochRecord& record);

/// Raised when a loss turns non-finite. Carries the parameters as of the last
/// completed epoch so the caller can persist them.
class TrainingDiverged : public DivergenceError {
 public:
  TrainingDiverged(const std::string& message, ModelParams last_good)
      : DivergenceError(message), last_good_(std::move(last_good)) {}
  const ModelParams& last_good() const { return last_good_; }

 private:
  ModelParams last_good_;
};

/// Owns parameters, optimizer and random stream for one run and performs
/// single optimization steps. Per step: forward the batch, score the gold
/// object plus n sampled negatives, add the temporal loss once, backpropagate
/// and apply Adam.
class Trainer {
 public:
  Trainer(const TrainConfig& config, const Dataset& dataset);
  Trainer(const TrainConfig& config, const Dataset& dataset, ModelParams initial);

  /// One optimization step on (already inverse-augmented) queries.
  LossBreakdown step(std::span<const Quadruple> batch);
  /// Loss of a batch without updating anything (dropout still active).
  LossBreakdown loss(std::span<const Quadruple> batch);

  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }
  Rng& rng() { return rng_; }
  const TrainConfig& config() const { return config_; }
  std::size_t negatives_per_query() const { return negatives_; }

 private:
  Tensor forward_loss(std::span<const Quadruple> batch, LossBreakdown& breakdown);

  TrainConfig config_;
  const Dataset& dataset_;
  ModelParams params_;
  Adam optimizer_;
  Rng rng_;
  std::size_t negatives_;
};

struct TrainResult {
  ModelParams best;  // best validation MRR, or the final parameters without validation
  ModelParams last;
  std::vector<EpochRecord> log;
  std::optional<double> best_val_mrr;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Full training run: shuffled mini-batches per epoch, validation every
/// eval_every epochs with early stopping after `patience` epochs without
/// improvement.
TrainResult train(const TrainConfig& config, const Dataset& dataset, const TrainHooks& hooks = {});

/// Mean Euclidean distance between chronologically adjacent composed time
/// embeddings of a parameter set.
double mean_adjacent_time_distance(const ModelParams& params, const Dataset& dataset);

}  // namespace lgre
