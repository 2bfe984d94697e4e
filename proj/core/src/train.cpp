#include "lgre/train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>

#include "json.hpp"
#include "lgre/agb.hpp"
#include "lgre/checkpoint.hpp"
#include "lgre/errors.hpp"
#include "lgre/evaluate.hpp"
#include "lgre/model.hpp"
#include "lgre/ops.hpp"

namespace lgre {

namespace {

class PrecisionScope {
 public:
  explicit PrecisionScope(Precision p) : previous_(precision()) { set_precision(p); }
  ~PrecisionScope() { set_precision(previous_); }
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  Precision previous_;
};

constexpr std::uint64_t kTrainStreamSalt = 0x5bd1e9955bd1e995ULL;

}  // namespace

std::string epoch_json(const EpochRecord& r) {
  nlohmann::json j;
  j["epoch"] = r.epoch;
  j["main"] = r.main;
  j["temporal"] = r.temporal;
  j["total"] = r.total;
  j["val_mrr"] = r.val_mrr ? nlohmann::json(*r.val_mrr) : nlohmann::json(nullptr);
  return j.dump();
}

Trainer::Trainer(const TrainConfig& config, const Dataset& dataset)
    : Trainer(config, dataset,
              ModelParams::init(dims_for(dataset, config.dim, config.channels, config.kernel), config.seed)) {}

Trainer::Trainer(const TrainConfig& config, const Dataset& dataset, ModelParams initial)
    : config_(config),
      dataset_(dataset),
      params_(std::move(initial)),
      optimizer_(params_.named(), AdamOptions{config.lr, 0.9, 0.999, 1e-8}),
      rng_(config.seed ^ kTrainStreamSalt),
      negatives_(std::min(config.negatives, dataset.num_entities() - 1)) {
  config_.validate();
  check_compatible(params_.dims, dataset);
  if (negatives_ < config.negatives) {
    std::cerr << "warning: negatives=" << config.negatives << " exceeds |E| - 1; using all " << negatives_
              << " non-gold entities\n";
  }
}

Tensor Trainer::forward_loss(std::span<const Quadruple> batch, LossBreakdown& breakdown) {
  const double alpha = config_.effective_alpha();
  const bool with_temporal = alpha > 0.0;
  const ModelOptions options = config_.model_options();

  // The temporal loss needs every timestamp; otherwise only the batch's own.
  QueryBatch queries = make_batch(batch);
  std::vector<TimeTriple> times;
  if (with_temporal) {
    times = dataset_.time_table;
  } else {
    std::map<Index, Index> slot_of;
    for (Index& slot : queries.slots) {
      auto [it, inserted] = slot_of.emplace(slot, static_cast<Index>(times.size()));
      if (inserted) times.push_back(dataset_.time_table[static_cast<std::size_t>(slot)]);
      slot = it->second;
    }
  }
  const TimeTables tables = compute_time_tables(params_, times, options);
  const DropoutContext drop{config_.dropout, true, &rng_};
  const QueryOutput out = forward_queries(params_, tables, queries, options, drop);

  const std::size_t per_row = 1 + negatives_;
  std::vector<Index> candidates;
  candidates.reserve(batch.size() * per_row);
  for (const Quadruple& q : batch) {
    candidates.push_back(q.o);
    if (negatives_ > 0) {
      const auto negs = sample_negatives(q, negatives_, dataset_.num_entities(), rng_);
      candidates.insert(candidates.end(), negs.begin(), negs.end());
    }
  }
  const Tensor probs = sigmoid(gather_dot(out.x_output, params_.entity, candidates, per_row));

  std::vector<Index> gold(batch.size(), 0);
  std::vector<Index> negative_cols;
  negative_cols.reserve(batch.size() * negatives_);
  for (std::size_t b = 0; b < batch.size(); ++b)
    for (std::size_t j = 1; j <= negatives_; ++j) negative_cols.push_back(static_cast<Index>(j));

  const Tensor main = main_loss(probs, gold, negative_cols, config_.neg_weighting);
  const Tensor temporal = with_temporal ? temporal_loss(tables.time, config_.temporal_mode) : Tensor::scalar(0.0);
  const Tensor total = combine(main, temporal, alpha);
  breakdown = combine(main.item(), temporal.item(), alpha);
  if (!std::isfinite(breakdown.total)) {
    throw DivergenceError("non-finite loss (main " + std::to_string(breakdown.main) + ", temporal " +
                          std::to_string(breakdown.temporal) + ")");
  }
  return total;
}

LossBreakdown Trainer::step(std::span<const Quadruple> batch) {
  LossBreakdown breakdown;
  const Tensor total = forward_loss(batch, breakdown);
  total.backward();
  optimizer_.step();
  return breakdown;
}

LossBreakdown Trainer::loss(std::span<const Quadruple> batch) {
  LossBreakdown breakdown;
  NoGradGuard no_grad;
  forward_loss(batch, breakdown);
  return breakdown;
}

TrainResult train(const TrainConfig& config, const Dataset& dataset, const TrainHooks& hooks) {
  config.validate();
  PrecisionScope precision_scope(config.precision);
  Trainer trainer(config, dataset);
  std::vector<Quadruple> queries = add_inverse(dataset.train, dataset.num_relations());
  const FilterIndex filters = build_filter_index(dataset);
  const bool validate = config.eval_every > 0 && !dataset.valid.empty();

  TrainResult result;
  result.best = trainer.params().clone();
  ModelParams last_good = trainer.params().clone();
  std::size_t epochs_without_gain = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng& rng = trainer.rng();
    for (std::size_t i = queries.size(); i > 1; --i) std::swap(queries[i - 1], queries[rng.uniform_int(i)]);

    EpochRecord record;
    record.epoch = epoch;
    std::size_t steps = 0;
    for (std::size_t begin = 0; begin < queries.size(); begin += config.batch_size) {
      const std::size_t end = std::min(queries.size(), begin + config.batch_size);
      LossBreakdown loss;
      try {
        loss = trainer.step(std::span<const Quadruple>(queries).subspan(begin, end - begin));
      } catch (const DivergenceError& e) {
        throw TrainingDiverged("epoch " + std::to_string(epoch) + ", batch at " + std::to_string(begin) + ": " +
                                   e.what(),
                               std::move(last_good));
      }
      record.main += loss.main;
      record.temporal += loss.temporal;
      record.total += loss.total;
      ++steps;
    }
    if (steps > 0) {
      record.main /= static_cast<double>(steps);
      record.temporal /= static_cast<double>(steps);
      record.total /= static_cast<double>(steps);
    }

    const bool last_epoch = epoch + 1 == config.epochs;
    if (validate && ((epoch + 1) % config.eval_every == 0 || last_epoch)) {
      EvalOptions eval{config.eval_filter, config.eval_threads, config.eval_batch};
      const RankReport report =
          evaluate(trainer.params(), dataset, filters, "valid", config.model_options(), eval);
      record.val_mrr = report.overall.mrr;
      if (!result.best_val_mrr || report.overall.mrr > *result.best_val_mrr) {
        result.best_val_mrr = report.overall.mrr;
        result.best_epoch = epoch;
        result.best = trainer.params().clone();
        epochs_without_gain = 0;
      } else {
        epochs_without_gain += config.eval_every;
      }
    }
    result.log.push_back(record);
    if (hooks.on_epoch) hooks.on_epoch(record);
    last_good = trainer.params().clone();
    if (validate && config.patience > 0 && epochs_without_gain >= config.patience) {
      result.stopped_early = true;
      break;
    }
  }

  result.last = trainer.params().clone();
  if (!result.best_val_mrr) {
    result.best = result.last;
    result.best_epoch = result.log.empty() ? 0 : result.log.back().epoch;
  }
  return result;
}

double mean_adjacent_time_distance(const ModelParams& params, const Dataset& dataset) {
  NoGradGuard no_grad;
  const Tensor t = compose_time(params, encode_time(params, dataset.time_table));
  const std::size_t n = t.dim(0), d = t.dim(1);
  if (n < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = t[(i + 1) * d + j] - t[i * d + j];
      sq += diff * diff;
    }
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(n - 1);
}

}  // namespace lgre
