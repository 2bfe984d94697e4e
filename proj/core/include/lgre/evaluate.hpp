#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lgre/data.hpp"
#include "lgre/filter_index.hpp"
#include "lgre/grl.hpp"
#include "lgre/metrics.hpp"
#include "lgre/model.hpp"

namespace lgre {

/// Scores every entity for each query; returns a row-major [B x |E|] matrix.
/// Must be callable concurrently from several threads.
using BatchScorer = std::function<std::vector<double>(std::span<const Quadruple>)>;

struct EvalOptions {
  FilterMode filter = FilterMode::time_aware;
  std::size_t threads = 1;
  std::size_t batch = 256;
};

/// Ranks every query with the scorer. Query batches are sharded across
/// threads; results are merged in query order so the report is identical for
/// any thread count.
RankReport rank_queries(std::span<const Quadruple> queries, std::size_t num_entities, const FilterIndex& filters,
                        const BatchScorer& scorer, const EvalOptions& options, std::string split_name = {});

/// Scorer backed by the model in evaluation mode (dropout off, no graph).
BatchScorer model_scorer(const ModelParams& params, const Dataset& dataset, const ModelOptions& options);

/// Evaluates both directions of every fact in the split.
RankReport evaluate(const ModelParams& params, const Dataset& dataset, const FilterIndex& filters,
                    std::string_view split, const ModelOptions& model_options, const EvalOptions& options);

/// Granularity weights for both directions of every fact in a split.
struct WeightRow {
  Quadruple query;
  double year = 0.0;
  double month = 0.0;
  double day = 0.0;
};

std::vector<WeightRow> granularity_weights(const ModelParams& params, const Dataset& dataset, std::string_view split,
                                           const ModelOptions& options);

/// CSV with columns subject, relation, timestamp, direction, theta_y,
/// theta_m, theta_d and a trailing "mean" row of column averages.
std::string weights_csv(const std::vector<WeightRow>& rows, const Dataset& dataset);

}  // namespace lgre
