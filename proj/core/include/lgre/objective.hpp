#pragma once

#include <span>
#include <string_view>

#include "lgre/data.hpp"
#include "lgre/tensor.hpp"

namespace lgre {

/// Probabilities are clamped to [eps, 1 - eps] before taking logs.
inline constexpr double kProbabilityEpsilon = 1e-7;

/// How the negative term is weighted per query.
///  mean:    -log p(gold) - (1/n) sum log(1 - p(neg))
///  literal: -log p(gold) - n * sum log(1 - p(neg))
enum class NegativeWeighting { mean, literal };
NegativeWeighting parse_negative_weighting(std::string_view text);
const char* to_string(NegativeWeighting w);

/// Batch mean of the per-query binary cross entropy. probs is [B x N];
/// gold holds B column indices and negatives holds B * n column indices.
Tensor main_loss(const Tensor& probs, std::span<const Index> gold, std::span<const Index> negatives,
                 NegativeWeighting weighting = NegativeWeighting::mean);

/// smooth:  mean over i of ||t_{i+1} - t_i||^2
/// literal: mean over i of |t_{i+1} . t_i|
enum class TemporalMode { smooth, literal };
TemporalMode parse_temporal_mode(std::string_view text);
const char* to_string(TemporalMode mode);

/// time_table rows are composed time embeddings in chronological order.
/// Fewer than two rows yields 0 and a warning on stderr.
Tensor temporal_loss(const Tensor& time_table, TemporalMode mode = TemporalMode::smooth);

struct LossBreakdown {
  double main = 0.0;
  double temporal = 0.0;
  double total = 0.0;
  double alpha = 0.0;
};

/// total = main + alpha * temporal. Negative alpha is a configuration error.
LossBreakdown combine(double main, double temporal, double alpha);
Tensor combine(const Tensor& main, const Tensor& temporal, double alpha);

}  // namespace lgre
