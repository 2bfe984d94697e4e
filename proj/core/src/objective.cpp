#include "lgre/objective.hpp"

#include <cmath>
#include <iostream>
#include <numeric>

#include "lgre/errors.hpp"
#include "lgre/ops.hpp"

namespace lgre {

NegativeWeighting parse_negative_weighting(std::string_view text) {
  if (text == "mean") return NegativeWeighting::mean;
  if (text == "literal") return NegativeWeighting::literal;
  throw ConfigError("neg_weighting must be mean or literal, got '" + std::string(text) + "'");
}

const char* to_string(NegativeWeighting w) { return w == NegativeWeighting::mean ? "mean" : "literal"; }

TemporalMode parse_temporal_mode(std::string_view text) {
  if (text == "smooth") return TemporalMode::smooth;
  if (text == "literal") return TemporalMode::literal;
  throw ConfigError("temporal_mode must be smooth or literal, got '" + std::string(text) + "'");
}

const char* to_string(TemporalMode mode) { return mode == TemporalMode::smooth ? "smooth" : "literal"; }

Tensor main_loss(const Tensor& probs, std::span<const Index> gold, std::span<const Index> negatives,
                 NegativeWeighting weighting) {
  if (probs.rank() != 2) throw DimensionError("main_loss: probabilities must be [B x N]");
  const std::size_t batch = probs.dim(0);
  if (gold.size() != batch || batch == 0 || negatives.size() % batch != 0) {
    throw DimensionError("main_loss: " + std::to_string(gold.size()) + " gold and " +
                         std::to_string(negatives.size()) + " negatives for " + std::to_string(batch) + " queries");
  }
  const std::size_t n = negatives.size() / batch;
  const double eps = kProbabilityEpsilon;

  // -log p(gold), summed over the batch.
  const Tensor gold_p = clamp(gather_cols(probs, gold, 1), eps, 1.0 - eps);
  Tensor loss = scale(sum(log(gold_p)), -1.0);
  if (n > 0) {
    const Tensor neg_p = clamp(gather_cols(probs, negatives, n), eps, 1.0 - eps);
    const Tensor neg_sum = sum(log(add_scalar(scale(neg_p, -1.0), 1.0)));
    const double factor = weighting == NegativeWeighting::mean ? 1.0 / static_cast<double>(n) : static_cast<double>(n);
    loss = sub(loss, scale(neg_sum, factor));
  }
  loss = scale(loss, 1.0 / static_cast<double>(batch));
  if (!std::isfinite(loss.item())) {
    throw DivergenceError("main loss is not finite (batch of " + std::to_string(batch) + " queries)");
  }
  return loss;
}

Tensor temporal_loss(const Tensor& time_table, TemporalMode mode) {
  if (time_table.rank() != 2) throw DimensionError("temporal_loss: expected [T x d] time table");
  const std::size_t count = time_table.dim(0);
  if (count < 2) {
    std::cerr << "warning: temporal loss needs at least two timestamps; returning 0\n";
    return Tensor::scalar(0.0);
  }
  std::vector<Index> later(count - 1), earlier(count - 1);
  std::iota(earlier.begin(), earlier.end(), 0);
  std::iota(later.begin(), later.end(), 1);
  const Tensor next = gather_rows(time_table, later);
  const Tensor prev = gather_rows(time_table, earlier);
  const Tensor per_pair = mode == TemporalMode::smooth ? square(sub(next, prev)) : mul(next, prev);
  const Tensor terms = mode == TemporalMode::smooth ? per_pair : abs(row_sum(per_pair));
  return scale(sum(terms), 1.0 / static_cast<double>(count - 1));
}

LossBreakdown combine(double main, double temporal, double alpha) {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative, got " + std::to_string(alpha));
  return {main, temporal, main + alpha * temporal, alpha};
}

Tensor combine(const Tensor& main, const Tensor& temporal, double alpha) {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative, got " + std::to_string(alpha));
  if (alpha == 0.0) return main;
  return add(main, scale(temporal, alpha));
}

}  // namespace lgre
