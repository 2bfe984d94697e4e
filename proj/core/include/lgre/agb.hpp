#pragma once

#include "lgre/grl.hpp"
#include "lgre/tensor.hpp"

namespace lgre {

/// Per-query granularity weights [B x 3] (columns: year, month, day):
/// softmax([W_y y, W_m m, W_d d]).
Tensor adaptive_weights(const ModelParams& params, const TimeEncoding& time);

/// Constant (1/3, 1/3, 1/3) rows used by the no-AGB ablation.
Tensor uniform_weights(std::size_t batch);

/// ReLU(theta_y x_y + theta_m x_m + theta_d x_d), [B x d].
Tensor fuse(const GranularityEmbeddings& embeddings, const Tensor& weights);

/// Raw scores x_output E^T, [B x |E|]. Ranking uses these directly.
Tensor score_logits(const Tensor& x_output, const Tensor& entity);

/// sigmoid(x_output E^T), [B x |E|].
Tensor score_all(const Tensor& x_output, const Tensor& entity);

}  // namespace lgre
