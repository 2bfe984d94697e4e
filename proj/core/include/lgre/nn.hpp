#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lgre/tensor.hpp"

namespace lgre {

/// Uniform Xavier/Glorot initialization on +-sqrt(6 / (fan_in + fan_out)).
/// For 2-D shapes [rows x cols], fan_in = cols and fan_out = rows; higher
/// ranks multiply both by the receptive field (product of trailing dims).
Tensor xavier_init(const Shape& shape, std::uint64_t seed, bool requires_grad = true);
double xavier_bound(const Shape& shape);

/// Weights of a gated recurrent unit with input and hidden width d.
/// Input maps W_* and recurrent maps U_* are [d x d]; biases are [d].
struct GruWeights {
  Tensor w_z, u_z, b_z;
  Tensor w_r, u_r, b_r;
  Tensor w_h, u_h, b_h;

  static GruWeights zeros(std::size_t dim, bool requires_grad = true);
  static GruWeights xavier(std::size_t dim, std::uint64_t seed);
  std::vector<std::pair<std::string, Tensor>> named() const;
};

/// One GRU step on a batch: x, h are [B x d].
///   z = sigmoid(W_z x + U_z h + b_z)
///   r = sigmoid(W_r x + U_r h + b_r)
///   c = tanh(W_h x + U_h (r * h) + b_h)
///   h' = (1 - z) * h + z * c
Tensor gru_cell(const Tensor& x, const Tensor& h, const GruWeights& weights);

/// Runs the cell over a sequence starting from h0 and returns every hidden state.
std::vector<Tensor> gru_sequence(const std::vector<Tensor>& inputs, const Tensor& h0,
                                 const GruWeights& weights);

}  // namespace lgre
