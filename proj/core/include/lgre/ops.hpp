#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lgre/rng.hpp"
#include "lgre/tensor.hpp"

namespace lgre {

// Elementwise arithmetic. Shapes must match exactly (no broadcasting).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);

/// x[m x n] + bias[n] added to every row.
Tensor add_row_bias(const Tensor& x, const Tensor& bias);
/// x[m x n] with row i multiplied by column[i]; column has m elements.
Tensor scale_rows(const Tensor& x, const Tensor& column);

// Linear algebra (2-D only).
Tensor matmul(const Tensor& a, const Tensor& b);     // [m x k] * [k x n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // [m x k] * [n x k]^T
Tensor transpose(const Tensor& a);
/// x[m x in] * weight[out x in]^T + bias[out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Shape manipulation.
Tensor reshape(const Tensor& a, Shape shape);
/// Column-wise concatenation of 2-D tensors with equal row count.
Tensor concat_cols(const std::vector<Tensor>& parts);
/// Columns [begin, end) of a 2-D tensor.
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
/// Rows of table[N x ...] selected by index; output [indices.size() x ...].
Tensor gather_rows(const Tensor& table, std::span<const std::int32_t> indices);
/// out[b, j] = a[b, index[b * per_row + j]] for a[B x N].
Tensor gather_cols(const Tensor& a, std::span<const std::int32_t> index, std::size_t per_row);
/// out[b, j] = dot(x[b], table[index[b * per_row + j]]) for x[B x d], table[N x d].
Tensor gather_dot(const Tensor& x, const Tensor& table, std::span<const std::int32_t> index,
                  std::size_t per_row);

// Activations.
Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope = 0.01);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
/// Softmax over a 1-D tensor, or over each row of a 2-D tensor.
Tensor softmax(const Tensor& x);

// Pointwise math used by losses.
Tensor log(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor square(const Tensor& x);
/// Clamp into [lo, hi]; the gradient is zero where the input was clamped.
Tensor clamp(const Tensor& x, double lo, double hi);

// Reductions.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Per-row sum of a 2-D tensor, output [m].
Tensor row_sum(const Tensor& x);

/// Inverted dropout. Identity when !training or rate == 0.
/// While alive, records on this thread the smallest distance between any
/// input of relu, leaky_relu, abs or clamp and that op's non-differentiable
/// point. Inputs exactly at the kink are not counted.
class KinkProbe {
 public:
  KinkProbe();
  ~KinkProbe();
  KinkProbe(const KinkProbe&) = delete;
  KinkProbe& operator=(const KinkProbe&) = delete;

  double margin() const { return margin_; }
  void observe(double distance) { margin_ = distance < margin_ ? distance : margin_; }

 private:
  KinkProbe* previous_;
  double margin_ = 1e300;
};

Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng);

/// Cross-correlation, stride 1, zero same-padding of (k-1)/2, no bias.
/// input [C_in x H x W], kernel [C_out x C_in x k x k] -> [C_out x H x W].
Tensor conv2d(const Tensor& input, const Tensor& kernel);
/// Batched conv2d where every sample has its own kernel.
/// input [B x C_in x H x W], kernels [B x C_out x C_in x k x k] -> [B x C_out x H x W].
Tensor conv2d_per_sample(const Tensor& input, const Tensor& kernels);

}  // namespace lgre
