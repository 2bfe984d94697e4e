#include "lgre/agb.hpp"

#include "lgre/errors.hpp"
#include "lgre/ops.hpp"

namespace lgre {

Tensor adaptive_weights(const ModelParams& params, const TimeEncoding& time) {
  const Tensor logits = concat_cols(
      {matmul_nt(time.year, params.gate_year), matmul_nt(time.month, params.gate_month),
       matmul_nt(time.day, params.gate_day)});
  return softmax(logits);
}

Tensor uniform_weights(std::size_t batch) { return Tensor::full({batch, 3}, 1.0 / 3.0); }

Tensor fuse(const GranularityEmbeddings& x, const Tensor& weights) {
  if (weights.rank() != 2 || weights.dim(1) != 3 || weights.dim(0) != x.year.dim(0)) {
    throw DimensionError("fuse: weights " + shape_string(weights.shape()) + " vs embeddings " +
                         shape_string(x.year.shape()));
  }
  const Tensor mixed = add(add(scale_rows(x.year, slice_cols(weights, 0, 1)),
                               scale_rows(x.month, slice_cols(weights, 1, 2))),
                           scale_rows(x.day, slice_cols(weights, 2, 3)));
  return relu(mixed);
}

Tensor score_logits(const Tensor& x_output, const Tensor& entity) { return matmul_nt(x_output, entity); }

Tensor score_all(const Tensor& x_output, const Tensor& entity) { return sigmoid(score_logits(x_output, entity)); }

}  // namespace lgre
