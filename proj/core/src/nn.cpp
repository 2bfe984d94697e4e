#include "lgre/nn.hpp"

#include <cmath>

#include "lgre/errors.hpp"
#include "lgre/ops.hpp"
#include "lgre/rng.hpp"

namespace lgre {

double xavier_bound(const Shape& shape) {
  if (shape.empty()) throw DimensionError("xavier_init needs at least one dimension");
  double fan_in = 0.0, fan_out = 0.0;
  if (shape.size() == 1) {
    fan_in = fan_out = static_cast<double>(shape[0]);
  } else {
    double receptive = 1.0;
    for (std::size_t i = 2; i < shape.size(); ++i) receptive *= static_cast<double>(shape[i]);
    fan_in = static_cast<double>(shape[1]) * receptive;
    fan_out = static_cast<double>(shape[0]) * receptive;
  }
  return std::sqrt(6.0 / (fan_in + fan_out));
}

Tensor xavier_init(const Shape& shape, std::uint64_t seed, bool requires_grad) {
  const double bound = xavier_bound(shape);
  Rng rng(seed);
  std::vector<double> values(shape_numel(shape));
  for (double& v : values) v = rng.uniform(-bound, bound);
  return Tensor::from(shape, std::move(values), requires_grad);
}

GruWeights GruWeights::zeros(std::size_t dim, bool requires_grad) {
  auto mat = [&] { return Tensor::zeros({dim, dim}, requires_grad); };
  auto vec = [&] { return Tensor::zeros({dim}, requires_grad); };
  return {mat(), mat(), vec(), mat(), mat(), vec(), mat(), mat(), vec()};
}

GruWeights GruWeights::xavier(std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  auto mat = [&] { return xavier_init({dim, dim}, rng.next()); };
  auto vec = [&] { return Tensor::zeros({dim}, true); };
  GruWeights w;
  w.w_z = mat(); w.u_z = mat(); w.b_z = vec();
  w.w_r = mat(); w.u_r = mat(); w.b_r = vec();
  w.w_h = mat(); w.u_h = mat(); w.b_h = vec();
  return w;
}

std::vector<std::pair<std::string, Tensor>> GruWeights::named() const {
  return {{"gru.w_z", w_z}, {"gru.u_z", u_z}, {"gru.b_z", b_z},
          {"gru.w_r", w_r}, {"gru.u_r", u_r}, {"gru.b_r", b_r},
          {"gru.w_h", w_h}, {"gru.u_h", u_h}, {"gru.b_h", b_h}};
}

Tensor gru_cell(const Tensor& x, const Tensor& h, const GruWeights& w) {
  if (x.shape() != h.shape()) {
    throw DimensionError("gru_cell: input " + shape_string(x.shape()) + " vs hidden " + shape_string(h.shape()));
  }
  const bool vector_input = x.rank() == 1;
  const Tensor xb = vector_input ? reshape(x, {1, x.dim(0)}) : x;
  const Tensor hb = vector_input ? reshape(h, {1, h.dim(0)}) : h;

  auto gate = [&](const Tensor& wx, const Tensor& uh, const Tensor& b, const Tensor& hidden) {
    return add(linear(xb, wx, b), matmul_nt(hidden, uh));
  };
  const Tensor z = sigmoid(gate(w.w_z, w.u_z, w.b_z, hb));
  const Tensor r = sigmoid(gate(w.w_r, w.u_r, w.b_r, hb));
  const Tensor candidate = tanh(gate(w.w_h, w.u_h, w.b_h, mul(r, hb)));
  // (1 - z) * h + z * c  ==  h + z * (c - h)
  const Tensor out = add(hb, mul(z, sub(candidate, hb)));
  return vector_input ? reshape(out, x.shape()) : out;
}

std::vector<Tensor> gru_sequence(const std::vector<Tensor>& inputs, const Tensor& h0, const GruWeights& weights) {
  std::vector<Tensor> states;
  states.reserve(inputs.size());
  Tensor h = h0;
  for (const Tensor& x : inputs) {
    h = gru_cell(x, h, weights);
    states.push_back(h);
  }
  return states;
}

}  // namespace lgre
