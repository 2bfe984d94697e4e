#include "lgre/optim.hpp"

#include <cmath>
#include <unordered_set>

#include "lgre/errors.hpp"

namespace lgre {

Adam::Adam(std::vector<std::pair<std::string, Tensor>> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  std::unordered_set<const detail::Node*> seen;
  for (const auto& [name, tensor] : params_) {
    if (!tensor.defined() || !tensor.requires_grad()) {
      throw IntegrityError("parameter '" + name + "' is not trainable");
    }
    if (!seen.insert(tensor.node().get()).second) {
      throw IntegrityError("parameter '" + name + "' registered twice");
    }
    state_.first_moment.emplace_back(tensor.numel(), 0.0);
    state_.second_moment.emplace_back(tensor.numel(), 0.0);
  }
}

void Adam::step() {
  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const double correction1 = 1.0 - std::pow(options_.beta1, t);
  const double correction2 = 1.0 - std::pow(options_.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& p = params_[k].second;
    if (!p.has_grad()) throw IntegrityError("parameter '" + params_[k].first + "' has no gradient");
    auto values = p.mutable_values();
    auto grad = p.mutable_grad();
    auto& m = state_.first_moment[k];
    auto& v = state_.second_moment[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g;
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
    }
    if (precision() == Precision::f32) {
      for (double& x : values) x = static_cast<double>(static_cast<float>(x));
    }
  }
  zero_grad();
}

void Adam::zero_grad() {
  for (auto& [name, p] : params_) p.zero_grad();
}

}  // namespace lgre
