#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lgre/tensor.hpp"

namespace lgre {

struct AdamOptions {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

/// Bias-corrected Adam over a fixed list of named parameters.
class Adam {
 public:
  Adam(std::vector<std::pair<std::string, Tensor>> params, AdamOptions options = {});

  /// Applies one update from the accumulated gradients, then clears them.
  void step();
  void zero_grad();

  const AdamState& state() const { return state_; }
  const AdamOptions& options() const { return options_; }
  const std::vector<std::pair<std::string, Tensor>>& params() const { return params_; }

 private:
  std::vector<std::pair<std::string, Tensor>> params_;
  AdamOptions options_;
  AdamState state_;
};

}  // namespace lgre
