#pragma once

#include <span>
#include <string>
#include <vector>

#include "lgre/config.hpp"
#include "lgre/data.hpp"
#include "lgre/grl.hpp"

namespace lgre {

struct BenchRow {
  std::size_t batch_size = 0;
  std::size_t steps = 0;
  double seconds_per_step = 0.0;
};

/// Wall-clock cost of training steps at several batch sizes. Per-step work is
/// expected to grow linearly in the batch size m: O(m d^2 + (lambda + |E|) m d)
/// with lambda the generated-filter size. The fitted exponent is the slope of
/// log(time) against log(m).
struct BenchReport {
  std::vector<BenchRow> rows;
  double growth_exponent = 0.0;
  std::size_t parameter_count = 0;
  ModelDims dims;
};

inline constexpr std::size_t kDefaultBenchBatches[] = {64, 128, 256, 512};

BenchReport bench(const TrainConfig& config, const Dataset& dataset,
                  std::span<const std::size_t> batch_sizes = kDefaultBenchBatches, std::size_t steps = 3);

std::string bench_text(const BenchReport& report);

}  // namespace lgre
