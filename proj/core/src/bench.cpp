#include "lgre/bench.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "lgre/errors.hpp"
#include "lgre/train.hpp"

namespace lgre {

BenchReport bench(const TrainConfig& config, const Dataset& dataset, std::span<const std::size_t> batch_sizes,
                  std::size_t steps) {
  if (dataset.train.empty()) throw ConfigError("bench needs a non-empty training split");
  BenchReport report;
  const std::vector<Quadruple> queries = add_inverse(dataset.train, dataset.num_relations());
  for (std::size_t m : batch_sizes) {
    Trainer trainer(config, dataset);
    std::vector<Quadruple> batch;
    batch.reserve(m);
    for (std::size_t i = 0; i < m; ++i) batch.push_back(queries[i % queries.size()]);
    trainer.step(batch);  // warm-up
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t s = 0; s < steps; ++s) trainer.step(batch);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.rows.push_back({m, steps, elapsed / static_cast<double>(std::max<std::size_t>(steps, 1))});
    report.parameter_count = trainer.params().parameter_count();
    report.dims = trainer.params().dims;
  }

  if (report.rows.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(report.rows.size());
    for (const BenchRow& r : report.rows) {
      const double x = std::log(static_cast<double>(r.batch_size));
      const double y = std::log(r.seconds_per_step);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    report.growth_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return report;
}

std::string bench_text(const BenchReport& report) {
  std::ostringstream out;
  out << "parameters " << report.parameter_count << " (d=" << report.dims.dim << ", C=" << report.dims.channels
      << ", k=" << report.dims.kernel << ", |E|=" << report.dims.num_entities << ")\n";
  out << "batch_size\tsteps\tseconds_per_step\n";
  for (const BenchRow& r : report.rows) out << r.batch_size << '\t' << r.steps << '\t' << r.seconds_per_step << '\n';
  out << "growth_exponent " << report.growth_exponent
      << " (expected ~1: per-step cost is O(m d^2 + (lambda + |E|) m d))\n";
  return out.str();
}

}  // namespace lgre
