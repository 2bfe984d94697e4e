#include "lgre/baseline.hpp"

#include <memory>
#include <unordered_map>

namespace lgre {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct FrequencyTables {
  std::size_t num_entities = 0;
  std::size_t num_relations2 = 0;
  std::unordered_map<std::uint64_t, std::unordered_map<Index, double>> pair_counts;
  std::vector<double> global;  // fraction of training answers, in [0, 1]
};

}  // namespace

BatchScorer frequency_scorer(const Dataset& dataset) {
  auto tables = std::make_shared<FrequencyTables>();
  tables->num_entities = dataset.num_entities();
  tables->num_relations2 = 2 * dataset.num_relations();
  tables->global.assign(dataset.num_entities(), 0.0);
  const std::vector<Quadruple> train = add_inverse(dataset.train, dataset.num_relations());
  for (const Quadruple& q : train) {
    const std::uint64_t key = static_cast<std::uint64_t>(q.s) * tables->num_relations2 + static_cast<std::uint64_t>(q.r);
    tables->pair_counts[key][q.o] += 1.0;
    tables->global[static_cast<std::size_t>(q.o)] += 1.0;
  }
  if (!train.empty()) {
    for (double& g : tables->global) g /= static_cast<double>(train.size());
  }

  return [tables](std::span<const Quadruple> chunk) {
    const std::size_t n = tables->num_entities;
    std::vector<double> scores(chunk.size() * n);
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const Quadruple& q = chunk[i];
      const std::uint64_t key = static_cast<std::uint64_t>(q.s) * tables->num_relations2 + static_cast<std::uint64_t>(q.r);
      const auto it = tables->pair_counts.find(key);
      const std::uint64_t query_hash = mix(key * 1000003ULL + static_cast<std::uint64_t>(q.t));
      for (std::size_t e = 0; e < n; ++e) {
        double count = 0.0;
        if (it != tables->pair_counts.end()) {
          auto c = it->second.find(static_cast<Index>(e));
          if (c != it->second.end()) count = c->second;
        }
        const double jitter = static_cast<double>(mix(query_hash ^ e) >> 11) * 0x1.0p-53;
        scores[i * n + e] = count + 1e-3 * tables->global[e] + 1e-7 * jitter;
      }
    }
    return scores;
  };
}

RankReport frequency_baseline(const Dataset& dataset, const FilterIndex& filters, std::string_view split,
                              const EvalOptions& options) {
  const std::vector<Quadruple> queries = add_inverse(dataset.split(split), dataset.num_relations());
  return rank_queries(queries, dataset.num_entities(), filters, frequency_scorer(dataset), options, std::string(split));
}

}  // namespace lgre
