#pragma once

#include <span>
#include <string>
#include <vector>

#include "lgre/data.hpp"
#include "lgre/filter_index.hpp"

namespace lgre {

struct MetricSummary {
  std::size_t count = 0;
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
};

/// MRR = mean(1/rank); Hits@k = fraction of ranks <= k. Empty input gives zeros.
MetricSummary summarize(std::span<const std::size_t> ranks);

/// Rank of the gold entity: one plus the number of competitors scoring at
/// least as high (ties count against the gold). Competitors listed in
/// `filtered` are skipped unless they are the gold itself. A non-finite gold
/// score ranks last.
std::size_t pessimistic_rank(std::span<const double> scores, Index gold, std::span<const Index> filtered);

struct RankReport {
  std::string split;
  FilterMode filter = FilterMode::time_aware;
  std::vector<Quadruple> queries;  // augmented: inverse queries have inverse == true
  std::vector<std::size_t> ranks;
  MetricSummary overall;
  MetricSummary object;   // (s, r, ?, t)
  MetricSummary subject;  // (o, r^-1, ?, t)
};

/// Fills the three summaries from queries and ranks.
void finalize_report(RankReport& report);

std::string report_json(const RankReport& report);
/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(const std::string& text);

/// One row per query: s, r, o, t, direction, rank (vocabulary names).
std::string ranks_csv(const RankReport& report, const Dataset& dataset);

}  // namespace lgre
