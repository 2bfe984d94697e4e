#pragma once

#include <span>
#include <vector>

#include "lgre/agb.hpp"
#include "lgre/data.hpp"
#include "lgre/grl.hpp"

namespace lgre {

struct ModelOptions {
  bool no_ru = false;
  bool no_agb = false;
  double dropout = 0.2;
  bool input_dropout = true;
};

/// Everything that depends on the timestamp only, computed once per distinct
/// timestamp and gathered per query: GRU encodings, the composed time
/// embedding t, generated filters (flattened) and granularity weights.
struct TimeTables {
  TimeEncoding encoding;  // [T x d] each
  Tensor time;            // [T x d]
  Tensor filter_year;     // [T x C*k*k]
  Tensor filter_month;    // [T x C*C*k*k]
  Tensor filter_day;      // [T x C*C*k*k]
  Tensor weights;         // [T x 3]
};

TimeTables compute_time_tables(const ModelParams& params, std::span<const TimeTriple> times,
                               const ModelOptions& options);

/// Queries (s, r, ?, t) where `slot` indexes rows of the time tables.
struct QueryBatch {
  std::vector<Index> subjects;
  std::vector<Index> relations;
  std::vector<Index> slots;

  std::size_t size() const { return subjects.size(); }
};

struct QueryOutput {
  Tensor x_output;  // [B x d]
  Tensor weights;   // [B x 3]
  GranularityEmbeddings granular;
};

QueryOutput forward_queries(const ModelParams& params, const TimeTables& tables, const QueryBatch& batch,
                            const ModelOptions& options, const DropoutContext& dropout);

/// Convenience batch for quadruples whose timestamps index the tables directly.
QueryBatch make_batch(std::span<const Quadruple> quads);

}  // namespace lgre
