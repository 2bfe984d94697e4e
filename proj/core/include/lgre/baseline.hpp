#pragma once

#include <string_view>

#include "lgre/evaluate.hpp"

namespace lgre {

/// Scores candidate objects by how often they answer the query's (s, r) in
/// the inverse-augmented training split. Global entity frequency breaks
/// count ties, then a fixed hash of (query, entity) breaks the rest, so
/// unseen candidates are ordered arbitrarily but deterministically.
BatchScorer frequency_scorer(const Dataset& dataset);

RankReport frequency_baseline(const Dataset& dataset, const FilterIndex& filters, std::string_view split,
                              const EvalOptions& options);

}  // namespace lgre
