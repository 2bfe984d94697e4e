#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lgre/data.hpp"

namespace lgre {

enum class FilterMode { raw, static_, time_aware };
FilterMode parse_filter_mode(std::string_view text);
const char* to_string(FilterMode mode);

/// Known true objects per (s, r, t) and per (s, r), collected over every
/// (inverse-augmented) split. Object lists are sorted and unique.
class FilterIndex {
 public:
  FilterIndex() = default;
  FilterIndex(std::span<const Quadruple> augmented, std::size_t num_relations2, std::size_t num_timestamps);

  const std::vector<Index>& time_aware(Index s, Index r, Index t) const;
  const std::vector<Index>& static_set(Index s, Index r) const;
  /// Known answers for a query under the given mode; empty for raw.
  const std::vector<Index>& known(const Quadruple& q, FilterMode mode) const;

  std::size_t time_aware_keys() const { return time_aware_.size(); }
  std::size_t static_keys() const { return static_.size(); }
  /// Sum of all time-aware set sizes (= number of distinct (s, r, t, o)).
  std::size_t time_aware_total() const;

 private:
  std::uint64_t key(Index s, Index r, Index t) const;
  std::uint64_t key(Index s, Index r) const;

  std::uint64_t num_relations2_ = 0;
  std::uint64_t num_timestamps_ = 0;
  std::unordered_map<std::uint64_t, std::vector<Index>> time_aware_;
  std::unordered_map<std::uint64_t, std::vector<Index>> static_;
};

/// Builds the index over train + valid + test with inverse facts added.
FilterIndex build_filter_index(const Dataset& dataset);

}  // namespace lgre
