#include "lgre/filter_index.hpp"

#include <algorithm>

#include "lgre/errors.hpp"

namespace lgre {

namespace {
const std::vector<Index> kEmpty;

void sort_unique(std::unordered_map<std::uint64_t, std::vector<Index>>& map) {
  for (auto& [k, v] : map) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
}
}  // namespace

FilterMode parse_filter_mode(std::string_view text) {
  if (text == "raw") return FilterMode::raw;
  if (text == "static") return FilterMode::static_;
  if (text == "time_aware") return FilterMode::time_aware;
  throw ConfigError("filter mode must be raw, static or time_aware, got '" + std::string(text) + "'");
}

const char* to_string(FilterMode mode) {
  switch (mode) {
    case FilterMode::raw: return "raw";
    case FilterMode::static_: return "static";
    case FilterMode::time_aware: return "time_aware";
  }
  return "?";
}

FilterIndex::FilterIndex(std::span<const Quadruple> augmented, std::size_t num_relations2, std::size_t num_timestamps)
    : num_relations2_(num_relations2), num_timestamps_(num_timestamps) {
  for (const Quadruple& q : augmented) {
    time_aware_[key(q.s, q.r, q.t)].push_back(q.o);
    static_[key(q.s, q.r)].push_back(q.o);
  }
  sort_unique(time_aware_);
  sort_unique(static_);
}

std::uint64_t FilterIndex::key(Index s, Index r, Index t) const {
  return (static_cast<std::uint64_t>(s) * num_relations2_ + static_cast<std::uint64_t>(r)) * num_timestamps_ +
         static_cast<std::uint64_t>(t);
}

std::uint64_t FilterIndex::key(Index s, Index r) const {
  return static_cast<std::uint64_t>(s) * num_relations2_ + static_cast<std::uint64_t>(r);
}

const std::vector<Index>& FilterIndex::time_aware(Index s, Index r, Index t) const {
  auto it = time_aware_.find(key(s, r, t));
  return it == time_aware_.end() ? kEmpty : it->second;
}

const std::vector<Index>& FilterIndex::static_set(Index s, Index r) const {
  auto it = static_.find(key(s, r));
  return it == static_.end() ? kEmpty : it->second;
}

const std::vector<Index>& FilterIndex::known(const Quadruple& q, FilterMode mode) const {
  switch (mode) {
    case FilterMode::raw: return kEmpty;
    case FilterMode::static_: return static_set(q.s, q.r);
    case FilterMode::time_aware: return time_aware(q.s, q.r, q.t);
  }
  return kEmpty;
}

std::size_t FilterIndex::time_aware_total() const {
  std::size_t total = 0;
  for (const auto& [k, v] : time_aware_) total += v.size();
  return total;
}

FilterIndex build_filter_index(const Dataset& dataset) {
  std::vector<Quadruple> all;
  all.reserve(dataset.train.size() + dataset.valid.size() + dataset.test.size());
  for (const auto* split : {&dataset.train, &dataset.valid, &dataset.test})
    all.insert(all.end(), split->begin(), split->end());
  const std::vector<Quadruple> augmented = add_inverse(all, dataset.num_relations());
  return FilterIndex(augmented, 2 * dataset.num_relations(), dataset.num_timestamps());
}

}  // namespace lgre
