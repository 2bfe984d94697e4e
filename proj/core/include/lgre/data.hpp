#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lgre/rng.hpp"

namespace lgre {

using Index = std::int32_t;

/// Integer-indexed fact. Inverse facts use relation ids in [|R|, 2|R|).
struct Quadruple {
  Index s = 0;
  Index r = 0;
  Index o = 0;
  Index t = 0;
  bool inverse = false;

  friend auto operator<=>(const Quadruple&, const Quadruple&) = default;
};

/// Calendar decomposition of one timestamp into vocabulary indices.
struct TimeTriple {
  Index year = 0;
  Index month = 0;
  Index day = 0;

  friend bool operator==(const TimeTriple&, const TimeTriple&) = default;
};

enum class Granularity { day, year };
Granularity parse_granularity(std::string_view text);
const char* to_string(Granularity g);

/// Bijective string <-> index map.
class StringIndex {
 public:
  StringIndex() = default;
  explicit StringIndex(std::vector<std::string> names);

  Index id(const std::string& name) const;  // throws IntegrityError when unknown
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const std::string& name(Index id) const;
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, Index> index_;
};

struct Vocabulary {
  StringIndex entity;
  StringIndex relation;
  StringIndex timestamp;  // indices assigned in chronological order
  StringIndex year;
  StringIndex month;
  StringIndex day;
  std::vector<Index> chronological_order;
};

/// One raw TSV line.
struct RawFact {
  std::string subject;
  std::string relation;
  std::string object;
  std::string time;
};

/// Parsed calendar fields of a timestamp string.
struct CalendarDate {
  int year = 0;
  int month = 0;  // 0 when absent
  int day = 0;    // 0 when absent
};

/// Accepts "YYYY-MM-DD" or "YYYY". With year granularity a full date is
/// truncated to its year. Throws ParseError on anything else.
CalendarDate parse_timestamp(std::string_view text, Granularity granularity);
/// Canonical timestamp key: "YYYY-MM-DD" for day granularity, "YYYY" for year.
std::string canonical_timestamp(const CalendarDate& date, Granularity granularity);

struct Dataset {
  std::vector<Quadruple> train;
  std::vector<Quadruple> valid;
  std::vector<Quadruple> test;
  Vocabulary vocab;
  std::vector<TimeTriple> time_table;    // indexed by timestamp id
  std::vector<CalendarDate> calendar;    // indexed by timestamp id
  Granularity granularity = Granularity::day;

  std::size_t num_entities() const { return vocab.entity.size(); }
  std::size_t num_relations() const { return vocab.relation.size(); }
  std::size_t num_timestamps() const { return vocab.timestamp.size(); }
  std::size_t num_years() const { return vocab.year.size(); }
  std::size_t num_months() const { return vocab.month.size(); }
  std::size_t num_days() const { return vocab.day.size(); }

  const std::vector<Quadruple>& split(std::string_view name) const;
};

/// Vocabularies are built over the union of all three splits.
Dataset build_dataset(const std::vector<RawFact>& train, const std::vector<RawFact>& valid,
                      const std::vector<RawFact>& test, Granularity granularity);

/// Reads one 4-column TSV file. Line numbers in errors are 1-based.
std::vector<RawFact> read_facts(const std::filesystem::path& file, Granularity granularity);

/// Loads train.txt, valid.txt and test.txt from a directory.
Dataset load_dataset(const std::filesystem::path& dir, Granularity granularity);

/// Appends (o, r + |R|, s, t) for every fact. Rejects already-inverse input.
std::vector<Quadruple> add_inverse(std::span<const Quadruple> quads, std::size_t num_relations);

/// n distinct entities drawn uniformly from all entities except the gold object.
std::vector<Index> sample_negatives(const Quadruple& quad, std::size_t n, std::size_t num_entities, Rng& rng);

}  // namespace lgre
