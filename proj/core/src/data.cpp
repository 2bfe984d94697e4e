#include "lgre/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <unordered_set>

#include "lgre/errors.hpp"

namespace lgre {

Granularity parse_granularity(std::string_view text) {
  if (text == "day") return Granularity::day;
  if (text == "year") return Granularity::year;
  throw ConfigError("granularity must be 'day' or 'year', got '" + std::string(text) + "'");
}

const char* to_string(Granularity g) { return g == Granularity::day ? "day" : "year"; }

StringIndex::StringIndex(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], static_cast<Index>(i)).second) {
      throw IntegrityError("duplicate vocabulary entry '" + names_[i] + "'");
    }
  }
}

Index StringIndex::id(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw IntegrityError("unknown vocabulary entry '" + name + "'");
  return it->second;
}

const std::string& StringIndex::name(Index id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= names_.size()) {
    throw IntegrityError("vocabulary index " + std::to_string(id) + " out of range");
  }
  return names_[static_cast<std::size_t>(id)];
}

namespace {

bool parse_int(std::string_view text, int& out) {
  if (text.empty()) return false;
  for (char c : text)
    if (c < '0' || c > '9') return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::string two_digits(int v) {
  std::string s = std::to_string(v);
  return s.size() < 2 ? "0" + s : s;
}

std::string four_digits(int v) {
  std::string s = std::to_string(v);
  while (s.size() < 4) s = "0" + s;
  return s;
}

// Fabricated month/day token for year-granularity data.
constexpr const char* kConstantToken = "00";

}  // namespace

CalendarDate parse_timestamp(std::string_view text, Granularity granularity) {
  CalendarDate date;
  if (text.size() == 4) {
    if (!parse_int(text, date.year)) throw ParseError("malformed timestamp '" + std::string(text) + "'");
    if (granularity == Granularity::day) {
      throw ParseError("timestamp '" + std::string(text) + "' lacks month and day for a day-granularity dataset");
    }
    return date;
  }
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !parse_int(text.substr(0, 4), date.year) ||
      !parse_int(text.substr(5, 2), date.month) || !parse_int(text.substr(8, 2), date.day) || date.month < 1 ||
      date.month > 12 || date.day < 1 || date.day > 31) {
    throw ParseError("malformed timestamp '" + std::string(text) + "'");
  }
  if (granularity == Granularity::year) date.month = date.day = 0;
  return date;
}

std::string canonical_timestamp(const CalendarDate& date, Granularity granularity) {
  if (granularity == Granularity::year) return four_digits(date.year);
  return four_digits(date.year) + "-" + two_digits(date.month) + "-" + two_digits(date.day);
}

const std::vector<Quadruple>& Dataset::split(std::string_view name) const {
  if (name == "train") return train;
  if (name == "valid") return valid;
  if (name == "test") return test;
  throw UsageError("unknown split '" + std::string(name) + "' (expected train, valid or test)");
}

Dataset build_dataset(const std::vector<RawFact>& train, const std::vector<RawFact>& valid,
                      const std::vector<RawFact>& test, Granularity granularity) {
  std::set<std::string> entities, relations, years, months, days;
  std::map<std::tuple<int, int, int>, std::string> timestamps;  // chronological by construction
  for (const auto* split : {&train, &valid, &test}) {
    for (const RawFact& f : *split) {
      entities.insert(f.subject);
      entities.insert(f.object);
      relations.insert(f.relation);
      const CalendarDate date = parse_timestamp(f.time, granularity);
      timestamps.emplace(std::tuple{date.year, date.month, date.day}, canonical_timestamp(date, granularity));
      years.insert(four_digits(date.year));
      months.insert(granularity == Granularity::day ? two_digits(date.month) : kConstantToken);
      days.insert(granularity == Granularity::day ? two_digits(date.day) : kConstantToken);
    }
  }

  Dataset ds;
  ds.granularity = granularity;
  ds.vocab.entity = StringIndex({entities.begin(), entities.end()});
  ds.vocab.relation = StringIndex({relations.begin(), relations.end()});
  ds.vocab.year = StringIndex({years.begin(), years.end()});
  ds.vocab.month = StringIndex({months.begin(), months.end()});
  ds.vocab.day = StringIndex({days.begin(), days.end()});

  std::vector<std::string> ts_names;
  for (const auto& [key, name] : timestamps) {
    const auto [y, m, d] = key;
    CalendarDate date{y, m, d};
    ds.calendar.push_back(date);
    ts_names.push_back(name);
    TimeTriple triple;
    triple.year = ds.vocab.year.id(four_digits(y));
    triple.month = ds.vocab.month.id(granularity == Granularity::day ? two_digits(m) : kConstantToken);
    triple.day = ds.vocab.day.id(granularity == Granularity::day ? two_digits(d) : kConstantToken);
    ds.time_table.push_back(triple);
  }
  ds.vocab.timestamp = StringIndex(std::move(ts_names));
  ds.vocab.chronological_order.resize(ds.vocab.timestamp.size());
  for (std::size_t i = 0; i < ds.vocab.chronological_order.size(); ++i) {
    ds.vocab.chronological_order[i] = static_cast<Index>(i);
  }

  auto convert = [&](const std::vector<RawFact>& facts) {
    std::vector<Quadruple> out;
    out.reserve(facts.size());
    for (const RawFact& f : facts) {
      const CalendarDate date = parse_timestamp(f.time, granularity);
      out.push_back({ds.vocab.entity.id(f.subject), ds.vocab.relation.id(f.relation), ds.vocab.entity.id(f.object),
                     ds.vocab.timestamp.id(canonical_timestamp(date, granularity)), false});
    }
    return out;
  };
  ds.train = convert(train);
  ds.valid = convert(valid);
  ds.test = convert(test);
  return ds;
}

std::vector<RawFact> read_facts(const std::filesystem::path& file, Granularity granularity) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open '" + file.string() + "'");
  std::vector<RawFact> facts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    const std::string where = file.string() + ":" + std::to_string(line_no);
    if (fields.size() != 4) {
      throw ParseError(where + ": expected 4 tab-separated columns, found " + std::to_string(fields.size()));
    }
    try {
      parse_timestamp(fields[3], granularity);
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
    facts.push_back({fields[0], fields[1], fields[2], fields[3]});
  }
  return facts;
}

Dataset load_dataset(const std::filesystem::path& dir, Granularity granularity) {
  if (!std::filesystem::is_directory(dir)) throw IoError("dataset directory '" + dir.string() + "' not found");
  return build_dataset(read_facts(dir / "train.txt", granularity), read_facts(dir / "valid.txt", granularity),
                       read_facts(dir / "test.txt", granularity), granularity);
}

std::vector<Quadruple> add_inverse(std::span<const Quadruple> quads, std::size_t num_relations) {
  std::vector<Quadruple> out;
  out.reserve(quads.size() * 2);
  for (const Quadruple& q : quads) {
    if (q.inverse || q.r < 0 || static_cast<std::size_t>(q.r) >= num_relations) {
      throw IntegrityError("add_inverse: relation index " + std::to_string(q.r) + " is not below |R| = " +
                           std::to_string(num_relations) + " (input already augmented?)");
    }
    out.push_back(q);
  }
  for (const Quadruple& q : quads) {
    out.push_back({q.o, q.r + static_cast<Index>(num_relations), q.s, q.t, true});
  }
  return out;
}

std::vector<Index> sample_negatives(const Quadruple& quad, std::size_t n, std::size_t num_entities, Rng& rng) {
  if (n >= num_entities) {
    throw ConfigError("cannot draw " + std::to_string(n) + " negatives from " + std::to_string(num_entities) +
                      " entities (need n < |E|)");
  }
  // Floyd's subset sampling over the |E| - 1 non-gold slots; slot k maps to
  // entity k, shifted by one past the gold object.
  const std::size_t pool = num_entities - 1;
  std::vector<Index> out;
  out.reserve(n);
  std::unordered_set<std::size_t> chosen;
  chosen.reserve(n * 2);
  for (std::size_t j = pool - n; j < pool; ++j) {
    std::size_t pick = rng.uniform_int(j + 1);
    if (!chosen.insert(pick).second) {
      pick = j;
      chosen.insert(pick);
    }
    out.push_back(static_cast<Index>(pick >= static_cast<std::size_t>(quad.o) ? pick + 1 : pick));
  }
  return out;
}

}  // namespace lgre
