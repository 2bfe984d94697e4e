#include "lgre/synthetic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <tuple>

#include "lgre/errors.hpp"
#include "lgre/rng.hpp"
#include "lgre/util.hpp"

namespace lgre {

CalendarField parse_calendar_field(std::string_view text) {
  if (text == "year") return CalendarField::year;
  if (text == "month") return CalendarField::month;
  if (text == "day") return CalendarField::day;
  throw ParseError("granularity must be year, month or day, got '" + std::string(text) + "'");
}

const char* to_string(CalendarField field) {
  switch (field) {
    case CalendarField::year: return "year";
    case CalendarField::month: return "month";
    case CalendarField::day: return "day";
  }
  return "?";
}

namespace {

int to_int(std::string_view text, const char* what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(std::string("invalid ") + what + " '" + std::string(text) + "'");
  }
  return v;
}

std::size_t to_size(std::string_view text, const char* what) {
  const int v = to_int(text, what);
  if (v < 0) throw ParseError(std::string(what) + " must be non-negative");
  return static_cast<std::size_t>(v);
}

double to_double(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("invalid ") + what + " '" + text + "'");
  }
}

std::string padded(char prefix, std::size_t index, std::size_t count) {
  const std::size_t width = std::to_string(count > 0 ? count - 1 : 0).size();
  std::string digits = std::to_string(index);
  return std::string(1, prefix) + std::string(width - std::min(width, digits.size()), '0') + digits;
}

// Accepts "e7", "e07" or "7".
Index parse_name_index(std::string_view text, char prefix, std::size_t count, const char* what) {
  if (!text.empty() && text.front() == prefix) text.remove_prefix(1);
  const int v = to_int(text, what);
  if (v < 0 || static_cast<std::size_t>(v) >= count) {
    throw ParseError(std::string(what) + " index " + std::to_string(v) + " out of range");
  }
  return static_cast<Index>(v);
}

int field_value(const CalendarDate& date, CalendarField field) {
  switch (field) {
    case CalendarField::year: return date.year;
    case CalendarField::month: return date.month;
    case CalendarField::day: return date.day;
  }
  return 0;
}

std::string describe(const Rule& r, std::size_t entities, std::size_t relations) {
  return padded('e', static_cast<std::size_t>(r.subject), entities) + " " +
         padded('r', static_cast<std::size_t>(r.relation), relations) + " " + to_string(r.field) + " " +
         r.mask.to_string() + " " + padded('e', static_cast<std::size_t>(r.object), entities);
}

std::string date_string(const CalendarDate& d) {
  return canonical_timestamp(d, Granularity::day);
}

}  // namespace

bool PeriodicMask::matches(int v) const {
  if (modulus == 0) return v == value;
  int residue = v % modulus;
  if (residue < 0) residue += modulus;
  return residue == value;
}

std::string PeriodicMask::to_string() const {
  if (modulus == 0) return "=" + std::to_string(value);
  return "%" + std::to_string(modulus) + "=" + std::to_string(value);
}

PeriodicMask PeriodicMask::parse(std::string_view text) {
  PeriodicMask mask;
  if (!text.empty() && text.front() == '=') {
    mask.value = to_int(text.substr(1), "mask value");
    return mask;
  }
  if (!text.empty() && text.front() == '%') {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError("mask '" + std::string(text) + "' lacks '='");
    mask.modulus = to_int(text.substr(1, eq - 1), "mask modulus");
    mask.value = to_int(text.substr(eq + 1), "mask residue");
    if (mask.modulus <= 0 || mask.value < 0 || mask.value >= mask.modulus) {
      throw ParseError("mask '" + std::string(text) + "' needs modulus > 0 and 0 <= residue < modulus");
    }
    return mask;
  }
  throw ParseError("mask '" + std::string(text) + "' must look like '=3' or '%2=0'");
}

bool Rule::matches(const CalendarDate& date) const { return mask.matches(field_value(date, field)); }

std::string entity_name(std::size_t index, std::size_t count) { return padded('e', index, count); }
std::string relation_name(std::size_t index, std::size_t count) { return padded('r', index, count); }

SyntheticSpec parse_synthetic_spec(std::string_view text) {
  SyntheticSpec spec;
  std::vector<std::string> rule_lines;
  for (const KeyValue& kv : parse_key_values(text)) {
    const std::string& k = kv.key;
    const std::string& v = kv.value;
    if (k == "entities") spec.entities = to_size(v, "entities");
    else if (k == "relations") spec.relations = to_size(v, "relations");
    else if (k == "year_start") spec.year_start = to_int(v, "year_start");
    else if (k == "years") spec.years = to_size(v, "years");
    else if (k == "months") spec.months = to_size(v, "months");
    else if (k == "days") spec.days = to_size(v, "days");
    else if (k == "facts") spec.facts = to_size(v, "facts");
    else if (k == "rule_fraction") spec.rule_fraction = to_double(v, "rule_fraction");
    else if (k == "train_fraction") spec.train_fraction = to_double(v, "train_fraction");
    else if (k == "valid_fraction") spec.valid_fraction = to_double(v, "valid_fraction");
    else if (k == "seed") {
      std::uint64_t seed = 0;
      auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), seed);
      if (ec != std::errc() || ptr != v.data() + v.size()) throw ParseError("invalid seed '" + v + "'");
      spec.seed = seed;
    }
    else if (k == "rule") rule_lines.push_back(v);
    else if (k == "auto_rules") {
      const auto parts = split(v, ':');
      if (parts.size() != 3) throw ParseError("auto_rules must be <field>:<pairs>:<period>, got '" + v + "'");
      AutoRuleGroup group;
      group.field = parse_calendar_field(parts[0]);
      group.pairs = to_size(parts[1], "auto_rules pairs");
      group.period = to_int(parts[2], "auto_rules period");
      if (group.period < 1) throw ParseError("auto_rules period must be positive");
      spec.auto_rules.push_back(group);
    } else {
      throw ParseError("line " + std::to_string(kv.line) + ": unknown synthetic spec key '" + k + "'");
    }
  }
  if (spec.entities < 2 || spec.relations < 1 || spec.years < 1 || spec.months < 1 || spec.months > 12 ||
      spec.days < 1 || spec.days > 28) {
    throw ParseError("synthetic spec needs entities >= 2, relations >= 1, 1 <= months <= 12, 1 <= days <= 28");
  }
  if (spec.train_fraction < 0 || spec.valid_fraction < 0 || spec.train_fraction + spec.valid_fraction > 1.0) {
    throw ParseError("split fractions must be non-negative and sum to at most 1");
  }
  for (const std::string& line : rule_lines) {
    std::istringstream in(line);
    std::string s, r, field, mask, o, extra;
    if (!(in >> s >> r >> field >> mask >> o) || (in >> extra)) {
      throw ParseError("rule must be '<subject> <relation> <field> <mask> <object>', got '" + line + "'");
    }
    Rule rule;
    rule.subject = parse_name_index(s, 'e', spec.entities, "subject");
    rule.relation = parse_name_index(r, 'r', spec.relations, "relation");
    rule.field = parse_calendar_field(field);
    rule.mask = PeriodicMask::parse(mask);
    rule.object = parse_name_index(o, 'e', spec.entities, "object");
    spec.rules.push_back(rule);
  }
  return spec;
}

SyntheticSpec read_synthetic_spec(const std::filesystem::path& file) {
  return parse_synthetic_spec(read_text_file(file));
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  Rng rng(spec.seed);
  SyntheticDataset out;
  out.entities = spec.entities;
  out.relations = spec.relations;

  for (std::size_t y = 0; y < spec.years; ++y)
    for (std::size_t m = 1; m <= spec.months; ++m)
      for (std::size_t d = 1; d <= spec.days; ++d)
        out.timestamps.push_back({spec.year_start + static_cast<int>(y), static_cast<int>(m), static_cast<int>(d)});

  out.rules = spec.rules;
  std::set<std::pair<Index, Index>> used_pairs;
  for (const Rule& r : spec.rules) used_pairs.insert({r.subject, r.relation});
  for (const AutoRuleGroup& group : spec.auto_rules) {
    if (static_cast<std::size_t>(group.period) >= spec.entities) {
      throw GenerationError("auto_rules period " + std::to_string(group.period) + " needs more distinct objects than " +
                            std::to_string(spec.entities) + " entities");
    }
    for (std::size_t p = 0; p < group.pairs; ++p) {
      if (used_pairs.size() >= spec.entities * spec.relations) {
        throw GenerationError("not enough free (subject, relation) pairs for auto_rules");
      }
      std::pair<Index, Index> pair;
      do {
        pair = {static_cast<Index>(rng.uniform_int(spec.entities)), static_cast<Index>(rng.uniform_int(spec.relations))};
      } while (used_pairs.count(pair));
      used_pairs.insert(pair);
      std::set<Index> objects;
      for (int residue = 0; residue < group.period; ++residue) {
        Index object;
        do {
          object = static_cast<Index>(rng.uniform_int(spec.entities));
        } while (objects.count(object));
        objects.insert(object);
        Rule rule;
        rule.subject = pair.first;
        rule.relation = pair.second;
        rule.field = group.field;
        rule.mask = group.period == 1 ? PeriodicMask{1, 0} : PeriodicMask{group.period, residue};
        rule.object = object;
        out.rules.push_back(rule);
      }
    }
  }

  // Contradictions: two rules on one (s, r) that fire together with different objects.
  for (std::size_t i = 0; i < out.rules.size(); ++i)
    for (std::size_t j = i + 1; j < out.rules.size(); ++j) {
      const Rule& a = out.rules[i];
      const Rule& b = out.rules[j];
      if (a.subject != b.subject || a.relation != b.relation || a.object == b.object) continue;
      for (const CalendarDate& date : out.timestamps) {
        if (a.matches(date) && b.matches(date)) {
          throw GenerationError("contradictory rules '" + describe(a, spec.entities, spec.relations) + "' and '" +
                                describe(b, spec.entities, spec.relations) + "' both fire on " + date_string(date));
        }
      }
    }

  auto rule_object = [&](Index s, Index r, const CalendarDate& date) -> Index {
    for (const Rule& rule : out.rules)
      if (rule.subject == s && rule.relation == r && rule.matches(date)) return rule.object;
    return -1;
  };

  // For each rule-bearing pair, the timestamps at which one of its rules fires.
  std::vector<std::pair<std::pair<Index, Index>, std::vector<std::size_t>>> covered;
  {
    std::set<std::pair<Index, Index>> pairs;
    for (const Rule& r : out.rules) pairs.insert({r.subject, r.relation});
    for (const auto& pair : pairs) {
      std::vector<std::size_t> ts;
      for (std::size_t t = 0; t < out.timestamps.size(); ++t)
        if (rule_object(pair.first, pair.second, out.timestamps[t]) >= 0) ts.push_back(t);
      if (!ts.empty()) covered.push_back({pair, std::move(ts)});
    }
  }

  std::set<std::tuple<Index, Index, Index, std::size_t>> seen;
  std::vector<std::tuple<Index, Index, Index, std::size_t>> facts;
  const std::size_t max_attempts = std::max<std::size_t>(1000, spec.facts * 1000);
  for (std::size_t attempt = 0; facts.size() < spec.facts; ++attempt) {
    if (attempt >= max_attempts) {
      throw GenerationError("could only draw " + std::to_string(facts.size()) + " distinct facts of " +
                            std::to_string(spec.facts) + " requested");
    }
    Index s, r, o;
    std::size_t t;
    if (!covered.empty() && rng.uniform01() < spec.rule_fraction) {
      const auto& [pair, ts] = covered[rng.uniform_int(covered.size())];
      s = pair.first;
      r = pair.second;
      t = ts[rng.uniform_int(ts.size())];
      o = rule_object(s, r, out.timestamps[t]);
    } else {
      s = static_cast<Index>(rng.uniform_int(spec.entities));
      r = static_cast<Index>(rng.uniform_int(spec.relations));
      t = rng.uniform_int(out.timestamps.size());
      o = rule_object(s, r, out.timestamps[t]);
      if (o < 0) o = static_cast<Index>(rng.uniform_int(spec.entities));
    }
    if (seen.insert({s, r, o, t}).second) facts.emplace_back(s, r, o, t);
  }

  for (std::size_t i = facts.size(); i > 1; --i) std::swap(facts[i - 1], facts[rng.uniform_int(i)]);
  const std::size_t n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(facts.size())));
  const std::size_t n_valid = std::min(facts.size() - n_train,
      static_cast<std::size_t>(std::llround(spec.valid_fraction * static_cast<double>(facts.size()))));
  for (std::size_t i = 0; i < facts.size(); ++i) {
    const auto& [s, r, o, t] = facts[i];
    RawFact raw{entity_name(static_cast<std::size_t>(s), spec.entities),
                relation_name(static_cast<std::size_t>(r), spec.relations),
                entity_name(static_cast<std::size_t>(o), spec.entities), date_string(out.timestamps[t])};
    if (i < n_train) out.train.push_back(std::move(raw));
    else if (i < n_train + n_valid) out.valid.push_back(std::move(raw));
    else out.test.push_back(std::move(raw));
  }
  return out;
}

void write_synthetic(const SyntheticDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write_split = [&](const std::vector<RawFact>& facts, const char* name) {
    std::string text;
    for (const RawFact& f : facts) text += f.subject + '\t' + f.relation + '\t' + f.object + '\t' + f.time + '\n';
    write_text_file(dir / name, text);
  };
  write_split(data.train, "train.txt");
  write_split(data.valid, "valid.txt");
  write_split(data.test, "test.txt");
  std::string rules;
  for (const Rule& r : data.rules) {
    rules += entity_name(static_cast<std::size_t>(r.subject), data.entities) + '\t' +
             relation_name(static_cast<std::size_t>(r.relation), data.relations) + '\t' + to_string(r.field) + '\t' +
             r.mask.to_string() + '\t' + entity_name(static_cast<std::size_t>(r.object), data.entities) + '\n';
  }
  write_text_file(dir / "rules.txt", rules);
}

std::vector<Rule> read_rules(const std::filesystem::path& file, const Dataset& dataset) {
  std::vector<Rule> rules;
  std::size_t line_no = 0;
  for (const std::string& raw : split(read_text_file(file), '\n')) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 5) {
      throw ParseError(file.string() + ":" + std::to_string(line_no) + ": expected 5 tab-separated rule fields");
    }
    if (!dataset.vocab.entity.contains(fields[0]) || !dataset.vocab.entity.contains(fields[4]) ||
        !dataset.vocab.relation.contains(fields[1])) {
      continue;
    }
    Rule rule;
    rule.subject = dataset.vocab.entity.id(fields[0]);
    rule.relation = dataset.vocab.relation.id(fields[1]);
    rule.field = parse_calendar_field(fields[2]);
    rule.mask = PeriodicMask::parse(fields[3]);
    rule.object = dataset.vocab.entity.id(fields[4]);
    rules.push_back(rule);
  }
  return rules;
}

Dataset to_dataset(const SyntheticDataset& data) {
  return build_dataset(data.train, data.valid, data.test, Granularity::day);
}

std::vector<Rule> rules_in_dataset(const SyntheticDataset& data, const Dataset& dataset) {
  std::vector<Rule> out;
  for (Rule r : data.rules) {
    const std::string s = entity_name(static_cast<std::size_t>(r.subject), data.entities);
    const std::string o = entity_name(static_cast<std::size_t>(r.object), data.entities);
    const std::string rel = relation_name(static_cast<std::size_t>(r.relation), data.relations);
    if (!dataset.vocab.entity.contains(s) || !dataset.vocab.entity.contains(o) || !dataset.vocab.relation.contains(rel)) {
      continue;
    }
    r.subject = dataset.vocab.entity.id(s);
    r.object = dataset.vocab.entity.id(o);
    r.relation = dataset.vocab.relation.id(rel);
    out.push_back(r);
  }
  return out;
}

}  // namespace lgre
