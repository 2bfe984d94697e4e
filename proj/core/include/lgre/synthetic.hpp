#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lgre/data.hpp"

namespace lgre {

enum class CalendarField { year, month, day };
CalendarField parse_calendar_field(std::string_view text);
const char* to_string(CalendarField field);

/// "=v" matches exactly v; "%p=v" matches values congruent to v mod p.
struct PeriodicMask {
  int modulus = 0;
  int value = 0;

  bool matches(int field_value) const;
  std::string to_string() const;
  static PeriodicMask parse(std::string_view text);
};

/// Planted pattern: facts for (subject, relation) at timestamps whose
/// calendar field satisfies the mask have the given object.
struct Rule {
  Index subject = 0;
  Index relation = 0;
  CalendarField field = CalendarField::month;
  PeriodicMask mask;
  Index object = 0;

  bool matches(const CalendarDate& date) const;
};

/// Randomly planted group: `pairs` fresh (s, r) pairs, each with one rule
/// per residue class mod `period` of the field, every class mapped to a
/// distinct object.
struct AutoRuleGroup {
  CalendarField field = CalendarField::month;
  std::size_t pairs = 0;
  int period = 2;
};

struct SyntheticSpec {
  std::size_t entities = 20;
  std::size_t relations = 5;
  int year_start = 2010;
  std::size_t years = 2;
  std::size_t months = 12;
  std::size_t days = 1;
  std::size_t facts = 200;
  // Probability that a fact is drawn from a rule-covered (s, r, t).
  double rule_fraction = 1.0;
  double train_fraction = 0.8;
  double valid_fraction = 0.1;
  std::uint64_t seed = 0;
  std::vector<Rule> rules;
  std::vector<AutoRuleGroup> auto_rules;
};

/// Flat key=value text; `rule=<s> <r> <field> <mask> <o>` and
/// `auto_rules=<field>:<pairs>:<period>` may repeat.
SyntheticSpec parse_synthetic_spec(std::string_view text);
SyntheticSpec read_synthetic_spec(const std::filesystem::path& file);

struct SyntheticDataset {
  std::vector<RawFact> train;
  std::vector<RawFact> valid;
  std::vector<RawFact> test;
  std::vector<Rule> rules;  // explicit plus auto-generated
  std::vector<CalendarDate> timestamps;
  std::size_t entities = 0;
  std::size_t relations = 0;
};

std::string entity_name(std::size_t index, std::size_t count);
std::string relation_name(std::size_t index, std::size_t count);

/// Throws GenerationError on contradictory rules or if the requested number
/// of distinct facts cannot be drawn.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

/// Writes train.txt, valid.txt, test.txt and rules.txt into dir.
void write_synthetic(const SyntheticDataset& data, const std::filesystem::path& dir);

/// Rules file: subject, relation, field, mask, object (tab-separated names).
std::vector<Rule> read_rules(const std::filesystem::path& file, const Dataset& dataset);

/// Convenience: generated splits turned into an indexed dataset.
Dataset to_dataset(const SyntheticDataset& data);
/// Generator rules re-expressed in the dataset's vocabulary indices. Rules
/// naming entities absent from every split are dropped.
std::vector<Rule> rules_in_dataset(const SyntheticDataset& data, const Dataset& dataset);

}  // namespace lgre
