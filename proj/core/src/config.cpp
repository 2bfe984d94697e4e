#include "lgre/config.hpp"

#include <cctype>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "lgre/errors.hpp"
#include "lgre/util.hpp"

namespace lgre {

namespace {

std::size_t parse_size(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size() || v < 0) throw std::invalid_argument(value);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ConfigError(key + " expects a non-negative integer, got '" + value + "'");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + " expects a number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError(key + " expects true or false, got '" + value + "'");
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

struct Field {
  std::string name;
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

#define LGRE_SIZE_FIELD(f) \
  Field{#f, [](TrainConfig& c, const std::string& v) { c.f = parse_size(#f, v); }, \
        [](const TrainConfig& c) { return std::to_string(c.f); }}
#define LGRE_REAL_FIELD(f) \
  Field{#f, [](TrainConfig& c, const std::string& v) { c.f = parse_real(#f, v); }, \
        [](const TrainConfig& c) { return format_double(c.f); }}
#define LGRE_BOOL_FIELD(f) \
  Field{#f, [](TrainConfig& c, const std::string& v) { c.f = parse_bool(#f, v); }, \
        [](const TrainConfig& c) { return bool_text(c.f); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      LGRE_SIZE_FIELD(dim),
      LGRE_SIZE_FIELD(channels),
      LGRE_SIZE_FIELD(kernel),
      LGRE_REAL_FIELD(lr),
      LGRE_SIZE_FIELD(batch_size),
      LGRE_SIZE_FIELD(negatives),
      LGRE_REAL_FIELD(dropout),
      LGRE_BOOL_FIELD(input_dropout),
      LGRE_REAL_FIELD(alpha),
      LGRE_SIZE_FIELD(epochs),
      Field{"seed", [](TrainConfig& c, const std::string& v) { c.seed = parse_size("seed", v); },
            [](const TrainConfig& c) { return std::to_string(c.seed); }},
      LGRE_BOOL_FIELD(no_ru),
      LGRE_BOOL_FIELD(no_agb),
      LGRE_BOOL_FIELD(no_tl),
      Field{"eval_filter", [](TrainConfig& c, const std::string& v) { c.eval_filter = parse_filter_mode(v); },
            [](const TrainConfig& c) { return std::string(to_string(c.eval_filter)); }},
      Field{"neg_weighting",
            [](TrainConfig& c, const std::string& v) { c.neg_weighting = parse_negative_weighting(v); },
            [](const TrainConfig& c) { return std::string(to_string(c.neg_weighting)); }},
      Field{"temporal_mode", [](TrainConfig& c, const std::string& v) { c.temporal_mode = parse_temporal_mode(v); },
            [](const TrainConfig& c) { return std::string(to_string(c.temporal_mode)); }},
      Field{"precision",
            [](TrainConfig& c, const std::string& v) {
              if (v == "64" || v == "f64") c.precision = Precision::f64;
              else if (v == "32" || v == "f32") c.precision = Precision::f32;
              else throw ConfigError("precision must be 64 or 32, got '" + v + "'");
            },
            [](const TrainConfig& c) { return std::string(c.precision == Precision::f64 ? "64" : "32"); }},
      Field{"granularity", [](TrainConfig& c, const std::string& v) { c.granularity = parse_granularity(v); },
            [](const TrainConfig& c) { return std::string(to_string(c.granularity)); }},
      LGRE_SIZE_FIELD(eval_every),
      LGRE_SIZE_FIELD(patience),
      LGRE_SIZE_FIELD(eval_threads),
      LGRE_SIZE_FIELD(eval_batch),
  };
  return table;
}

#undef LGRE_SIZE_FIELD
#undef LGRE_REAL_FIELD
#undef LGRE_BOOL_FIELD

const Field* find_field(const std::string& key) {
  for (const Field& f : fields())
    if (f.name == key) return &f;
  return nullptr;
}

std::string valid_keys() {
  std::string out;
  for (const Field& f : fields()) out += (out.empty() ? "" : ", ") + f.name;
  return out;
}

}  // namespace

const std::vector<std::string>& TrainConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const Field& f : fields()) n.push_back(f.name);
    return n;
  }();
  return names;
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (!f) throw UsageError("unknown config key '" + key + "'; valid keys: " + valid_keys());
  f->set(*this, value);
}

std::string TrainConfig::get(const std::string& key) const {
  const Field* f = find_field(key);
  if (!f) throw UsageError("unknown config key '" + key + "'; valid keys: " + valid_keys());
  return f->get(*this);
}

void TrainConfig::apply_text(std::string_view text) {
  for (const KeyValue& kv : parse_key_values(text)) set(kv.key, kv.value);
}

void TrainConfig::apply_file(const std::filesystem::path& file) { apply_text(read_text_file(file)); }

void TrainConfig::apply_environment() {
  for (const Field& f : fields()) {
    std::string var = "LGRE_";
    for (char c : f.name) var += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (const char* v = std::getenv(var.c_str())) f.set(*this, v);
  }
}

void TrainConfig::validate() const {
  if (dim == 0) throw ConfigError("dim must be positive");
  if (channels == 0) throw ConfigError("channels must be positive");
  if (kernel == 0 || kernel % 2 == 0) throw ConfigError("kernel must be odd, got " + std::to_string(kernel));
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
  if (eval_threads == 0) throw ConfigError("eval_threads must be positive");
  if (eval_batch == 0) throw ConfigError("eval_batch must be positive");
}

ModelOptions TrainConfig::model_options() const {
  ModelOptions o;
  o.no_ru = no_ru;
  o.no_agb = no_agb;
  o.dropout = dropout;
  o.input_dropout = input_dropout;
  return o;
}

std::string TrainConfig::to_text() const {
  std::string out;
  for (const Field& f : fields()) out += f.name + "=" + f.get(*this) + "\n";
  return out;
}

}  // namespace lgre
