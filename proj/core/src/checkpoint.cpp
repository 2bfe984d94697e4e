#include "lgre/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "lgre/errors.hpp"
#include "lgre/util.hpp"

namespace lgre {

namespace {

constexpr const char* kFormat = "lgre-checkpoint-1";

std::string shape_text(const Shape& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "x" : "") + std::to_string(shape[i]);
  return s;
}

void write_blob(const std::filesystem::path& file, std::span<const double> values) {
  std::string bytes(values.size() * 8, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  write_text_file(file, bytes);
}

std::vector<double> read_blob(const std::filesystem::path& file, std::size_t count, const std::string& name) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IntegrityError("tensor '" + name + "': blob " + file.filename().string() + " is missing");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() != count * 8) {
    throw IntegrityError("tensor '" + name + "': expected " + std::to_string(count * 8) + " bytes, found " +
                         std::to_string(bytes.size()));
  }
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + static_cast<std::size_t>(b)])) << (8 * b);
    values[i] = std::bit_cast<double>(bits);
  }
  return values;
}

std::size_t to_size(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw IntegrityError("checkpoint manifest lacks '" + key + "'");
  try {
    return static_cast<std::size_t>(std::stoull(it->second));
  } catch (const std::exception&) {
    throw IntegrityError("checkpoint manifest has bad value for '" + key + "'");
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const TrainConfig& config, const ModelParams& params) {
  std::filesystem::create_directories(dir);
  std::string manifest = std::string("format=") + kFormat + "\n";
  for (const std::string& line : split(config.to_text(), '\n')) {
    if (!line.empty()) manifest += "config." + line + "\n";
  }
  const ModelDims& d = params.dims;
  manifest += "model.num_entities=" + std::to_string(d.num_entities) + "\n";
  manifest += "model.num_relations=" + std::to_string(d.num_relations) + "\n";
  manifest += "model.num_years=" + std::to_string(d.num_years) + "\n";
  manifest += "model.num_months=" + std::to_string(d.num_months) + "\n";
  manifest += "model.num_days=" + std::to_string(d.num_days) + "\n";
  manifest += "model.dim=" + std::to_string(d.dim) + "\n";
  manifest += "model.channels=" + std::to_string(d.channels) + "\n";
  manifest += "model.kernel=" + std::to_string(d.kernel) + "\n";
  for (const auto& [name, tensor] : params.named()) {
    manifest += "tensor." + name + "=" + shape_text(tensor.shape()) + "\n";
    write_blob(dir / (name + ".bin"), tensor.values());
  }
  write_text_file(dir / "manifest.txt", manifest);
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "manifest.txt")) {
    throw IoError("no checkpoint manifest in '" + dir.string() + "'");
  }
  std::map<std::string, std::string> kv;
  Checkpoint ckpt;
  for (const KeyValue& entry : parse_key_values(read_text_file(dir / "manifest.txt"))) {
    if (entry.key.rfind("config.", 0) == 0) {
      ckpt.config.set(entry.key.substr(7), entry.value);
    } else {
      kv[entry.key] = entry.value;
    }
  }
  if (kv["format"] != kFormat) throw IntegrityError("unsupported checkpoint format '" + kv["format"] + "'");

  ModelDims d;
  d.num_entities = to_size(kv, "model.num_entities");
  d.num_relations = to_size(kv, "model.num_relations");
  d.num_years = to_size(kv, "model.num_years");
  d.num_months = to_size(kv, "model.num_months");
  d.num_days = to_size(kv, "model.num_days");
  d.dim = to_size(kv, "model.dim");
  d.channels = to_size(kv, "model.channels");
  d.kernel = to_size(kv, "model.kernel");

  // Shapes come from a freshly initialized model; the manifest must agree.
  ckpt.params = ModelParams::init(d, 0);
  for (auto& [name, tensor] : ckpt.params.named()) {
    auto it = kv.find("tensor." + name);
    if (it == kv.end()) throw IntegrityError("tensor '" + name + "' missing from checkpoint manifest");
    if (it->second != shape_text(tensor.shape())) {
      throw IntegrityError("tensor '" + name + "' has shape " + it->second + " in the manifest, model expects " +
                           shape_text(tensor.shape()));
    }
    const std::vector<double> values = read_blob(dir / (name + ".bin"), tensor.numel(), name);
    auto dst = tensor.mutable_values();
    std::copy(values.begin(), values.end(), dst.begin());
  }
  return ckpt;
}

void check_compatible(const ModelDims& d, const Dataset& ds) {
  if (d.num_entities != ds.num_entities() || d.num_relations != ds.num_relations() ||
      d.num_years != ds.num_years() || d.num_months != ds.num_months() || d.num_days != ds.num_days()) {
    throw IntegrityError("checkpoint sizes (entities " + std::to_string(d.num_entities) + ", relations " +
                         std::to_string(d.num_relations) + ", years " + std::to_string(d.num_years) + ", months " +
                         std::to_string(d.num_months) + ", days " + std::to_string(d.num_days) +
                         ") do not match the dataset (entities " + std::to_string(ds.num_entities()) +
                         ", relations " + std::to_string(ds.num_relations()) + ", years " +
                         std::to_string(ds.num_years()) + ", months " + std::to_string(ds.num_months()) + ", days " +
                         std::to_string(ds.num_days()) + ")");
  }
}

}  // namespace lgre
