#include "lgre_cli/manifest.hpp"

#include "lgre/errors.hpp"
#include "lgre/util.hpp"

namespace lgre::cli {

DatasetFingerprint fingerprint_dataset(const std::filesystem::path& dir) {
  DatasetFingerprint fp;
  std::uint64_t h = fnv1a("");
  for (const char* name : {"train.txt", "valid.txt", "test.txt"}) {
    const std::filesystem::path file = dir / name;
    if (!std::filesystem::exists(file)) throw IoError("dataset file '" + file.string() + "' not found");
    const std::string content = read_text_file(file);
    fp.bytes += content.size();
    h = fnv1a(std::string(name) + ":" + std::to_string(content.size()) + ":", h);
    h = fnv1a(content, h);
  }
  fp.hash = hex64(h);
  return fp;
}

std::string RunManifest::to_text() const {
  std::string out = "command=" + command + "\n";
  out += "seed=" + std::to_string(config.seed) + "\n";
  out += "dataset.path=" + dataset.string() + "\n";
  out += "dataset.fingerprint=" + fingerprint.hash + "\n";
  out += "dataset.bytes=" + std::to_string(fingerprint.bytes) + "\n";
  for (const std::string& line : split(config.to_text(), '\n'))
    if (!line.empty()) out += "config." + line + "\n";
  for (const auto& [name, path] : artifacts) out += "artifact." + name + "=" + path + "\n";
  return out;
}

RunManifest RunManifest::parse(std::string_view text) {
  RunManifest m;
  for (const KeyValue& kv : parse_key_values(text)) {
    if (kv.key == "command") m.command = kv.value;
    else if (kv.key == "seed") continue;  // duplicated in config.seed
    else if (kv.key == "dataset.path") m.dataset = kv.value;
    else if (kv.key == "dataset.fingerprint") m.fingerprint.hash = kv.value;
    else if (kv.key == "dataset.bytes") m.fingerprint.bytes = std::stoull(kv.value);
    else if (kv.key.rfind("config.", 0) == 0) m.config.set(kv.key.substr(7), kv.value);
    else if (kv.key.rfind("artifact.", 0) == 0) m.artifacts[kv.key.substr(9)] = kv.value;
    else throw ParseError("manifest line " + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
  }
  return m;
}

RunManifest RunManifest::read(const std::filesystem::path& file) {
  if (!std::filesystem::exists(file)) throw IoError("manifest '" + file.string() + "' not found");
  return parse(read_text_file(file));
}

void prepare_run_directory(const std::filesystem::path& dir) {
  if (std::filesystem::exists(dir)) {
    if (!std::filesystem::is_directory(dir) || !std::filesystem::is_empty(dir)) {
      throw UsageError("output directory '" + dir.string() + "' already exists and is not empty");
    }
  }
  std::filesystem::create_directories(dir);
}

}  // namespace lgre::cli
