#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "lgre/config.hpp"

namespace lgre::cli {

/// Size and content hash of train/valid/test.txt in a dataset directory.
struct DatasetFingerprint {
  std::string hash;
  std::uintmax_t bytes = 0;

  friend bool operator==(const DatasetFingerprint&, const DatasetFingerprint&) = default;
};

DatasetFingerprint fingerprint_dataset(const std::filesystem::path& dir);

/// Everything needed to repeat a run: resolved config, dataset location and
/// fingerprint, seed and artifact paths relative to the run directory.
struct RunManifest {
  std::string command;
  TrainConfig config;
  std::filesystem::path dataset;
  DatasetFingerprint fingerprint;
  std::map<std::string, std::string> artifacts;

  std::string to_text() const;
  static RunManifest parse(std::string_view text);
  static RunManifest read(const std::filesystem::path& file);
};

/// Creates dir, or throws UsageError when it exists and is not empty.
void prepare_run_directory(const std::filesystem::path& dir);

}  // namespace lgre::cli
