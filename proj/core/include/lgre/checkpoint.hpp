#pragma once

#include <filesystem>

#include "lgre/config.hpp"
#include "lgre/grl.hpp"

namespace lgre {

/// On disk: <dir>/manifest.txt (key=value: resolved config, model sizes and
/// one `tensor.<name>=<shape>` line per tensor) and <dir>/<name>.bin holding
/// raw little-endian float64 values in row-major order.
struct Checkpoint {
  TrainConfig config;
  ModelParams params;
};

void save_checkpoint(const std::filesystem::path& dir, const TrainConfig& config, const ModelParams& params);

/// Throws IoError when the directory or manifest is missing and
/// IntegrityError naming the tensor when a blob is missing, truncated or
/// inconsistent with the manifest.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// Throws IntegrityError when the checkpoint was built for different
/// vocabulary sizes.
void check_compatible(const ModelDims& dims, const Dataset& dataset);

}  // namespace lgre
