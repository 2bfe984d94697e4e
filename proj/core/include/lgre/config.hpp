#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lgre/data.hpp"
#include "lgre/filter_index.hpp"
#include "lgre/model.hpp"
#include "lgre/objective.hpp"
#include "lgre/tensor.hpp"

namespace lgre {

/// Every knob of a training run. Key names in config files, LGRE_* environment
/// variables and command-line flags match the field names.
struct TrainConfig {
  std::size_t dim = 200;
  std::size_t channels = 2;
  std::size_t kernel = 3;
  double lr = 0.001;
  std::size_t batch_size = 256;
  std::size_t negatives = 1000;
  double dropout = 0.2;
  bool input_dropout = true;
  double alpha = 1e-5;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  bool no_ru = false;
  bool no_agb = false;
  bool no_tl = false;
  FilterMode eval_filter = FilterMode::time_aware;
  NegativeWeighting neg_weighting = NegativeWeighting::mean;
  TemporalMode temporal_mode = TemporalMode::smooth;
  Precision precision = Precision::f64;
  Granularity granularity = Granularity::day;
  std::size_t eval_every = 1;  // 0 disables validation during training
  std::size_t patience = 20;   // epochs without validation improvement; 0 disables early stopping
  std::size_t eval_threads = 1;
  std::size_t eval_batch = 256;

  /// Sets one field from text. Unknown keys raise UsageError listing the valid ones.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  /// Applies every key=value line of a flat config text.
  void apply_text(std::string_view text);
  void apply_file(const std::filesystem::path& file);
  /// Applies LGRE_<KEY> environment variables.
  void apply_environment();
  /// Checks ranges; throws ConfigError.
  void validate() const;

  /// Effective temporal weight (0 under the no-TL ablation).
  double effective_alpha() const { return no_tl ? 0.0 : alpha; }
  ModelOptions model_options() const;

  /// All keys with resolved values, in declaration order, one per line.
  std::string to_text() const;
  static const std::vector<std::string>& keys();
};

}  // namespace lgre
