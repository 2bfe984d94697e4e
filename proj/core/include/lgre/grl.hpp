#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lgre/data.hpp"
#include "lgre/nn.hpp"
#include "lgre/rng.hpp"
#include "lgre/tensor.hpp"

namespace lgre {

/// Sizes that fix every parameter shape.
struct ModelDims {
  std::size_t num_entities = 0;
  std::size_t num_relations = 0;  // original relations; the table holds 2x for inverses
  std::size_t num_years = 1;
  std::size_t num_months = 1;
  std::size_t num_days = 1;
  std::size_t dim = 200;
  std::size_t channels = 2;
  std::size_t kernel = 3;

  /// Elements of the generated first-layer kernel, C x 1 x k x k.
  std::size_t first_kernel_size() const { return channels * kernel * kernel; }
  /// Elements of the generated second/third-layer kernels, C x C x k x k.
  std::size_t inner_kernel_size() const { return channels * channels * kernel * kernel; }
  /// Flattened feature map after a convolution layer, C x 2 x d.
  std::size_t feature_size() const { return channels * 2 * dim; }
};

/// Every trainable tensor of the model.
struct ModelParams {
  ModelDims dims;

  Tensor entity;    // [|E| x d]
  Tensor relation;  // [2|R| x d]
  Tensor year;      // [years x d]
  Tensor month;     // [months x d]
  Tensor day;       // [days x d]
  GruWeights gru;

  Tensor time_weight, time_bias;          // W_t [d x 3d], b_t [d]
  Tensor relation_weight, relation_bias;  // W_r [d x 2d], b_r [d]

  // Filter generators: kernel = reshape(G * time embedding).
  Tensor gen_year;   // [C*k*k x d]
  Tensor gen_month;  // [C*C*k*k x d]
  Tensor gen_day;    // [C*C*k*k x d]

  // Per-granularity projections of the flattened feature maps.
  Tensor proj_year, proj_year_bias;    // [d x 2Cd], [d]
  Tensor proj_month, proj_month_bias;
  Tensor proj_day, proj_day_bias;

  // Granularity gate rows, each [1 x d].
  Tensor gate_year, gate_month, gate_day;

  /// Xavier-initialized tables and matrices, zero biases.
  static ModelParams init(const ModelDims& dims, std::uint64_t seed);

  /// Name -> tensor list in a fixed order (used by the optimizer and checkpoints).
  std::vector<std::pair<std::string, Tensor>> named() const;
  std::size_t parameter_count() const;
  /// Deep copy with fresh storage.
  ModelParams clone() const;
};

ModelDims dims_for(const Dataset& dataset, std::size_t dim, std::size_t channels, std::size_t kernel);

/// GRU outputs for the year -> month -> day sequence, each [B x d].
struct TimeEncoding {
  Tensor year;
  Tensor month;
  Tensor day;
};

/// Looks up the initial year/month/day embeddings and runs the GRU from a
/// zero hidden state. Index out of range raises IntegrityError.
TimeEncoding encode_time(const ModelParams& params, std::span<const TimeTriple> times);

/// t = LeakyReLU(W_t [y || m || d] + b_t), [B x d].
Tensor compose_time(const ModelParams& params, const TimeEncoding& time);

/// r = LeakyReLU(W_r [r_init || t] + b_r), [B x d].
Tensor update_relation(const ModelParams& params, const Tensor& relation_init, const Tensor& time);

struct RelationInput {
  Tensor x_input;  // [B x 2d]
  Tensor time;     // composed time embedding t, [B x d]
};

/// Builds the convolution input [s_init || r]. With bypass set (the no-RU
/// ablation) the relation is used as initialized: [s_init || r_init].
RelationInput relation_update(const ModelParams& params, const Tensor& subject_init, const Tensor& relation_init,
                              const TimeEncoding& time, bool bypass = false);

/// Per-sample kernels: year [B x C x 1 x k x k], month and day [B x C x C x k x k].
struct Filters {
  Tensor year;
  Tensor month;
  Tensor day;
};

Filters generate_filters(const ModelParams& params, const TimeEncoding& time);

struct GranularityEmbeddings {
  Tensor year;   // x_y [B x d]
  Tensor month;  // x_m [B x d]
  Tensor day;    // x_d [B x d]
};

struct DropoutContext {
  double rate = 0.0;
  bool training = false;
  Rng* rng = nullptr;

  Tensor apply(const Tensor& x) const;
};

/// Three generated-filter convolution layers over the 2 x d map
/// (subject row, relation row), each followed by ReLU and dropout, with a
/// linear read-out per layer.
GranularityEmbeddings conv_stack(const ModelParams& params, const Tensor& x_input, const Filters& filters,
                                 const DropoutContext& dropout);

}  // namespace lgre
