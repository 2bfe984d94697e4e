#include "lgre/grl.hpp"

#include "lgre/errors.hpp"
#include "lgre/ops.hpp"

namespace lgre {

ModelDims dims_for(const Dataset& dataset, std::size_t dim, std::size_t channels, std::size_t kernel) {
  ModelDims d;
  d.num_entities = dataset.num_entities();
  d.num_relations = dataset.num_relations();
  d.num_years = dataset.num_years();
  d.num_months = dataset.num_months();
  d.num_days = dataset.num_days();
  d.dim = dim;
  d.channels = channels;
  d.kernel = kernel;
  return d;
}

ModelParams ModelParams::init(const ModelDims& dims, std::uint64_t seed) {
  if (dims.dim == 0 || dims.channels == 0 || dims.num_entities == 0 || dims.num_relations == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (dims.kernel % 2 == 0) throw ConfigError("kernel size must be odd, got " + std::to_string(dims.kernel));
  Rng rng(seed);
  const std::size_t d = dims.dim;
  auto xavier = [&](Shape shape) { return xavier_init(shape, rng.next()); };
  auto zeros = [](Shape shape) { return Tensor::zeros(std::move(shape), true); };

  ModelParams p;
  p.dims = dims;
  p.entity = xavier({dims.num_entities, d});
  p.relation = xavier({2 * dims.num_relations, d});
  p.year = xavier({dims.num_years, d});
  p.month = xavier({dims.num_months, d});
  p.day = xavier({dims.num_days, d});
  p.gru = GruWeights::xavier(d, rng.next());
  p.time_weight = xavier({d, 3 * d});
  p.time_bias = zeros({d});
  p.relation_weight = xavier({d, 2 * d});
  p.relation_bias = zeros({d});
  p.gen_year = xavier({dims.first_kernel_size(), d});
  p.gen_month = xavier({dims.inner_kernel_size(), d});
  p.gen_day = xavier({dims.inner_kernel_size(), d});
  p.proj_year = xavier({d, dims.feature_size()});
  p.proj_year_bias = zeros({d});
  p.proj_month = xavier({d, dims.feature_size()});
  p.proj_month_bias = zeros({d});
  p.proj_day = xavier({d, dims.feature_size()});
  p.proj_day_bias = zeros({d});
  p.gate_year = xavier({1, d});
  p.gate_month = xavier({1, d});
  p.gate_day = xavier({1, d});
  return p;
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named() const {
  std::vector<std::pair<std::string, Tensor>> out{
      {"entity", entity}, {"relation", relation}, {"year", year}, {"month", month}, {"day", day}};
  for (auto& kv : gru.named()) out.push_back(std::move(kv));
  const std::vector<std::pair<std::string, Tensor>> rest{
      {"time_weight", time_weight},       {"time_bias", time_bias},
      {"relation_weight", relation_weight}, {"relation_bias", relation_bias},
      {"gen_year", gen_year},             {"gen_month", gen_month},
      {"gen_day", gen_day},               {"proj_year", proj_year},
      {"proj_year_bias", proj_year_bias}, {"proj_month", proj_month},
      {"proj_month_bias", proj_month_bias}, {"proj_day", proj_day},
      {"proj_day_bias", proj_day_bias},   {"gate_year", gate_year},
      {"gate_month", gate_month},         {"gate_day", gate_day}};
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named()) n += t.numel();
  return n;
}

ModelParams ModelParams::clone() const {
  auto copy = [](const Tensor& t) {
    return Tensor::from(t.shape(), std::vector<double>(t.values().begin(), t.values().end()), true);
  };
  ModelParams p;
  p.dims = dims;
  p.entity = copy(entity);
  p.relation = copy(relation);
  p.year = copy(year);
  p.month = copy(month);
  p.day = copy(day);
  p.gru = {copy(gru.w_z), copy(gru.u_z), copy(gru.b_z), copy(gru.w_r), copy(gru.u_r),
           copy(gru.b_r), copy(gru.w_h), copy(gru.u_h), copy(gru.b_h)};
  p.time_weight = copy(time_weight);
  p.time_bias = copy(time_bias);
  p.relation_weight = copy(relation_weight);
  p.relation_bias = copy(relation_bias);
  p.gen_year = copy(gen_year);
  p.gen_month = copy(gen_month);
  p.gen_day = copy(gen_day);
  p.proj_year = copy(proj_year);
  p.proj_year_bias = copy(proj_year_bias);
  p.proj_month = copy(proj_month);
  p.proj_month_bias = copy(proj_month_bias);
  p.proj_day = copy(proj_day);
  p.proj_day_bias = copy(proj_day_bias);
  p.gate_year = copy(gate_year);
  p.gate_month = copy(gate_month);
  p.gate_day = copy(gate_day);
  return p;
}

TimeEncoding encode_time(const ModelParams& params, std::span<const TimeTriple> times) {
  std::vector<Index> years, months, days;
  years.reserve(times.size());
  months.reserve(times.size());
  days.reserve(times.size());
  for (const TimeTriple& t : times) {
    years.push_back(t.year);
    months.push_back(t.month);
    days.push_back(t.day);
  }
  const Tensor y0 = gather_rows(params.year, years);
  const Tensor m0 = gather_rows(params.month, months);
  const Tensor d0 = gather_rows(params.day, days);
  const Tensor h0 = Tensor::zeros({times.size(), params.dims.dim});
  const auto states = gru_sequence({y0, m0, d0}, h0, params.gru);
  return {states[0], states[1], states[2]};
}

Tensor compose_time(const ModelParams& params, const TimeEncoding& time) {
  return leaky_relu(linear(concat_cols({time.year, time.month, time.day}), params.time_weight, params.time_bias));
}

Tensor update_relation(const ModelParams& params, const Tensor& relation_init, const Tensor& time) {
  return leaky_relu(linear(concat_cols({relation_init, time}), params.relation_weight, params.relation_bias));
}

RelationInput relation_update(const ModelParams& params, const Tensor& subject_init, const Tensor& relation_init,
                              const TimeEncoding& time, bool bypass) {
  const Tensor t = compose_time(params, time);
  if (bypass) return {concat_cols({subject_init, relation_init}), t};
  return {concat_cols({subject_init, update_relation(params, relation_init, t)}), t};
}

Filters generate_filters(const ModelParams& params, const TimeEncoding& time) {
  const ModelDims& d = params.dims;
  const std::size_t batch = time.year.dim(0);
  auto generate = [&](const Tensor& embedding, const Tensor& generator, std::size_t c_in) {
    const Tensor flat = matmul_nt(embedding, generator);
    const std::size_t expected = d.channels * c_in * d.kernel * d.kernel;
    if (flat.dim(1) != expected) {
      throw IntegrityError("filter generator yields " + std::to_string(flat.dim(1)) + " values, kernel needs " +
                           std::to_string(expected));
    }
    return reshape(flat, {batch, d.channels, c_in, d.kernel, d.kernel});
  };
  return {generate(time.year, params.gen_year, 1), generate(time.month, params.gen_month, d.channels),
          generate(time.day, params.gen_day, d.channels)};
}

Tensor DropoutContext::apply(const Tensor& x) const {
  if (!training || rate == 0.0) return x;
  if (rng == nullptr) throw IntegrityError("training-mode dropout needs a random generator");
  return dropout(x, rate, training, *rng);
}

GranularityEmbeddings conv_stack(const ModelParams& params, const Tensor& x_input, const Filters& filters,
                                 const DropoutContext& drop) {
  const ModelDims& d = params.dims;
  const std::size_t batch = x_input.dim(0);
  if (x_input.rank() != 2 || x_input.dim(1) != 2 * d.dim) {
    throw IntegrityError("conv input " + shape_string(x_input.shape()) + " does not match 2 x d with d = " +
                         std::to_string(d.dim));
  }
  const Tensor map = reshape(x_input, {batch, 1, 2, d.dim});
  auto layer = [&](const Tensor& in, const Tensor& kernels) {
    return drop.apply(relu(conv2d_per_sample(in, kernels)));
  };
  auto project = [&](const Tensor& features, const Tensor& weight, const Tensor& bias) {
    return linear(reshape(features, {batch, d.feature_size()}), weight, bias);
  };
  const Tensor x1 = layer(map, filters.year);
  const Tensor x2 = layer(x1, filters.month);
  const Tensor x3 = layer(x2, filters.day);
  return {project(x1, params.proj_year, params.proj_year_bias),
          project(x2, params.proj_month, params.proj_month_bias),
          project(x3, params.proj_day, params.proj_day_bias)};
}

}  // namespace lgre
