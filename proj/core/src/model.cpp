#include "lgre/model.hpp"

#include "lgre/ops.hpp"

namespace lgre {

TimeTables compute_time_tables(const ModelParams& params, std::span<const TimeTriple> times,
                               const ModelOptions& options) {
  TimeTables tables;
  tables.encoding = encode_time(params, times);
  tables.time = compose_time(params, tables.encoding);
  const Filters filters = generate_filters(params, tables.encoding);
  const std::size_t n = times.size();
  tables.filter_year = reshape(filters.year, {n, params.dims.first_kernel_size()});
  tables.filter_month = reshape(filters.month, {n, params.dims.inner_kernel_size()});
  tables.filter_day = reshape(filters.day, {n, params.dims.inner_kernel_size()});
  tables.weights = options.no_agb ? uniform_weights(n) : adaptive_weights(params, tables.encoding);
  return tables;
}

QueryOutput forward_queries(const ModelParams& params, const TimeTables& tables, const QueryBatch& batch,
                            const ModelOptions& options, const DropoutContext& dropout) {
  const ModelDims& d = params.dims;
  const std::size_t b = batch.size();
  const Tensor subject = gather_rows(params.entity, batch.subjects);
  const Tensor relation_init = gather_rows(params.relation, batch.relations);

  Tensor x_input;
  if (options.no_ru) {
    x_input = concat_cols({subject, relation_init});
  } else {
    const Tensor t = gather_rows(tables.time, batch.slots);
    x_input = concat_cols({subject, update_relation(params, relation_init, t)});
  }
  if (options.input_dropout) x_input = dropout.apply(x_input);

  const Filters filters{
      reshape(gather_rows(tables.filter_year, batch.slots), {b, d.channels, 1, d.kernel, d.kernel}),
      reshape(gather_rows(tables.filter_month, batch.slots), {b, d.channels, d.channels, d.kernel, d.kernel}),
      reshape(gather_rows(tables.filter_day, batch.slots), {b, d.channels, d.channels, d.kernel, d.kernel})};

  QueryOutput out;
  out.granular = conv_stack(params, x_input, filters, dropout);
  out.weights = gather_rows(tables.weights, batch.slots);
  out.x_output = fuse(out.granular, out.weights);
  return out;
}

QueryBatch make_batch(std::span<const Quadruple> quads) {
  QueryBatch batch;
  batch.subjects.reserve(quads.size());
  batch.relations.reserve(quads.size());
  batch.slots.reserve(quads.size());
  for (const Quadruple& q : quads) {
    batch.subjects.push_back(q.s);
    batch.relations.push_back(q.r);
    batch.slots.push_back(q.t);
  }
  return batch;
}

}  // namespace lgre
