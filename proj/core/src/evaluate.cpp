#include "lgre/evaluate.hpp"

#include <algorithm>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

#include "lgre/checkpoint.hpp"
#include "lgre/errors.hpp"
#include "lgre/ops.hpp"
#include "lgre/util.hpp"

namespace lgre {

RankReport rank_queries(std::span<const Quadruple> queries, std::size_t num_entities, const FilterIndex& filters,
                        const BatchScorer& scorer, const EvalOptions& options, std::string split_name) {
  RankReport report;
  report.split = std::move(split_name);
  report.filter = options.filter;
  report.queries.assign(queries.begin(), queries.end());
  report.ranks.assign(queries.size(), 0);

  const std::size_t batch = std::max<std::size_t>(options.batch, 1);
  const std::size_t num_batches = (queries.size() + batch - 1) / batch;
  auto run_batch = [&](std::size_t b) {
    const std::size_t begin = b * batch;
    const std::size_t end = std::min(queries.size(), begin + batch);
    const auto chunk = queries.subspan(begin, end - begin);
    const std::vector<double> scores = scorer(chunk);
    if (scores.size() != chunk.size() * num_entities) {
      throw IntegrityError("scorer returned " + std::to_string(scores.size()) + " scores for " +
                           std::to_string(chunk.size()) + " queries over " + std::to_string(num_entities) + " entities");
    }
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const std::span<const double> row(scores.data() + i * num_entities, num_entities);
      report.ranks[begin + i] = pessimistic_rank(row, chunk[i].o, filters.known(chunk[i], options.filter));
    }
  };

  const std::size_t threads = std::min(std::max<std::size_t>(options.threads, 1), std::max<std::size_t>(num_batches, 1));
  if (threads <= 1) {
    for (std::size_t b = 0; b < num_batches; ++b) run_batch(b);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t b = w; b < num_batches; b += threads) run_batch(b);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  finalize_report(report);
  return report;
}

BatchScorer model_scorer(const ModelParams& params, const Dataset& dataset, const ModelOptions& options) {
  check_compatible(params.dims, dataset);
  auto tables = std::make_shared<TimeTables>();
  {
    NoGradGuard no_grad;
    *tables = compute_time_tables(params, dataset.time_table, options);
  }
  return [params, tables, options](std::span<const Quadruple> chunk) {
    NoGradGuard no_grad;
    const QueryOutput out = forward_queries(params, *tables, make_batch(chunk), options, DropoutContext{});
    const Tensor logits = score_logits(out.x_output, params.entity);
    return std::vector<double>(logits.values().begin(), logits.values().end());
  };
}

RankReport evaluate(const ModelParams& params, const Dataset& dataset, const FilterIndex& filters,
                    std::string_view split, const ModelOptions& model_options, const EvalOptions& options) {
  const std::vector<Quadruple> queries = add_inverse(dataset.split(split), dataset.num_relations());
  return rank_queries(queries, dataset.num_entities(), filters, model_scorer(params, dataset, model_options), options,
                      std::string(split));
}

std::vector<WeightRow> granularity_weights(const ModelParams& params, const Dataset& dataset, std::string_view split,
                                           const ModelOptions& options) {
  check_compatible(params.dims, dataset);
  NoGradGuard no_grad;
  const TimeTables tables = compute_time_tables(params, dataset.time_table, options);
  const std::vector<Quadruple> queries = add_inverse(dataset.split(split), dataset.num_relations());
  std::vector<WeightRow> rows;
  rows.reserve(queries.size());
  auto w = tables.weights.values();
  for (const Quadruple& q : queries) {
    const std::size_t t = static_cast<std::size_t>(q.t);
    rows.push_back({q, w[t * 3], w[t * 3 + 1], w[t * 3 + 2]});
  }
  return rows;
}

std::string weights_csv(const std::vector<WeightRow>& rows, const Dataset& dataset) {
  const auto num_rel = static_cast<Index>(dataset.num_relations());
  std::string out = "subject,relation,timestamp,direction,theta_y,theta_m,theta_d\n";
  double sy = 0, sm = 0, sd = 0;
  for (const WeightRow& row : rows) {
    const Quadruple& q = row.query;
    const Index rel = q.inverse ? q.r - num_rel : q.r;
    out += csv_field(dataset.vocab.entity.name(q.s)) + "," +
           csv_field(dataset.vocab.relation.name(rel) + (q.inverse ? "^-1" : "")) + "," +
           dataset.vocab.timestamp.name(q.t) + "," + (q.inverse ? "subject" : "object") + "," +
           format_double(row.year) + "," + format_double(row.month) + "," + format_double(row.day) + "\n";
    sy += row.year;
    sm += row.month;
    sd += row.day;
  }
  const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
  out += "mean,,,," + format_double(sy / n) + "," + format_double(sm / n) + "," + format_double(sd / n) + "\n";
  return out;
}

}  // namespace lgre
