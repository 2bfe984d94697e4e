#include <benchmark/benchmark.h>

#include "lgre/agb.hpp"
#include "lgre/config.hpp"
#include "lgre/data.hpp"
#include "lgre/ops.hpp"
#include "lgre/rng.hpp"
#include "lgre/synthetic.hpp"
#include "lgre/train.hpp"

using namespace lgre;

namespace {

Tensor random_tensor(Shape shape, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor::from(std::move(shape), std::move(v));
}

const Dataset& bench_dataset() {
  static const Dataset ds = [] {
    SyntheticSpec spec;
    spec.entities = 1000;
    spec.relations = 20;
    spec.years = 1;
    spec.months = 1;
    spec.days = 28;
    spec.facts = 8000;
    spec.rule_fraction = 0.0;
    spec.seed = 1;
    return to_dataset(generate_synthetic(spec));
  }();
  return ds;
}

}  // namespace

// args: batch, dim
static void BM_ConvPerSample(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0)), d = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  const Tensor in = random_tensor({b, 2, 2, d}, rng);
  const Tensor ker = random_tensor({b, 2, 2, 3, 3}, rng);
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_per_sample(in, ker));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * b));
}
BENCHMARK(BM_ConvPerSample)->Args({64, 64})->Args({256, 64})->Args({256, 200});

// args: batch, entities
static void BM_ScoreAll(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0)), e = static_cast<std::size_t>(state.range(1));
  Rng rng(2);
  const Tensor x = random_tensor({b, 64}, rng);
  const Tensor entity = random_tensor({e, 64}, rng);
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(score_all(x, entity));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * b));
}
BENCHMARK(BM_ScoreAll)->Args({256, 1000})->Args({256, 7128});

// args: batch
static void BM_TrainStep(benchmark::State& state) {
  const Dataset& ds = bench_dataset();
  TrainConfig config;
  config.dim = 64;
  config.negatives = 50;
  config.batch_size = static_cast<std::size_t>(state.range(0));
  Trainer trainer(config, ds);
  const std::vector<Quadruple> queries = add_inverse(ds.train, ds.num_relations());
  std::size_t offset = 0;
  for (auto _ : state) {
    if (offset + config.batch_size > queries.size()) offset = 0;
    benchmark::DoNotOptimize(trainer.step(std::span(queries).subspan(offset, config.batch_size)));
    offset += config.batch_size;
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * config.batch_size));
}
BENCHMARK(BM_TrainStep)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
