#include <cmath>
#include <set>

#include "doctest.h"
#include "lgre/errors.hpp"
#include "oracles.hpp"
#include "toy.hpp"

using namespace lgre;
using lgre::testing::grad_check;
using lgre::testing::random_tensor;
using lgre::testing::toy_dataset;
using lgre::testing::toy_params;

namespace {

void zero_out(Tensor& t) {
  for (double& v : t.mutable_values()) v = 0.0;
}

}  // namespace

TEST_CASE("parameter shapes and count") {
  const Dataset ds = toy_dataset();
  const ModelParams p = ModelParams::init(dims_for(ds, 6, 2, 3), 0);
  CHECK(p.dims.first_kernel_size() == 18);
  CHECK(p.dims.inner_kernel_size() == 36);
  CHECK(p.entity.shape() == Shape{3, 6});
  CHECK(p.relation.shape() == Shape{4, 6});
  CHECK(p.gen_year.shape() == Shape{18, 6});
  CHECK(p.gen_day.shape() == Shape{36, 6});
  CHECK(p.proj_month.shape() == Shape{6, 24});
  // Hand enumeration for d=6, C=2, k=3, |E|=3, |R|=2, 2 years, 2 months, 3 days.
  const std::size_t d = 6;
  const std::size_t expected = 3 * d + 4 * d + (2 + 2 + 3) * d  // tables
                               + 3 * (2 * d * d + d)           // GRU
                               + (d * 3 * d + d) + (d * 2 * d + d)  // W_t, W_r
                               + (18 + 36 + 36) * d            // generators
                               + 3 * (d * 24 + d)              // projections
                               + 3 * d;                        // gates
  CHECK(p.parameter_count() == expected);
  std::size_t sum = 0;
  std::set<std::string> names;
  for (const auto& [name, t] : p.named()) {
    sum += t.numel();
    names.insert(name);
  }
  CHECK(sum == expected);
  CHECK(names.size() == p.named().size());
  CHECK_THROWS_AS(ModelParams::init(dims_for(ds, 6, 2, 4), 0), ConfigError);
}

TEST_CASE("encode_time") {
  const Dataset ds = toy_dataset();
  ModelParams p = toy_params(ds);
  const TimeEncoding enc = encode_time(p, ds.time_table);
  const std::size_t t = ds.num_timestamps();
  CHECK(enc.year.shape() == Shape{t, 6});
  CHECK(enc.day.shape() == Shape{t, 6});
  // Timestamps 2014-01-05 and 2014-02-05 share the year only; find two sharing year and month
  // by constructing them directly.
  const std::vector<TimeTriple> pair{{0, 1, 0}, {0, 1, 2}};
  const TimeEncoding e2 = encode_time(p, pair);
  for (std::size_t j = 0; j < 6; ++j) {
    CHECK(e2.year[j] == e2.year[6 + j]);
    CHECK(e2.month[j] == e2.month[6 + j]);
  }
  bool day_differs = false;
  for (std::size_t j = 0; j < 6; ++j) day_differs = day_differs || e2.day[j] != e2.day[6 + j];
  CHECK(day_differs);

  p.gru = GruWeights::zeros(6);
  const TimeEncoding zero = encode_time(p, ds.time_table);
  for (const Tensor* x : {&zero.year, &zero.month, &zero.day})
    for (double v : x->values()) CHECK(v == 0.0);

  const std::vector<TimeTriple> bad{{5, 0, 0}};
  CHECK_THROWS_AS(encode_time(p, bad), IntegrityError);
}

TEST_CASE("relation_update") {
  const Dataset ds = toy_dataset();
  ModelParams p = toy_params(ds);
  const std::vector<TimeTriple> times{ds.time_table[0], ds.time_table[3]};
  const TimeEncoding enc = encode_time(p, times);
  const std::vector<Index> s{0, 2}, r{1, 3};
  const Tensor s0 = gather_rows(p.entity, s), r0 = gather_rows(p.relation, r);
  const RelationInput full = relation_update(p, s0, r0, enc);
  CHECK(full.x_input.shape() == Shape{2, 12});
  CHECK(full.time.shape() == Shape{2, 6});

  const RelationInput bypass = relation_update(p, s0, r0, enc, true);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(bypass.x_input[i * 12 + j] == s0[i * 6 + j]);
      CHECK(bypass.x_input[i * 12 + 6 + j] == r0[i * 6 + j]);
    }

  zero_out(p.time_weight);
  zero_out(p.time_bias);
  const RelationInput zeroed = relation_update(p, s0, r0, enc);
  for (double v : zeroed.time.values()) CHECK(v == 0.0);
  // With t = 0 the relation half equals LeakyReLU(W_r [r_init || 0] + b_r).
  const Tensor expect = leaky_relu(linear(concat_cols({r0, Tensor::zeros({2, 6})}), p.relation_weight, p.relation_bias));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 6; ++j) CHECK(zeroed.x_input[i * 12 + 6 + j] == expect[i * 6 + j]);
}

TEST_CASE("generate_filters") {
  const Dataset ds = toy_dataset();
  ModelParams p = toy_params(ds);
  const std::vector<TimeTriple> times{ds.time_table[1], ds.time_table[1], ds.time_table[2]};
  const Filters f = generate_filters(p, encode_time(p, times));
  CHECK(f.year.shape() == Shape{3, 2, 1, 3, 3});
  CHECK(f.month.shape() == Shape{3, 2, 2, 3, 3});
  for (std::size_t j = 0; j < 36; ++j) CHECK(f.day[j] == f.day[36 + j]);

  // generator -> conv -> sum
  Rng rng(3);
  Tensor map = random_tensor({3, 1, 2, 6}, rng);
  auto res = grad_check({{"gen_year", p.gen_year}, {"year", p.year}, {"map", map}}, [&] {
    const Filters g = generate_filters(p, encode_time(p, times));
    return sum(conv2d_per_sample(map, g.year));
  });
  INFO(res.worst);
  CHECK(res.max_rel_error < 1e-4);

  p.gen_month = Tensor::zeros({35, 6}, true);
  CHECK_THROWS_AS(generate_filters(p, encode_time(p, times)), IntegrityError);
}

TEST_CASE("conv_stack") {
  const Dataset ds = toy_dataset();
  ModelParams p = toy_params(ds);
  Rng rng(4);
  const std::size_t b = 2;
  const Tensor x = random_tensor({b, 12}, rng, 1.0, false);
  const std::vector<TimeTriple> times{ds.time_table[0], ds.time_table[3]};
  const Filters f = generate_filters(p, encode_time(p, times));
  const GranularityEmbeddings out = conv_stack(p, x, f, DropoutContext{});
  CHECK(out.year.shape() == Shape{b, 6});
  CHECK(out.day.shape() == Shape{b, 6});

  SUBCASE("batch of two equals two batches of one") {
    double worst = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      const std::vector<Index> row{static_cast<Index>(i)};
      const Filters fi{reshape(gather_rows(reshape(f.year, {b, 18}), row), {1, 2, 1, 3, 3}),
                       reshape(gather_rows(reshape(f.month, {b, 36}), row), {1, 2, 2, 3, 3}),
                       reshape(gather_rows(reshape(f.day, {b, 36}), row), {1, 2, 2, 3, 3})};
      const GranularityEmbeddings one = conv_stack(p, gather_rows(x, row), fi, DropoutContext{});
      for (std::size_t j = 0; j < 6; ++j) {
        worst = std::max(worst, std::fabs(one.year[j] - out.year[i * 6 + j]));
        worst = std::max(worst, std::fabs(one.month[j] - out.month[i * 6 + j]));
        worst = std::max(worst, std::fabs(one.day[j] - out.day[i * 6 + j]));
      }
    }
    CHECK(worst < 1e-10);
  }
  SUBCASE("zero filters and zero projection bias give zeros") {
    zero_out(p.proj_year_bias);
    zero_out(p.proj_month_bias);
    zero_out(p.proj_day_bias);
    const Filters zf{Tensor::zeros({b, 2, 1, 3, 3}), Tensor::zeros({b, 2, 2, 3, 3}), Tensor::zeros({b, 2, 2, 3, 3})};
    const GranularityEmbeddings z = conv_stack(p, x, zf, DropoutContext{});
    for (const Tensor* t : {&z.year, &z.month, &z.day})
      for (double v : t->values()) CHECK(v == 0.0);
  }
  SUBCASE("changing only the day leaves x_y unchanged") {
    const std::vector<TimeTriple> a{{0, 0, 0}}, c{{0, 0, 2}};
    const Tensor x1 = gather_rows(x, std::vector<Index>{0});
    const GranularityEmbeddings ea = conv_stack(p, x1, generate_filters(p, encode_time(p, a)), DropoutContext{});
    const GranularityEmbeddings ec = conv_stack(p, x1, generate_filters(p, encode_time(p, c)), DropoutContext{});
    for (std::size_t j = 0; j < 6; ++j) CHECK(ea.year[j] == ec.year[j]);
    bool differs = false;
    for (std::size_t j = 0; j < 6; ++j) differs = differs || ea.day[j] != ec.day[j];
    CHECK(differs);
  }
  CHECK_THROWS_AS(conv_stack(p, Tensor::zeros({b, 10}), f, DropoutContext{}), IntegrityError);
}

TEST_CASE("adaptive weights and fusion") {
  const Dataset ds = toy_dataset();
  ModelParams p = toy_params(ds);
  const TimeEncoding enc = encode_time(p, ds.time_table);

  const Tensor w = adaptive_weights(p, enc);
  for (std::size_t i = 0; i < ds.num_timestamps(); ++i) {
    CHECK(w[i * 3] + w[i * 3 + 1] + w[i * 3 + 2] == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t k = 0; k < 3; ++k) CHECK(w[i * 3 + k] > 0.0);
  }
  const Tensor uniform = uniform_weights(4);
  for (double v : uniform.values()) CHECK(v == 1.0 / 3.0);

  SUBCASE("zero gate rows give uniform weights") {
    zero_out(p.gate_year);
    zero_out(p.gate_month);
    zero_out(p.gate_day);
    const Tensor w0 = adaptive_weights(p, enc);
    for (double v : w0.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("logits (0, ln 2, ln 4)") {
    // Unit-vector embeddings pick out the first gate component.
    TimeEncoding e;
    e.year = Tensor::from({1, 2}, {1, 0});
    e.month = Tensor::from({1, 2}, {1, 0});
    e.day = Tensor::from({1, 2}, {1, 0});
    ModelParams q;
    q.gate_year = Tensor::from({1, 2}, {0.0, 5.0});
    q.gate_month = Tensor::from({1, 2}, {std::log(2.0), -1.0});
    q.gate_day = Tensor::from({1, 2}, {std::log(4.0), 2.0});
    const Tensor s = adaptive_weights(q, e);
    CHECK(s[0] == doctest::Approx(1.0 / 7).epsilon(1e-14));
    CHECK(s[1] == doctest::Approx(2.0 / 7).epsilon(1e-14));
    CHECK(s[2] == doctest::Approx(4.0 / 7).epsilon(1e-14));
  }
  SUBCASE("shared logit shift leaves weights unchanged") {
    // Shifting every logit by c: add c to the first gate entry of each row when the first
    // embedding component is 1.
    TimeEncoding e;
    e.year = Tensor::from({1, 2}, {1, 0.3});
    e.month = Tensor::from({1, 2}, {1, -0.7});
    e.day = Tensor::from({1, 2}, {1, 0.1});
    ModelParams q;
    q.gate_year = Tensor::from({1, 2}, {0.2, 1.0});
    q.gate_month = Tensor::from({1, 2}, {-0.4, 0.5});
    q.gate_day = Tensor::from({1, 2}, {0.9, -2.0});
    const Tensor base = adaptive_weights(q, e);
    for (Tensor* g : {&q.gate_year, &q.gate_month, &q.gate_day}) g->mutable_values()[0] += 7.5;
    const Tensor shifted = adaptive_weights(q, e);
    for (std::size_t k = 0; k < 3; ++k) CHECK(shifted[k] == doctest::Approx(base[k]).epsilon(1e-13));
  }
  SUBCASE("fuse") {
    GranularityEmbeddings g{Tensor::from({1, 3}, {1, -2, 3}), Tensor::from({1, 3}, {5, 5, 5}),
                            Tensor::from({1, 3}, {-1, -1, -1})};
    const Tensor one_hot = fuse(g, Tensor::from({1, 3}, {1, 0, 0}));
    CHECK(one_hot[0] == 1.0);
    CHECK(one_hot[1] == 0.0);
    CHECK(one_hot[2] == 3.0);
    const Tensor v = Tensor::from({1, 3}, {0.5, -1.5, 2.0});
    const Tensor same = fuse({v, v, v}, Tensor::from({1, 3}, {0.2, 0.3, 0.5}));
    CHECK(same[0] == doctest::Approx(0.5));
    CHECK(same[1] == 0.0);
    CHECK(same[2] == doctest::Approx(2.0));
    const Tensor neg = fuse({g.day, g.day, g.day}, Tensor::from({1, 3}, {0.1, 0.1, 0.8}));
    for (double x : neg.values()) CHECK(x == 0.0);
  }
}

TEST_CASE("scoring") {
  Rng rng(6);
  const Tensor x = random_tensor({3, 4}, rng, 1.0, false);
  const Tensor e = random_tensor({5, 4}, rng, 1.0, false);
  const Tensor logits = score_logits(x, e);
  const Tensor p = score_all(x, e);
  CHECK(p.shape() == Shape{3, 5});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 5; ++k) {
      double dot = 0.0;
      for (std::size_t j = 0; j < 4; ++j) dot += x[i * 4 + j] * e[k * 4 + j];
      CHECK(logits[i * 5 + k] == doctest::Approx(dot).epsilon(1e-14));
      CHECK(p[i * 5 + k] > 0.0);
      CHECK(p[i * 5 + k] < 1.0);
    }
  const Tensor half = score_all(Tensor::zeros({2, 4}), e);
  for (double v : half.values()) CHECK(v == 0.5);
}

TEST_CASE("main loss") {
  const std::vector<Index> gold0{0};
  const std::vector<Index> neg1{1};
  CHECK(main_loss(Tensor::from({1, 2}, {0.5, 0.5}), gold0, neg1).item() ==
        doctest::Approx(2 * std::log(2.0)).epsilon(1e-15));
  CHECK(main_loss(Tensor::from({1, 2}, {1.0, 0.0}), gold0, neg1).item() < 1e-6);

  SUBCASE("matches a brute-force BCE on a toy batch") {
    Rng rng(7);
    std::vector<std::vector<double>> probs(3, std::vector<double>(4));
    std::vector<double> flat;
    for (auto& row : probs)
      for (double& v : row) {
        v = rng.uniform(0.01, 0.99);
        flat.push_back(v);
      }
    const std::vector<int> gold{2, 0, 3};
    const std::vector<std::vector<int>> negs{{0, 1, 3}, {1, 2, 3}, {0, 1, 2}};
    std::vector<Index> g(gold.begin(), gold.end()), n;
    for (const auto& row : negs) n.insert(n.end(), row.begin(), row.end());
    const double got = main_loss(Tensor::from({3, 4}, flat), g, n).item();
    CHECK(std::fabs(got - lgre::testing::brute_force_bce(probs, gold, negs)) < 1e-12);

    // Order of negatives is irrelevant.
    std::vector<Index> reordered{3, 1, 0, 2, 3, 1, 1, 2, 0};
    CHECK(main_loss(Tensor::from({3, 4}, flat), g, reordered).item() == doctest::Approx(got).epsilon(1e-15));

    // Literal weighting multiplies the negative sum by n.
    double literal = 0.0;
    for (std::size_t q = 0; q < 3; ++q) {
      double term = -std::log(probs[q][static_cast<std::size_t>(gold[q])]);
      for (int e : negs[q]) term -= 3.0 * std::log(1.0 - probs[q][static_cast<std::size_t>(e)]);
      literal += term / 3.0;
    }
    CHECK(main_loss(Tensor::from({3, 4}, flat), g, n, NegativeWeighting::literal).item() ==
          doctest::Approx(literal).epsilon(1e-12));
  }
  SUBCASE("decreasing the gold probability increases the loss") {
    double prev = -1.0;
    for (double pg : {0.9, 0.7, 0.4, 0.1}) {
      const double l = main_loss(Tensor::from({1, 3}, {pg, 0.3, 0.2}), gold0, std::vector<Index>{1, 2}).item();
      CHECK(l > prev);
      prev = l;
    }
  }
  SUBCASE("gradient") {
    Rng rng(8);
    Tensor logits = random_tensor({2, 4}, rng, 2.0);
    const std::vector<Index> g{1, 3}, n{0, 2, 0, 1};
    const auto res = grad_check({{"logits", logits}}, [&] { return main_loss(sigmoid(logits), g, n); });
    CHECK(res.max_rel_error < 1e-4);
  }
  SUBCASE("non-finite input aborts") {
    CHECK_THROWS_AS(main_loss(Tensor::from({1, 2}, {std::nan(""), 0.5}), gold0, neg1), DivergenceError);
  }
}

TEST_CASE("temporal loss") {
  const Tensor two = Tensor::from({2, 2}, {1, 0, 0, 1});
  CHECK(temporal_loss(two, TemporalMode::smooth).item() == 2.0);
  CHECK(temporal_loss(two, TemporalMode::literal).item() == 0.0);
  CHECK(temporal_loss(Tensor::full({5, 3}, 0.7)).item() == 0.0);
  CHECK(temporal_loss(Tensor::from({1, 2}, {1, 2})).item() == 0.0);
  Rng rng(9);
  Tensor t = random_tensor({5, 3}, rng);
  const auto smooth = grad_check({{"t", t}}, [&] { return temporal_loss(t, TemporalMode::smooth); });
  CHECK(smooth.max_rel_error < 1e-4);
  const auto literal = grad_check({{"t", t}}, [&] { return temporal_loss(t, TemporalMode::literal); });
  CHECK(literal.max_rel_error < 1e-4);
  CHECK(parse_temporal_mode("literal") == TemporalMode::literal);
  CHECK_THROWS_AS(parse_temporal_mode("wavy"), ConfigError);
}

TEST_CASE("combine") {
  const LossBreakdown b = combine(1.0, 2.0, 0.5);
  CHECK(b.total == 2.0);
  CHECK(combine(1.25, 9.0, 0.0).total == 1.25);
  CHECK_THROWS_AS(combine(1.0, 1.0, -1e-3), ConfigError);
}

TEST_CASE("full composed model passes the finite-difference check") {
  const Dataset ds = toy_dataset();
  REQUIRE(ds.num_entities() == 3);
  REQUIRE(ds.num_relations() == 2);
  REQUIRE(ds.num_timestamps() == 4);
  for (const bool no_ru : {false, true}) {
    CAPTURE(no_ru);
    ModelOptions opts;
    opts.no_ru = no_ru;
    const auto point = lgre::testing::smooth_toy_point(ds, opts, 0.1, 1e-4);
    REQUIRE(point.params.parameter_count() > 0);
    const ModelParams& p = point.params;
    const auto res = grad_check(p.named(), [&] { return lgre::testing::toy_loss(p, ds, opts, 0.1); });
    INFO(res.worst);
    CHECK(res.checked == p.parameter_count());
    CHECK(res.max_rel_error < 1e-4);
  }
}

TEST_CASE("a temporal gradient step pulls adjacent time embeddings together") {
  const Dataset ds = toy_dataset();
  ModelParams p = toy_params(ds);
  auto mean_dist = [&] {
    NoGradGuard g;
    const Tensor t = compose_time(p, encode_time(p, ds.time_table));
    double total = 0.0;
    for (std::size_t i = 1; i < ds.num_timestamps(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < 6; ++j) s += std::pow(t[i * 6 + j] - t[(i - 1) * 6 + j], 2);
      total += std::sqrt(s);
    }
    return total / static_cast<double>(ds.num_timestamps() - 1);
  };
  const double before = mean_dist();
  auto time_params = std::vector<std::pair<std::string, Tensor>>{
      {"year", p.year}, {"month", p.month}, {"day", p.day}, {"time_weight", p.time_weight}};
  for (auto& [n, t] : time_params) t.zero_grad();
  temporal_loss(compose_time(p, encode_time(p, ds.time_table))).backward();
  for (auto& [n, t] : time_params) {
    auto v = t.mutable_values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= 0.01 * t.grad()[i];
  }
  CHECK(mean_dist() < before);
}
