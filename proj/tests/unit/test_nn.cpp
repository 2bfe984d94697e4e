#include <cmath>

#include "doctest.h"
#include "lgre/errors.hpp"
#include "lgre/nn.hpp"
#include "lgre/ops.hpp"
#include "lgre/optim.hpp"
#include "oracles.hpp"

using namespace lgre;
using lgre::testing::grad_check;
using lgre::testing::random_tensor;

TEST_CASE("zero-weight GRU halves the hidden state") {
  const GruWeights w = GruWeights::zeros(4, false);
  const Tensor x = Tensor::from({4}, {1, -2, 3, 0.5});
  const Tensor h = Tensor::from({4}, {0.8, -0.4, 2.0, 1.0});
  const Tensor out = gru_cell(x, h, w);
  for (std::size_t i = 0; i < 4; ++i) CHECK(out[i] == doctest::Approx(0.5 * h[i]).epsilon(1e-15));
}

TEST_CASE("GRU cell matches a hand-written reference") {
  const std::size_t d = 3;
  const GruWeights w = GruWeights::xavier(d, 3);
  Rng rng(1);
  const Tensor x = random_tensor({d}, rng, 1.0, false);
  const Tensor h = random_tensor({d}, rng, 1.0, false);
  auto mv = [&](const Tensor& m, const Tensor& v, std::size_t i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) acc += m[i * d + j] * v[j];
    return acc;
  };
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  std::vector<double> r(d);
  for (std::size_t i = 0; i < d; ++i) r[i] = sig(mv(w.w_r, x, i) + mv(w.u_r, h, i) + w.b_r[i]);
  std::vector<double> rh(d);
  for (std::size_t i = 0; i < d; ++i) rh[i] = r[i] * h[i];
  const Tensor rh_t = Tensor::from({d}, rh);
  const Tensor out = gru_cell(x, h, w);
  for (std::size_t i = 0; i < d; ++i) {
    const double z = sig(mv(w.w_z, x, i) + mv(w.u_z, h, i) + w.b_z[i]);
    const double c = std::tanh(mv(w.w_h, x, i) + mv(w.u_h, rh_t, i) + w.b_h[i]);
    CHECK(out[i] == doctest::Approx((1 - z) * h[i] + z * c).epsilon(1e-13));
  }
}

TEST_CASE("GRU gradients and sequence shape") {
  const std::size_t d = 3;
  GruWeights w = GruWeights::xavier(d, 5);
  // Non-zero biases so bias gradients are exercised at a generic point.
  Rng rng(2);
  for (Tensor* b : {&w.b_z, &w.b_r, &w.b_h})
    for (double& v : b->mutable_values()) v = rng.uniform(-0.5, 0.5);
  Tensor x1 = random_tensor({2, d}, rng), x2 = random_tensor({2, d}, rng), x3 = random_tensor({2, d}, rng);
  const Tensor h0 = Tensor::zeros({2, d});
  const auto states = gru_sequence({x1, x2, x3}, h0, w);
  REQUIRE(states.size() == 3);
  for (const Tensor& s : states) CHECK(s.shape() == Shape{2, d});

  auto params = w.named();
  params.emplace_back("x1", x1);
  params.emplace_back("x2", x2);
  const auto res = grad_check(params, [&] {
    const auto hs = gru_sequence({x1, x2, x3}, h0, w);
    return add(sum(mul(hs[2], hs[2])), sum(hs[1]));
  });
  INFO(res.worst);
  CHECK(res.max_rel_error < 1e-4);

  CHECK_THROWS_AS(gru_cell(Tensor::zeros({4}), Tensor::zeros({3}), w), DimensionError);
}

TEST_CASE("xavier init") {
  CHECK(xavier_bound({200, 200}) == doctest::Approx(std::sqrt(6.0 / 400.0)));
  CHECK(xavier_bound({200, 200}) == doctest::Approx(0.12247).epsilon(1e-4));
  const Tensor a = xavier_init({300, 400}, 17);
  const Tensor b = xavier_init({300, 400}, 17);
  const double bound = xavier_bound({300, 400});
  bool within = true, same = true;
  double lo = 1.0, hi = -1.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    within = within && std::fabs(a[i]) <= bound;
    same = same && a[i] == b[i];
    lo = std::min(lo, a[i]);
    hi = std::max(hi, a[i]);
  }
  CHECK(a.numel() >= 100000);
  CHECK(within);
  CHECK(same);
  CHECK(lo < -0.99 * bound);
  CHECK(hi > 0.99 * bound);
  CHECK(xavier_init({10, 10}, 18)[0] != xavier_init({10, 10}, 17)[0]);
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Tensor p = Tensor::from({3}, {1, 2, 3}, true);
    Adam opt({{"p", p}});
    opt.step();
    CHECK(p[0] == 1.0);
    CHECK(p[2] == 3.0);
    CHECK(opt.state().step == 1);
  }
  SUBCASE("first step moves by lr against the gradient sign") {
    for (double g : {3.0, -0.002, 250.0}) {
      Tensor p = Tensor::from({1}, {0.5}, true);
      Adam opt({{"p", p}}, AdamOptions{0.001});
      p.mutable_grad()[0] = g;
      opt.step();
      const double expected = 0.5 - 0.001 * (g > 0 ? 1 : -1);
      CHECK(p[0] == doctest::Approx(expected).epsilon(1e-7));
      CHECK(p.grad()[0] == 0.0);
    }
  }
  SUBCASE("matches the closed-form update over several steps") {
    Tensor p = Tensor::from({1}, {1.0}, true);
    AdamOptions o{0.01, 0.9, 0.999, 1e-8};
    Adam opt({{"p", p}}, o);
    double m = 0, v = 0, x = 1.0;
    for (int t = 1; t <= 5; ++t) {
      const double g = 2 * x;
      p.mutable_grad()[0] = g;
      opt.step();
      m = o.beta1 * m + (1 - o.beta1) * g;
      v = o.beta2 * v + (1 - o.beta2) * g * g;
      x -= o.lr * (m / (1 - std::pow(o.beta1, t))) / (std::sqrt(v / (1 - std::pow(o.beta2, t))) + o.eps);
      CHECK(p[0] == doctest::Approx(x).epsilon(1e-14));
    }
    CHECK(opt.state().step == 5);
  }
  SUBCASE("identical runs are bit-identical") {
    auto run = [] {
      Tensor p = xavier_init({4, 4}, 3);
      Adam opt({{"p", p}});
      for (int i = 0; i < 10; ++i) {
        sum(mul(p, p)).backward();
        opt.step();
      }
      return std::vector<double>(p.values().begin(), p.values().end());
    };
    CHECK(run() == run());
  }
  SUBCASE("contract errors") {
    Tensor frozen = Tensor::zeros({2});
    CHECK_THROWS_AS(Adam({{"f", frozen}}), IntegrityError);
    Tensor p = Tensor::zeros({2}, true);
    CHECK_THROWS_AS(Adam({{"p", p}, {"q", p}}), IntegrityError);
    Adam opt({{"p", p}});
    p.node()->grad.clear();
    CHECK_THROWS_AS(opt.step(), IntegrityError);
  }
}
