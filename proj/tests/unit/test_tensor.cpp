#include <cmath>
#include <numeric>

#include "doctest.h"
#include "lgre/errors.hpp"
#include "lgre/ops.hpp"
#include "lgre/tensor.hpp"
#include "oracles.hpp"

using namespace lgre;
using lgre::testing::grad_check;
using lgre::testing::random_tensor;

namespace {

// Weighted sum with fixed random coefficients so every output element gets a
// distinct upstream gradient.
Tensor probe(const Tensor& y, std::uint64_t seed = 99) {
  Rng rng(seed);
  std::vector<double> w(y.numel());
  for (double& v : w) v = rng.uniform(-1.0, 1.0);
  return sum(mul(y, Tensor::from(y.shape(), w)));
}

void expect_grad_ok(const std::vector<std::pair<std::string, Tensor>>& params, const std::function<Tensor()>& f) {
  const auto r = grad_check(params, f);
  INFO(r.worst);
  CHECK(r.checked > 0);
  CHECK(r.max_rel_error < 1e-4);
}

}  // namespace

TEST_CASE("tensor shape and value contracts") {
  const Tensor t = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.numel() == 6);
  CHECK(t.dim(1) == 3);
  CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(t.item(), DimensionError);
  CHECK_FALSE(t.requires_grad());
  const Tensor p = Tensor::zeros({4}, true);
  CHECK(p.grad().size() == 4);
}

TEST_CASE("matmul examples and errors") {
  const Tensor id = Tensor::from({2, 2}, {1, 0, 0, 1});
  const Tensor m = Tensor::from({2, 2}, {3, -1, 7, 2});
  const Tensor r = matmul(id, m);
  for (std::size_t i = 0; i < 4; ++i) CHECK(r[i] == m[i]);
  CHECK(matmul(Tensor::from({1, 2}, {1, 2}), Tensor::from({2, 1}, {3, 4})).item() == 11.0);
  CHECK_THROWS_AS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), DimensionError);
  try {
    matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("[2x3]") != std::string::npos);
  }
}

TEST_CASE("gradient checks for elementwise and linear-algebra ops") {
  Rng rng(1);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({3, 4}, rng);
  Tensor c = random_tensor({4, 2}, rng);
  Tensor bias = random_tensor({4}, rng);
  Tensor col = random_tensor({3, 1}, rng);

  SUBCASE("sum(A x B) against the matmul example") {
    expect_grad_ok({{"a", a}, {"c", c}}, [&] { return sum(matmul(a, c)); });
  }
  SUBCASE("add sub mul scale add_scalar") {
    expect_grad_ok({{"a", a}, {"b", b}}, [&] {
      return probe(add_scalar(scale(sub(mul(add(a, b), b), a), 1.7), 0.3));
    });
  }
  SUBCASE("matmul_nt transpose linear") {
    Tensor w = random_tensor({2, 4}, rng);
    Tensor lb = random_tensor({2}, rng);
    expect_grad_ok({{"a", a}, {"b", b}, {"w", w}, {"lb", lb}}, [&] {
      return add(probe(matmul_nt(a, b)), add(probe(transpose(a), 5), probe(linear(a, w, lb), 6)));
    });
  }
  SUBCASE("add_row_bias scale_rows row_sum mean") {
    expect_grad_ok({{"a", a}, {"bias", bias}, {"col", col}}, [&] {
      return add(probe(row_sum(scale_rows(add_row_bias(a, bias), col))), mean(square(a)));
    });
  }
  SUBCASE("reshape concat slice") {
    expect_grad_ok({{"a", a}, {"b", b}}, [&] {
      const Tensor cat = concat_cols({a, b});
      return probe(reshape(slice_cols(cat, 2, 7), {5, 3}));
    });
  }
  SUBCASE("gather_rows gather_cols gather_dot") {
    Tensor table = random_tensor({5, 4}, rng);
    const std::vector<std::int32_t> rows{4, 0, 4};
    const std::vector<std::int32_t> cols{0, 3, 1, 1, 2, 0};
    expect_grad_ok({{"table", table}, {"a", a}}, [&] {
      const Tensor g = gather_rows(table, rows);
      return add(add(probe(g), probe(gather_cols(a, cols, 2), 3)), probe(gather_dot(a, table, cols, 2), 4));
    });
  }
}

TEST_CASE("gradient checks for activations and reductions") {
  Rng rng(2);
  Tensor x = random_tensor({4, 5}, rng, 2.0);
  Tensor pos = Tensor::from({6}, {0.2, 0.5, 1.3, 2.0, 0.9, 0.05}, true);
  expect_grad_ok({{"x", x}}, [&] { return probe(relu(x)); });
  expect_grad_ok({{"x", x}}, [&] { return probe(leaky_relu(x)); });
  expect_grad_ok({{"x", x}}, [&] { return probe(sigmoid(x)); });
  expect_grad_ok({{"x", x}}, [&] { return probe(lgre::tanh(x)); });
  expect_grad_ok({{"x", x}}, [&] { return probe(softmax(x)); });
  expect_grad_ok({{"x", x}}, [&] { return probe(softmax(reshape(x, {20}))); });
  expect_grad_ok({{"x", x}}, [&] { return probe(lgre::abs(x)); });
  expect_grad_ok({{"x", x}}, [&] { return probe(clamp(x, -0.5, 0.7)); });
  expect_grad_ok({{"pos", pos}}, [&] { return probe(lgre::log(pos)); });
  expect_grad_ok({{"x", x}}, [&] { return sum(x); });
}

TEST_CASE("activation examples") {
  CHECK(sigmoid(Tensor::scalar(0.0)).item() == 0.5);
  for (double c : {-1e6, -3.0, 0.0, 42.0, 1e6}) {
    const Tensor s = softmax(Tensor::full({3}, c));
    for (double v : s.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  const Tensor s = softmax(Tensor::from({3}, {0.0, std::log(2.0), std::log(4.0)}));
  CHECK(s[0] == doctest::Approx(1.0 / 7).epsilon(1e-14));
  CHECK(s[1] == doctest::Approx(2.0 / 7).epsilon(1e-14));
  CHECK(s[2] == doctest::Approx(4.0 / 7).epsilon(1e-14));
  CHECK(leaky_relu(Tensor::scalar(-2.0)).item() == doctest::Approx(-0.02));
  CHECK(sigmoid(Tensor::scalar(-800.0)).item() >= 0.0);
  CHECK(sigmoid(Tensor::scalar(800.0)).item() == 1.0);
}

TEST_CASE("softmax properties on random rows") {
  Rng rng(3);
  const Tensor x = random_tensor({200, 7}, rng, 30.0, false);
  const Tensor s = softmax(x);
  for (std::size_t i = 0; i < 200; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < 7; ++j) {
      const double v = s[i * 7 + j];
      CHECK(v > 0.0);
      CHECK(v < 1.0);
      total += v;
    }
    CHECK(std::fabs(total - 1.0) < 1e-9);
  }
  const Tensor bad = softmax(Tensor::from({3}, {0.0, std::nan(""), 1.0}));
  CHECK(std::isnan(bad[0]));
}

TEST_CASE("dropout") {
  Rng rng(4);
  const Tensor x = random_tensor({1000}, rng, 1.0, false);
  const Tensor id0 = dropout(x, 0.0, true, rng);
  const Tensor id1 = dropout(x, 0.5, false, rng);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    CHECK(id0[i] == x[i]);
    CHECK(id1[i] == x[i]);
  }
  CHECK_THROWS_AS(dropout(x, 1.0, true, rng), ConfigError);
  CHECK_THROWS_AS(dropout(x, -0.1, true, rng), ConfigError);

  const Tensor ones = Tensor::full({100000}, 1.0);
  const Tensor d = dropout(ones, 0.2, true, rng);
  std::size_t zeros = 0;
  for (double v : d.values()) {
    if (v == 0.0) ++zeros;
    else CHECK(v == doctest::Approx(1.25));
  }
  const double frac = static_cast<double>(zeros) / 1e5;
  CHECK(frac >= 0.19);
  CHECK(frac <= 0.21);

  // Fixed mask: gradient flows only through survivors, scaled by 1/(1-p).
  Tensor p = random_tensor({50}, rng);
  expect_grad_ok({{"p", p}}, [&] {
    Rng fixed(11);
    return probe(dropout(p, 0.3, true, fixed));
  });
}

TEST_CASE("conv2d examples") {
  const Tensor in = Tensor::from({1, 1, 3}, {1, 2, 3});
  const Tensor out = conv2d(in, Tensor::from({1, 1, 1, 1}, {2}));
  CHECK(out.shape() == Shape{1, 1, 3});
  CHECK(out[0] == 2.0);
  CHECK(out[1] == 4.0);
  CHECK(out[2] == 6.0);

  Rng rng(5);
  const Tensor any = random_tensor({2, 4, 5}, rng, 1.0, false);
  const Tensor zero_out = conv2d(any, Tensor::zeros({3, 2, 3, 3}));
  for (double v : zero_out.values()) CHECK(v == 0.0);

  const Tensor ones = conv2d(Tensor::full({1, 3, 3}, 1.0), Tensor::full({1, 1, 3, 3}, 1.0));
  CHECK(ones[4] == 9.0);
  CHECK(ones[0] == 4.0);
  CHECK(ones[2] == 4.0);
  CHECK(ones[6] == 4.0);
  CHECK(ones[8] == 4.0);
  CHECK(ones[1] == 6.0);

  CHECK_THROWS_AS(conv2d(any, Tensor::zeros({1, 2, 2, 2})), ConfigError);
  CHECK_THROWS_AS(conv2d(any, Tensor::zeros({1, 3, 3, 3})), DimensionError);
}

TEST_CASE("conv2d equals the sliding-window oracle") {
  Rng rng(6);
  double worst = 0.0;
  for (std::size_t trial = 0; trial < 30; ++trial) {
    const std::size_t cin = 1 + rng.uniform_int(4), cout = 1 + rng.uniform_int(4);
    const std::size_t h = 1 + rng.uniform_int(8), w = 1 + rng.uniform_int(8);
    const std::size_t k = 1 + 2 * rng.uniform_int(3);
    const Tensor in = random_tensor({cin, h, w}, rng, 1.0, false);
    const Tensor ker = random_tensor({cout, cin, k, k}, rng, 1.0, false);
    const Tensor got = conv2d(in, ker);
    const auto expect = lgre::testing::naive_conv({in.values().begin(), in.values().end()}, cin, h, w,
                                                  {ker.values().begin(), ker.values().end()}, cout, k);
    REQUIRE(got.numel() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) worst = std::max(worst, std::fabs(got[i] - expect[i]));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("per-sample conv equals a loop of single convolutions") {
  Rng rng(7);
  const std::size_t b = 5, cin = 2, cout = 3, h = 2, w = 7, k = 3;
  const Tensor in = random_tensor({b, cin, h, w}, rng, 1.0, false);
  const Tensor ker = random_tensor({b, cout, cin, k, k}, rng, 1.0, false);
  const Tensor got = conv2d_per_sample(in, ker);
  CHECK(got.shape() == Shape{b, cout, h, w});
  double worst = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    std::vector<double> xi(in.values().begin() + i * cin * h * w, in.values().begin() + (i + 1) * cin * h * w);
    std::vector<double> ki(ker.values().begin() + i * cout * cin * k * k,
                           ker.values().begin() + (i + 1) * cout * cin * k * k);
    const auto expect = lgre::testing::naive_conv(xi, cin, h, w, ki, cout, k);
    for (std::size_t j = 0; j < expect.size(); ++j)
      worst = std::max(worst, std::fabs(got[i * cout * h * w + j] - expect[j]));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("conv gradients reach input and kernel") {
  Rng rng(8);
  Tensor in = random_tensor({2, 2, 6}, rng);
  Tensor ker = random_tensor({3, 2, 3, 3}, rng);
  expect_grad_ok({{"in", in}, {"ker", ker}}, [&] { return probe(conv2d(in, ker)); });

  Tensor bin = random_tensor({2, 1, 2, 5}, rng);
  Tensor bker = random_tensor({2, 2, 1, 3, 3}, rng);
  expect_grad_ok({{"bin", bin}, {"bker", bker}}, [&] { return probe(conv2d_per_sample(bin, bker)); });
}

TEST_CASE("composed conv -> flatten -> matmul -> sigmoid") {
  Rng rng(9);
  Tensor in = random_tensor({1, 2, 5}, rng);
  Tensor ker = random_tensor({2, 1, 3, 3}, rng);
  Tensor w = random_tensor({20, 3}, rng, 0.5);
  expect_grad_ok({{"in", in}, {"ker", ker}, {"w", w}}, [&] {
    return probe(sigmoid(matmul(reshape(conv2d(in, ker), {1, 20}), w)));
  });
}

TEST_CASE("backward accumulates across shared uses and NoGradGuard builds no graph") {
  Tensor a = Tensor::from({2}, {1.0, 2.0}, true);
  sum(mul(a, a)).backward();
  CHECK(a.grad()[0] == 2.0);
  CHECK(a.grad()[1] == 4.0);
  sum(a).backward();
  CHECK(a.grad()[0] == 3.0);
  {
    NoGradGuard guard;
    const Tensor y = mul(a, a);
    CHECK_FALSE(y.requires_grad());
  }
  CHECK(grad_enabled());
  CHECK_THROWS_AS(mul(a, a).backward(), DimensionError);
}

TEST_CASE("forward values are deterministic for a fixed seed") {
  auto run = [] {
    Rng rng(10);
    const Tensor x = random_tensor({3, 4}, rng, 1.0, false);
    const Tensor s = softmax(x);
    return std::vector<double>(s.values().begin(), s.values().end());
  };
  CHECK(run() == run());
}

TEST_CASE("f32 mode rounds stored values") {
  set_precision(Precision::f32);
  const Tensor t = Tensor::scalar(0.1);
  set_precision(Precision::f64);
  CHECK(t.item() == static_cast<double>(0.1f));
  CHECK(Tensor::scalar(0.1).item() == 0.1);
}
