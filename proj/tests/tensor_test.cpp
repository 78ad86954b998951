#include <doctest.h>

#include <cmath>

#include "vdn/grad_check.hpp"
#include "vdn/rng.hpp"
#include "vdn/tensor.hpp"

using namespace vdn;

namespace {

Tensor randn(const Shape& shape, Rng& rng, bool requires_grad = false) {
  return Tensor::from_data(shape, rng.normal_vec(shape_size(shape)), requires_grad);
}

}  // namespace

TEST_CASE("add adds elementwise") {
  Tensor a = Tensor::from_data({2}, {1, 2});
  Tensor b = Tensor::from_data({2}, {3, 4});
  Tensor c = add(a, b);
  CHECK(c.data() == std::vector<double>{4, 6});
}

TEST_CASE("matmul by identity is identity") {
  Tensor eye = Tensor::from_data({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tensor v = Tensor::from_data({3, 1}, {2.5, -1.0, 0.25});
  Tensor out = matmul(eye, v);
  CHECK(out.data() == v.data());
}

TEST_CASE("tanh derivative at zero is one") {
  Tensor x = Tensor::from_data({1}, {0.0}, true);
  Tensor y = sum(tanh(x));
  y.backward();
  CHECK(x.grad()[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("backward of sum of squares") {
  Tensor x = Tensor::from_data({3}, {1, 2, 3}, true);
  Tensor loss = sum(mul(x, x));
  loss.backward();
  CHECK(x.grad() == std::vector<double>{2, 4, 6});
}

TEST_CASE("backward of a product routes each factor") {
  Tensor x = Tensor::from_data({1}, {2}, true);
  Tensor y = Tensor::from_data({1}, {5}, true);
  Tensor loss = sum(mul(x, y));
  loss.backward();
  CHECK(x.grad()[0] == 5.0);
  CHECK(y.grad()[0] == 2.0);
}

TEST_CASE("gradients accumulate additively across uses") {
  Tensor x = Tensor::from_data({2}, {1.0, -2.0}, true);
  Tensor loss = add(sum(mul(x, x)), sum(x));  // d/dx = 2x + 1
  loss.backward();
  CHECK(x.grad()[0] == doctest::Approx(3.0));
  CHECK(x.grad()[1] == doctest::Approx(-3.0));
}

TEST_CASE("backward requires a scalar loss") {
  Tensor x = Tensor::from_data({2}, {1, 2}, true);
  Tensor y = mul(x, x);
  CHECK_THROWS_AS(y.backward(), ContractError);
}

TEST_CASE("a tensor without requires_grad never accumulates gradient") {
  Tensor x = Tensor::from_data({2}, {1, 2}, true);
  Tensor c = Tensor::from_data({2}, {3, 4}, false);
  Tensor loss = sum(mul(x, c));
  loss.backward();
  CHECK(c.grad().empty());
  CHECK(x.grad() == std::vector<double>{3, 4});
}

TEST_CASE("shape errors name both shapes") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({3, 2});
  try {
    add(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(2, 3)") != std::string::npos);
    CHECK(msg.find("(3, 2)") != std::string::npos);
  }
}

TEST_CASE("log of a non-positive value is a domain error") {
  CHECK_THROWS_AS(log(Tensor::from_data({1}, {0.0})), DomainError);
  CHECK_THROWS_AS(log(Tensor::from_data({1}, {-3.0})), DomainError);
}

TEST_CASE("div by exact zero is a domain error") {
  Tensor a = Tensor::from_data({1}, {1.0});
  Tensor b = Tensor::from_data({1}, {0.0});
  CHECK_THROWS_AS(div(a, b), DomainError);
}

TEST_CASE("leading-dimension and scalar broadcast work; others do not") {
  Tensor m = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  Tensor row = Tensor::from_data({2}, {10, 20});
  CHECK(add(m, row).data() == std::vector<double>{11, 22, 13, 24});
  Tensor s = Tensor::scalar(1.0);
  CHECK(add(m, s).data() == std::vector<double>{2, 3, 4, 5});
  CHECK(add(s, m).data() == std::vector<double>{2, 3, 4, 5});
  Tensor col = Tensor::from_data({2, 1}, {1, 2});
  CHECK_THROWS_AS(add(m, col), ShapeError);
}

TEST_CASE("broadcast backward reduces over the broadcast dimension") {
  Tensor bias = Tensor::from_data({2}, {1.0, -1.0}, true);
  Tensor m = Tensor::from_data({3, 2}, {1, 2, 3, 4, 5, 6});
  Tensor loss = sum(add(m, bias));
  loss.backward();
  CHECK(bias.grad() == std::vector<double>{3, 3});
}

TEST_CASE("reshape, concat and slice round values through") {
  Tensor m = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor r = reshape(m, {3, 2});
  CHECK(r.shape() == Shape{3, 2});
  CHECK(r.data() == m.data());
  CHECK_THROWS_AS(reshape(m, Shape{4, 2}), ShapeError);

  Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::from_data({2, 1}, {9, 8});
  Tensor cat = concat(a, b, 1);
  CHECK(cat.shape() == Shape{2, 3});
  CHECK(cat.data() == std::vector<double>{1, 2, 9, 3, 4, 8});
  Tensor back = slice(cat, 1, 0, 2);
  CHECK(back.data() == a.data());

  Tensor rows = concat(a, a, 0);
  CHECK(rows.shape() == Shape{4, 2});
  CHECK(slice(rows, 0, 2, 2).data() == a.data());
}

TEST_CASE("select_columns picks one entry per row and routes gradient") {
  Tensor m = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  Tensor out = select_columns(m, {2, 0});
  CHECK(out.data() == std::vector<double>{3, 4});
  sum(out).backward();
  CHECK(m.grad() == std::vector<double>{0, 0, 1, 1, 0, 0});
  CHECK_THROWS_AS(select_columns(m, {3, 0}), ContractError);
}

TEST_CASE("max_axis takes the first argmax subgradient") {
  Tensor m = Tensor::from_data({2, 3}, {1, 5, 5, 7, 2, 3}, true);
  Tensor out = max_axis(m, 1);
  CHECK(out.data() == std::vector<double>{5, 7});
  sum(out).backward();
  CHECK(m.grad() == std::vector<double>{0, 1, 0, 1, 0, 0});
}

TEST_CASE("softmax cross entropy matches log C for uniform logits") {
  Tensor logits = Tensor::zeros({3, 4});
  Tensor loss = softmax_cross_entropy(logits, {0, 1, 3});
  CHECK(loss.value() == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK_THROWS_AS(softmax_cross_entropy(logits, {0, 1, 4}), ContractError);
}

TEST_CASE("relu subgradient at zero is zero") {
  Tensor x = Tensor::from_data({3}, {-1.0, 0.0, 2.0}, true);
  sum(relu(x)).backward();
  CHECK(x.grad() == std::vector<double>{0, 0, 1});
}

TEST_CASE("clamp blocks gradient only outside the open interval") {
  Tensor x = Tensor::from_data({3}, {-31.0, 0.5, 31.0}, true);
  sum(clamp(x, -30.0, 30.0)).backward();
  CHECK(x.grad() == std::vector<double>{0, 1, 0});
}

TEST_CASE("finite_diff_check on sum is exact to 1e-10") {
  Rng rng(7);
  Tensor point = randn({5}, rng);
  const double err = finite_diff_check(
      [](const Tensor& t) { return sum(t); }, point, 1e-5);
  CHECK(err <= 1e-10);
}

TEST_CASE("finite_diff_check on sum of exp at the zero vector") {
  Tensor point = Tensor::zeros({4});
  Tensor x = Tensor::from_data({4}, point.data(), true);
  Tensor loss = sum(exp(x));
  loss.backward();
  for (double g : x.grad()) CHECK(g == doctest::Approx(1.0).epsilon(1e-12));
  const double err = finite_diff_check(
      [](const Tensor& t) { return sum(exp(t)); }, point, 1e-5);
  CHECK(err < 1e-8);
}

TEST_CASE("every registered op passes gradient checks at randomized points") {
  Rng rng(42);
  using Fn = std::function<Tensor(const Tensor&)>;
  // Each op is exercised inside a scalar loss at 10 random points.
  std::vector<std::pair<const char*, Fn>> ops;
  Tensor other = Tensor::from_data({2, 3}, {0.3, -0.7, 1.1, 0.2, -0.4, 0.9});
  Tensor mat = Tensor::from_data({3, 2}, {0.5, -0.2, 0.8, 0.1, -0.6, 0.4});
  ops.emplace_back("add", [other](const Tensor& t) { return sum(add(t, other)); });
  ops.emplace_back("sub", [other](const Tensor& t) { return sum(sub(t, other)); });
  ops.emplace_back("mul", [other](const Tensor& t) { return sum(mul(t, other)); });
  ops.emplace_back("div", [other](const Tensor& t) {
    return sum(div(t, add_scalar(mul(other, other), 0.5)));
  });
  ops.emplace_back("matmul", [mat](const Tensor& t) { return sum(matmul(t, mat)); });
  ops.emplace_back("exp", [](const Tensor& t) { return sum(exp(t)); });
  ops.emplace_back("log", [](const Tensor& t) {
    return sum(log(add_scalar(mul(t, t), 0.5)));
  });
  ops.emplace_back("tanh", [](const Tensor& t) { return sum(tanh(t)); });
  ops.emplace_back("relu", [](const Tensor& t) { return sum(relu(t)); });
  ops.emplace_back("leaky_relu",
                   [](const Tensor& t) { return sum(leaky_relu(t, 0.2)); });
  ops.emplace_back("softplus", [](const Tensor& t) { return sum(softplus(t)); });
  ops.emplace_back("abs", [](const Tensor& t) { return sum(abs(t)); });
  ops.emplace_back("neg", [](const Tensor& t) { return sum(neg(t)); });
  ops.emplace_back("square", [](const Tensor& t) { return sum(square(t)); });
  ops.emplace_back("mean", [](const Tensor& t) { return mean(t); });
  ops.emplace_back("sum_axis0", [](const Tensor& t) {
    return sum(mul(sum_axis(t, 0), sum_axis(t, 0)));
  });
  ops.emplace_back("sum_axis1", [](const Tensor& t) {
    return sum(mul(sum_axis(t, 1), sum_axis(t, 1)));
  });
  ops.emplace_back("max_axis", [](const Tensor& t) { return sum(max_axis(t, 1)); });
  ops.emplace_back("broadcast", [](const Tensor& t) {
    Tensor row = sum_axis(t, 0);
    return sum(mul(broadcast_to(row, {2, 3}), row));
  });
  ops.emplace_back("reshape", [](const Tensor& t) {
    return sum(mul(reshape(t, {3, 2}), reshape(t, {3, 2})));
  });
  ops.emplace_back("concat", [other](const Tensor& t) {
    return sum(mul(concat(t, other, 1), concat(other, t, 1)));
  });
  ops.emplace_back("slice", [](const Tensor& t) {
    return sum(mul(slice(t, 1, 1, 2), slice(t, 1, 0, 2)));
  });
  ops.emplace_back("select_columns", [](const Tensor& t) {
    return sum(select_columns(t, {1, 2}));
  });
  ops.emplace_back("take_rows", [](const Tensor& t) {
    return sum(mul(take_rows(t, {1, 0}), t));
  });
  ops.emplace_back("softmax_cross_entropy", [](const Tensor& t) {
    return softmax_cross_entropy(t, {0, 2});
  });
  ops.emplace_back("clamp", [](const Tensor& t) {
    return sum(clamp(t, -0.9, 0.9));
  });
  ops.emplace_back("scale", [](const Tensor& t) { return scale(sum(t), 1.7); });

  for (auto& [name, fn] : ops) {
    INFO("op: " << name);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      // Keep points away from the relu/abs/max kinks and clamp edges.
      std::vector<double> vals = rng.normal_vec(6);
      for (auto& v : vals) {
        if (std::fabs(v) < 0.05) v += 0.1;
        if (std::fabs(std::fabs(v) - 0.9) < 0.05) v += 0.1;
      }
      Tensor point = Tensor::from_data({2, 3}, vals);
      worst = std::max(worst, finite_diff_check(fn, point, 1e-5));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("randomized MLP gradient matches central differences") {
  Rng rng(11);
  // 12 parameters: (3x2) weights + (2) bias + (2x1) head + 2 extras via bias2.
  Tensor w1 = randn({3, 2}, rng, true);
  Tensor b1 = randn({2}, rng, true);
  Tensor w2 = randn({2, 1}, rng, true);
  Tensor b2 = randn({1}, rng, true);
  Tensor x = randn({4, 3}, rng);
  auto loss_fn = [&]() {
    Tensor h = tanh(add(matmul(x, w1), b1));
    Tensor out = add(matmul(h, w2), b2);
    return mean(mul(out, out));
  };
  const double err = finite_diff_check_params(loss_fn, {w1, b1, w2, b2}, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("backward of a power-of-two multiple is exactly scaled") {
  Rng rng(3);
  std::vector<double> vals = rng.normal_vec(6);
  Tensor x1 = Tensor::from_data({6}, vals, true);
  Tensor x2 = Tensor::from_data({6}, vals, true);
  auto f = [](const Tensor& t) {
    return sum(mul(tanh(t), exp(scale(t, 0.5))));
  };
  f(x1).backward();
  scale(f(x2), 2.0).backward();
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(x2.grad()[i] == 2.0 * x1.grad()[i]);  // exact, power of two
  }
}

TEST_CASE("identical seeds produce bit-identical forward and backward") {
  auto run = [] {
    Rng rng(123);
    Tensor w = Tensor::from_data({4, 4}, rng.normal_vec(16), true);
    Tensor x = Tensor::from_data({2, 4}, rng.normal_vec(8));
    Tensor loss = mean(square(tanh(matmul(x, w))));
    loss.backward();
    return std::make_pair(loss.value(), w.grad());
  };
  auto [l1, g1] = run();
  auto [l2, g2] = run();
  CHECK(l1 == l2);
  CHECK(g1 == g2);
}
