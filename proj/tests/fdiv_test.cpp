#include <doctest.h>

#include <cmath>

#include "vdn/fdiv.hpp"
#include "vdn/grad_check.hpp"
#include "vdn/rng.hpp"

using namespace vdn;

TEST_CASE("fenchel conjugate pinned values") {
  CHECK(fenchel_conjugate(-1.0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(fenchel_conjugate(-1.0 / std::exp(1.0)) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fenchel_conjugate(-std::exp(1.0)) == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("fenchel conjugate rejects the closed half-line") {
  CHECK_THROWS_AS(fenchel_conjugate(0.0), DomainError);
  CHECK_THROWS_AS(fenchel_conjugate(1.0), DomainError);
}

TEST_CASE("gf activation output is strictly negative everywhere") {
  Tensor v = Tensor::from_data({5}, {-1e6, -3.0, 0.0, 3.0, 1e6});
  Tensor out = gf_activation(v);
  for (double t : out.data()) CHECK(t < 0.0);
  // Inside the clamp the activation is -exp(-v).
  CHECK(out.at(2) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("dual estimate with the constant critic is zero") {
  std::vector<double> on_p(4, -1.0), on_q(6, -1.0);
  CHECK(dual_estimate(on_p, on_q) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("dual estimate rejects empty samples and positive critics") {
  CHECK_THROWS_AS(dual_estimate({}, {-1.0}), ContractError);
  CHECK_THROWS_AS(dual_estimate({-1.0}, {0.5}), InvariantError);
}

namespace {

double exact_kl(const std::vector<double>& q, const std::vector<double>& p) {
  double out = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) out += q[i] * std::log(q[i] / p[i]);
  return out;
}

std::vector<double> simplex(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  double s = 0.0;
  for (auto& x : v) {
    x = 0.05 - std::log(rng.uniform() + 1e-12);
    s += x;
  }
  for (auto& x : v) x /= s;
  return v;
}

}  // namespace

TEST_CASE("the optimal critic attains the exact divergence") {
  // Discrete P, Q on {0,1,2}; T*(z) = -q(z)/p(z) under exact expectations.
  std::vector<double> p = {0.5, 0.3, 0.2};
  std::vector<double> q = {0.2, 0.5, 0.3};
  std::vector<double> t_star(3);
  for (int i = 0; i < 3; ++i) t_star[i] = -q[i] / p[i];
  const double dual = dual_estimate_weighted(t_star, p, q);
  CHECK(dual == doctest::Approx(exact_kl(q, p)).epsilon(1e-12));
}

TEST_CASE("every critic lower-bounds the exact divergence") {
  Rng rng(77);
  for (int pair = 0; pair < 10; ++pair) {
    auto p = simplex(rng, 3);
    auto q = simplex(rng, 3);
    const double kl = exact_kl(q, p);
    for (int c = 0; c < 100; ++c) {
      std::vector<double> critic(3);
      for (auto& t : critic) t = -std::exp(rng.uniform(-3.0, 3.0));
      CHECK(dual_estimate_weighted(critic, p, q) <= kl + 1e-9);
    }
  }
}

TEST_CASE("l_reg with the constant critic equals zero for any inputs") {
  Rng rng(13);
  Tensor zc = Tensor::from_data({4, 3}, rng.normal_vec(12));
  Tensor prior = Tensor::from_data({4, 3}, rng.normal_vec(12));
  Tensor tags = Tensor::from_data({4, 2}, {1, 0, 0, 1, 1, 0, 0, 1});
  auto constant_critic = [](const Tensor& in) {
    return Tensor::full({in.shape()[0]}, -1.0);
  };
  const double v = l_reg(zc, prior, tags, tags, constant_critic).value();
  CHECK(v == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("l_reg with the critic pinned at -e") {
  Tensor zc = Tensor::zeros({3, 2});
  Tensor prior = Tensor::zeros({3, 2});
  Tensor tags = Tensor::from_data({3, 1}, {1, 1, 1});
  auto critic = [](const Tensor& in) {
    return Tensor::full({in.shape()[0]}, -std::exp(1.0));
  };
  const double v = l_reg(zc, prior, tags, tags, critic).value();
  CHECK(v == doctest::Approx(2.0 - std::exp(1.0)).epsilon(1e-12));
}

TEST_CASE("l_reg gradient w.r.t. encoder codes passes finite differences") {
  Rng rng(99);
  Tensor prior = Tensor::from_data({3, 2}, rng.normal_vec(6));
  Tensor tags = Tensor::from_data({3, 1}, {1, 1, 1});
  Tensor w = Tensor::from_data({3, 1}, rng.normal_vec(3));
  auto critic = [&w](const Tensor& in) {
    return reshape(gf_activation(matmul(in, w)), Shape{in.shape()[0]});
  };
  auto f = [&](const Tensor& zc) { return l_reg(zc, prior, tags, tags, critic); };
  Tensor point = Tensor::from_data({3, 2}, rng.normal_vec(6));
  CHECK(finite_diff_check(f, point, 1e-5) < 1e-5);
}
