#include <doctest.h>

#include <cmath>

#include "vdn/bounds.hpp"
#include "vdn/errors.hpp"

using namespace vdn;

TEST_CASE("lemma identity holds on random worlds") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    DiscreteWorld w = random_world(seed);
    for (std::size_t x = 0; x < w.nx; ++x) {
      CHECK(check_lemma1(w, x) < 1e-10);
    }
  }
}

TEST_CASE("lemma identity with q equal to the true posterior") {
  DiscreteWorld w = random_world(5);
  for (std::size_t x = 0; x < w.nx; ++x) {
    auto post = w.p_zc_posterior(x);
    for (std::size_t c = 0; c < w.nzc; ++c) w.q_zc_given_x[x * w.nzc + c] = post[c];
  }
  for (std::size_t x = 0; x < w.nx; ++x) {
    CHECK(check_lemma1(w, x) < 1e-12);
    // The upper bound is still valid and the left side is exactly zero.
    CHECK(check_thm1(w, x) >= -1e-12);
  }
}

TEST_CASE("theorem 1 slack is non-negative on random worlds") {
  double min_slack = 1e300;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    DiscreteWorld w = random_world(seed);
    for (std::size_t x = 0; x < w.nx; ++x) {
      min_slack = std::min(min_slack, check_thm1(w, x));
    }
  }
  CHECK(min_slack >= -1e-10);
}

TEST_CASE("theorem 1 slack vanishes when the likelihood ignores z_d") {
  // p(x|zc,zd) independent of zd makes the Jensen step exact.
  DiscreteWorld w = random_world(3);
  for (std::size_t c = 0; c < w.nzc; ++c) {
    for (std::size_t d = 1; d < w.nzd; ++d) {
      for (std::size_t x = 0; x < w.nx; ++x) {
        w.likelihood[(c * w.nzd + d) * w.nx + x] =
            w.likelihood[(c * w.nzd + 0) * w.nx + x];
      }
    }
  }
  for (std::size_t x = 0; x < w.nx; ++x) {
    CHECK(std::fabs(check_thm1(w, x)) < 1e-10);
  }
}

TEST_CASE("the independence gate rejects correlated worlds") {
  DiscreteWorld w = random_world_correlated(1);
  CHECK_THROWS_AS(w.validate(), InvariantError);
  CHECK_THROWS_AS(check_thm1(w, 0), InvariantError);
  CHECK_THROWS_AS(check_lemma1(w, 0), InvariantError);
}

TEST_CASE("correlated worlds can violate the theorem 1 bound") {
  // The gate is load-bearing: without it, some correlated world shows a
  // negative slack, which must be reported as a rejected world rather than
  // a theorem counterexample.
  double worst = 1e300;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    DiscreteWorld w = random_world_correlated(seed);
    for (std::size_t x = 0; x < w.nx; ++x) {
      worst = std::min(worst, detail::thm1_slack_ungated(w, x));
    }
  }
  CHECK(worst < -1e-6);
}

TEST_CASE("relaxation collapses to zero when q ignores x") {
  DiscreteWorld w = random_world(11);
  // Same conditional for every x: the aggregate equals it and M = 1.
  for (std::size_t x = 1; x < w.nx; ++x) {
    for (std::size_t c = 0; c < w.nzc; ++c) {
      w.q_zc_given_x[x * w.nzc + c] = w.q_zc_given_x[c];
    }
  }
  for (std::size_t x = 0; x < w.nx; ++x) {
    RelaxResult r = check_relaxation(w, x);
    CHECK(r.m == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(r.slack) < 1e-10);
  }
}

TEST_CASE("relaxation bound admits counterexamples at the exact sup ratio") {
  // Two-point world built so the conditional tilts toward the region where
  // the aggregate already exceeds the prior. The bound as stated goes
  // negative here; the verifier must report it rather than hide it.
  DiscreteWorld w;
  w.nx = 2;
  w.nzc = 2;
  w.nzd = 1;
  w.p_z_joint = {0.5, 0.5};
  // p(x|zc): rows zc=0 -> (0.6, 0.4), zc=1 -> (0.4, 0.6); p(x) = (0.5, 0.5).
  w.likelihood = {0.6, 0.4, 0.4, 0.6};
  w.q_zc_given_x = {0.95, 0.05, 0.85, 0.15};
  w.validate();
  RelaxResult r = check_relaxation(w, 0);
  CHECK(r.m == doctest::Approx(0.95 / 0.9).epsilon(1e-12));
  CHECK(r.slack < -1e-3);  // documented defect of the written bound
  // Direct arithmetic cross-check of the same quantity.
  auto kl2 = [](double a0, double a1, double b0, double b1) {
    return a0 * std::log(a0 / b0) + a1 * std::log(a1 / b1);
  };
  const double m = 0.95 / 0.9;
  const double expected =
      m * kl2(0.9, 0.1, 0.5, 0.5) + m * std::log(m) - kl2(0.95, 0.05, 0.5, 0.5);
  CHECK(r.slack == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("coupled worlds sweep the disentanglement ratio monotonically in effect") {
  std::vector<double> ratios, ms;
  for (std::uint64_t i = 0; i < 60; ++i) {
    const double coupling = static_cast<double>(i) / 59.0;
    DiscreteWorld w = random_world_coupled(1000 + i, coupling);
    w.validate();
    double world_m = 0.0, ratio = 0.0;
    for (std::size_t x = 0; x < w.nx; ++x) {
      RelaxResult r = check_relaxation(w, x);
      world_m = std::max(world_m, r.m);
      ratio = std::max(ratio, r.disentanglement_ratio);
    }
    ratios.push_back(ratio);
    ms.push_back(world_m);
  }
  CHECK(spearman(ratios, ms) > 0.5);
}

TEST_CASE("theorem 2 with the target equal to its single source") {
  Thm2Instance inst = random_thm2_instance(4);
  // Rebuild as a singleton: target conditional copied from the first source.
  DiscreteWorld& w = inst.world;
  const std::size_t s = inst.source_xs[0];
  for (std::size_t c = 0; c < w.nzc; ++c) {
    w.q_zc_given_x[inst.target_x * w.nzc + c] = w.q_zc(s, c);
  }
  const double slack = check_thm2(w, inst.target_x, {s}, {1.0});
  CHECK(std::fabs(slack) < 1e-12);
}

TEST_CASE("constructed feasible triples have non-negative slack") {
  double min_slack = 1e300;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Thm2Instance inst = random_thm2_instance(seed);
    min_slack = std::min(min_slack,
                         check_thm2(inst.world, inst.target_x, inst.source_xs,
                                    inst.betas));
  }
  CHECK(min_slack >= -1e-10);
}

TEST_CASE("domination violations name the violating z_c") {
  Thm2Instance inst = random_thm2_instance(6);
  std::vector<double> tiny(inst.betas.size(), 1e-6);
  try {
    check_thm2(inst.world, inst.target_x, inst.source_xs, tiny);
    FAIL("expected InvariantError");
  } catch (const InvariantError& e) {
    CHECK(std::string(e.what()).find("z_c") != std::string::npos);
  }
}

TEST_CASE("posterior mismatch between target and source is rejected") {
  Thm2Instance inst = random_thm2_instance(7);
  // An x outside the proportional group has a different posterior.
  const std::size_t outsider = inst.world.nx - 1;
  REQUIRE(outsider > inst.source_xs.back());
  std::vector<double> betas{5.0};
  CHECK_THROWS_AS(
      check_thm2(inst.world, inst.target_x, {outsider}, betas), ContractError);
}

TEST_CASE("find_feasible_beta returns the singleton for an exact match") {
  std::vector<double> p_star = {0.4, 0.35, 0.25};
  std::vector<double> q = {0.3, 0.45, 0.25};
  FeasibleBeta fb = find_feasible_beta(q, {q}, p_star);
  REQUIRE(fb.indices.size() == 1);
  CHECK(fb.indices[0] == 0);
  CHECK(fb.betas[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("find_feasible_beta always returns a dominating witness") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Rng rng(seed);
    auto simplex = [&rng](std::size_t n) {
      std::vector<double> v(n);
      double s = 0.0;
      for (auto& x : v) {
        x = 0.02 - std::log(rng.uniform() + 1e-12);
        s += x;
      }
      for (auto& x : v) x /= s;
      return v;
    };
    const std::size_t nz = 4;
    auto q_t = simplex(nz);
    auto p = simplex(nz);
    std::vector<std::vector<double>> sources;
    for (int i = 0; i < 4; ++i) sources.push_back(simplex(nz));
    FeasibleBeta fb = find_feasible_beta(q_t, sources, p);
    for (std::size_t c = 0; c < nz; ++c) {
      double cover = 0.0;
      for (std::size_t k = 0; k < fb.indices.size(); ++k) {
        cover += fb.betas[k] * sources[fb.indices[k]][c];
      }
      CHECK(q_t[c] <= cover * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("more sources never worsen the returned bound") {
  Rng rng(77);
  auto simplex = [&rng](std::size_t n) {
    std::vector<double> v(n);
    double s = 0.0;
    for (auto& x : v) {
      x = 0.02 - std::log(rng.uniform() + 1e-12);
      s += x;
    }
    for (auto& x : v) x /= s;
    return v;
  };
  const std::size_t nz = 5;
  auto q_t = simplex(nz);
  auto p = simplex(nz);
  std::vector<std::vector<double>> sources;
  double prev = 1e300;
  for (int i = 0; i < 6; ++i) {
    sources.push_back(simplex(nz));
    FeasibleBeta fb = find_feasible_beta(q_t, sources, p);
    CHECK(fb.bound <= prev + 1e-12);
    prev = fb.bound;
  }
}

TEST_CASE("suite runner covers all four suites") {
  SuiteReport lem = run_suite("lemma1", 10, 1);
  CHECK(lem.pass);
  CHECK(lem.worst_residual < 1e-10);
  SuiteReport t1 = run_suite("thm1", 10, 1);
  CHECK(t1.pass);
  SuiteReport t2 = run_suite("thm2", 10, 1);
  CHECK(t2.pass);
  SuiteReport rel = run_suite("relax", 60, 1);
  CHECK(rel.spearman_ratio_m > 0.0);  // the tightness trend itself
  CHECK(rel.checks > 0);
  CHECK_THROWS_AS(run_suite("nope", 10, 1), ContractError);
  CHECK_THROWS_AS(run_suite("thm1", 0, 1), ContractError);
}

TEST_CASE("spearman rank correlation sanity") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {9, 7, 5, 3}) == doctest::Approx(-1.0));
}

TEST_CASE("non-normalized worlds are rejected at the invariant gate") {
  DiscreteWorld w = random_world(9);
  w.p_z_joint[0] += 0.25;
  CHECK_THROWS_AS(w.validate(), InvariantError);
  CHECK_THROWS_AS(check_lemma1(w, 0), InvariantError);
}
