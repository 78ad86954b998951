#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vdn/rng.hpp"

namespace vdn {

// A fully enumerable joint model p(x, z_c, z_d) plus a candidate encoder
// conditional q(z_c | x). Every expectation in the theory checks becomes an
// exact sum over these supports, so tolerances are 1e-10 instead of
// statistical. The generative side factorizes p(z_c, z_d) * p(x | z_c, z_d);
// the z_c/z_d joint is stored in full so the independence invariant is a
// real check, not a tautology.
struct DiscreteWorld {
  std::size_t nx = 0, nzc = 0, nzd = 0;
  std::vector<double> p_z_joint;     // [zc * nzd + zd]
  std::vector<double> likelihood;    // [ (zc * nzd + zd) * nx + x ] = p(x|zc,zd)
  std::vector<double> q_zc_given_x;  // [x * nzc + zc], > 0 everywhere
  std::vector<double> q_zd_given_x;  // optional, [x * nzd + zd]
  std::uint64_t seed = 0;            // provenance for replay

  double p_joint(std::size_t zc, std::size_t zd) const {
    return p_z_joint[zc * nzd + zd];
  }
  double like(std::size_t zc, std::size_t zd, std::size_t x) const {
    return likelihood[(zc * nzd + zd) * nx + x];
  }
  double q_zc(std::size_t x, std::size_t zc) const {
    return q_zc_given_x[x * nzc + zc];
  }

  std::vector<double> p_zc_marginal() const;
  std::vector<double> p_zd_marginal() const;
  std::vector<double> p_x() const;                         // [x]
  std::vector<double> p_x_given_zc(std::size_t x) const;   // [zc], p(x|zc)
  std::vector<double> p_zc_posterior(std::size_t x) const; // [zc], p(zc|x)
  // Aggregate encoder marginal q(zc) = sum_x p(x) q(zc|x).
  std::vector<double> q_zc_marginal() const;

  // Normalization, positivity of q, and z_c/z_d independence within 1e-12.
  // Throws InvariantError naming the failure; every check gates on this.
  void validate() const;
};

// exact sum_i a_i log(a_i / b_i); requires b_i > 0 wherever a_i > 0.
double kl_discrete(const std::vector<double>& a, const std::vector<double>& b);

// Lemma identity residual at x:
//   | D(Q(zc|x) || P(zc|x))
//     - [ D(Q(zc|x) || P(zc)) - E_{zc~Q}[log p(x|zc)] + log p(x) ] |
double check_lemma1(const DiscreteWorld& w, std::size_t x);

// Evidence-upper-bound slack at x with prior P_d over z_d (defaults to the
// true marginal). Non-negative for every independent world.
double check_thm1(const DiscreteWorld& w, std::size_t x,
                  const std::vector<double>* p_d = nullptr);

struct RelaxResult {
  double m = 0.0;      // exact sup ratio q(x|zc) / q(x)
  double slack = 0.0;  // M D(Q(zc)||P(zc)) + M log M - D(Q(zc|x)||P(zc))
  double disentanglement_ratio = 0.0;  // sup q(zc|zd) / q(zc); 0 if no q_zd
};
RelaxResult check_relaxation(const DiscreteWorld& w, std::size_t x);

// Target-domain bound slack for a constructed feasible triple. Verifies the
// pointwise domination q(zc|x_t) <= sum_i beta_i q(zc|x_i) (else throws
// InvariantError naming the violating z_c) and the equality of ground-truth
// posteriors within 1e-12 (else ContractError), then returns
//   sum_i beta_i D(Q(zc|x_i) || P(zc|x_i)) - D(Q(zc|x_t) || P(zc|x_t)).
double check_thm2(const DiscreteWorld& w, std::size_t target_x,
                  const std::vector<std::size_t>& source_xs,
                  const std::vector<double>& betas);

struct FeasibleBeta {
  std::vector<std::size_t> indices;  // into the source list
  std::vector<double> betas;
  double bound = 0.0;  // sum_i beta_i D(q_i || p*)
};

// Searches singletons (beta = exact sup ratio) and all source pairs (exact
// two-variable minimization over the domination polytope) for the smallest
// bound. Always returns a feasible witness; never claims the true infimum.
FeasibleBeta find_feasible_beta(const std::vector<double>& q_target,
                                const std::vector<std::vector<double>>& q_sources,
                                const std::vector<double>& p_star);

// --- world samplers -------------------------------------------------------

// Independent world with Dirichlet(1)-style draws, supports in [2, max_support].
DiscreteWorld random_world(std::uint64_t seed, std::size_t max_support = 6);

// World whose q side interpolates between x-independent conditionals and
// sharply x-dependent ones; `coupling` in [0, 1] drives both the
// disentanglement ratio and M for the relaxation tightness sweep.
DiscreteWorld random_world_coupled(std::uint64_t seed, double coupling,
                                   std::size_t max_support = 6);

// Correlated-joint world; fails validate() by construction. Used to prove
// that the independence gate is load-bearing for the Theorem 1 check.
DiscreteWorld random_world_correlated(std::uint64_t seed,
                                      std::size_t max_support = 6);

// A world containing a group of x's with identical ground-truth posteriors
// (proportional likelihood columns). The target's encoder conditional is a
// convex mixture of the sources' (betas = the mixture weights), so the
// constructed triple is feasible by construction.
struct Thm2Instance {
  DiscreteWorld world;
  std::size_t target_x = 0;
  std::vector<std::size_t> source_xs;
  std::vector<double> betas;
};
Thm2Instance random_thm2_instance(std::uint64_t seed, std::size_t max_support = 6);

namespace detail {
// Theorem 1 slack without the independence gate; only for the directed
// test demonstrating that correlated worlds can violate the bound.
double thm1_slack_ungated(const DiscreteWorld& w, std::size_t x,
                          const std::vector<double>* p_d = nullptr);
}  // namespace detail

// --- suite runner -----------------------------------------------------

struct SuiteViolation {
  std::uint64_t world_seed = 0;
  std::size_t x = 0;
  double value = 0.0;
};

struct SuiteReport {
  std::string suite;
  std::size_t worlds = 0;
  std::uint64_t seed = 0;
  double worst_residual = 0.0;  // lemma1
  double min_slack = 0.0;       // thm1 / relax / thm2
  double spearman_ratio_m = 0.0;  // relax only
  std::size_t checks = 0;
  bool pass = false;
  std::vector<SuiteViolation> violations;
};

SuiteReport run_suite(const std::string& suite, std::size_t worlds,
                      std::uint64_t seed);

double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace vdn
