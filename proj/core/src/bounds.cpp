#include "vdn/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vdn/errors.hpp"

namespace vdn {

namespace {

constexpr double kSumTol = 1e-12;
constexpr double kIndepTol = 1e-12;
constexpr double kSlackTol = -1e-10;
constexpr double kResidualTol = 1e-10;

void check_simplex(const std::vector<double>& p, const char* what) {
  double s = 0.0;
  for (double v : p) {
    if (v < 0.0) throw InvariantError(std::string(what) + ": negative probability");
    s += v;
  }
  if (std::fabs(s - 1.0) > kSumTol) {
    throw InvariantError(std::string(what) + ": sums to " + std::to_string(s) +
                         ", not 1 within 1e-12");
  }
}

std::vector<double> dirichlet_like(Rng& rng, std::size_t n, double floor = 0.02) {
  // Exponential draws normalized (Dirichlet(1)), floored away from zero so
  // logs and ratios stay finite-friendly.
  std::vector<double> out(n);
  double s = 0.0;
  for (auto& v : out) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    v = -std::log(u) + floor;
    s += v;
  }
  for (auto& v : out) v /= s;
  return out;
}

}  // namespace

std::vector<double> DiscreteWorld::p_zc_marginal() const {
  std::vector<double> out(nzc, 0.0);
  for (std::size_t c = 0; c < nzc; ++c)
    for (std::size_t d = 0; d < nzd; ++d) out[c] += p_joint(c, d);
  return out;
}

std::vector<double> DiscreteWorld::p_zd_marginal() const {
  std::vector<double> out(nzd, 0.0);
  for (std::size_t c = 0; c < nzc; ++c)
    for (std::size_t d = 0; d < nzd; ++d) out[d] += p_joint(c, d);
  return out;
}

std::vector<double> DiscreteWorld::p_x() const {
  std::vector<double> out(nx, 0.0);
  for (std::size_t c = 0; c < nzc; ++c)
    for (std::size_t d = 0; d < nzd; ++d)
      for (std::size_t x = 0; x < nx; ++x) out[x] += p_joint(c, d) * like(c, d, x);
  return out;
}

std::vector<double> DiscreteWorld::p_x_given_zc(std::size_t x) const {
  // p(x | zc) = sum_zd p(zd | zc) p(x | zc, zd)
  std::vector<double> pzc = p_zc_marginal();
  std::vector<double> out(nzc, 0.0);
  for (std::size_t c = 0; c < nzc; ++c) {
    if (pzc[c] <= 0.0) throw InvariantError("p_x_given_zc: zero-mass z_c");
    for (std::size_t d = 0; d < nzd; ++d) {
      out[c] += p_joint(c, d) / pzc[c] * like(c, d, x);
    }
  }
  return out;
}

std::vector<double> DiscreteWorld::p_zc_posterior(std::size_t x) const {
  std::vector<double> pzc = p_zc_marginal();
  std::vector<double> lik = p_x_given_zc(x);
  double px = 0.0;
  std::vector<double> out(nzc);
  for (std::size_t c = 0; c < nzc; ++c) {
    out[c] = pzc[c] * lik[c];
    px += out[c];
  }
  if (px <= 0.0) {
    throw ContractError("p_zc_posterior: p(x) = 0 at x = " + std::to_string(x));
  }
  for (auto& v : out) v /= px;
  return out;
}

std::vector<double> DiscreteWorld::q_zc_marginal() const {
  std::vector<double> px = p_x();
  std::vector<double> out(nzc, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t c = 0; c < nzc; ++c) out[c] += px[x] * q_zc(x, c);
  return out;
}

void DiscreteWorld::validate() const {
  if (nx == 0 || nzc == 0 || nzd == 0) throw InvariantError("world: empty support");
  if (p_z_joint.size() != nzc * nzd || likelihood.size() != nzc * nzd * nx ||
      q_zc_given_x.size() != nx * nzc) {
    throw InvariantError("world: field sizes do not match supports");
  }
  check_simplex(p_z_joint, "p(zc, zd)");
  for (std::size_t c = 0; c < nzc; ++c) {
    for (std::size_t d = 0; d < nzd; ++d) {
      std::vector<double> col(nx);
      for (std::size_t x = 0; x < nx; ++x) col[x] = like(c, d, x);
      check_simplex(col, "p(x|zc,zd)");
    }
  }
  for (std::size_t x = 0; x < nx; ++x) {
    std::vector<double> row(nzc);
    for (std::size_t c = 0; c < nzc; ++c) {
      row[c] = q_zc(x, c);
      if (row[c] <= 0.0) {
        throw InvariantError("world: q(zc|x) must be positive everywhere "
                             "(feasibility premise)");
      }
    }
    check_simplex(row, "q(zc|x)");
  }
  if (!q_zd_given_x.empty()) {
    if (q_zd_given_x.size() != nx * nzd) {
      throw InvariantError("world: q(zd|x) size mismatch");
    }
    for (std::size_t x = 0; x < nx; ++x) {
      std::vector<double> row(q_zd_given_x.begin() + static_cast<std::ptrdiff_t>(x * nzd),
                              q_zd_given_x.begin() + static_cast<std::ptrdiff_t>((x + 1) * nzd));
      check_simplex(row, "q(zd|x)");
    }
  }
  // Independence gate: p(zc, zd) must factorize.
  std::vector<double> pc = p_zc_marginal();
  std::vector<double> pd = p_zd_marginal();
  for (std::size_t c = 0; c < nzc; ++c) {
    for (std::size_t d = 0; d < nzd; ++d) {
      if (std::fabs(p_joint(c, d) - pc[c] * pd[d]) > kIndepTol) {
        throw InvariantError("world: z_c and z_d are correlated; |p(zc,zd) - "
                             "p(zc)p(zd)| exceeds 1e-12");
      }
    }
  }
}

double kl_discrete(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ContractError("kl_discrete: size mismatch");
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    if (a[i] < 0.0 || b[i] <= 0.0) {
      throw DomainError("kl_discrete: invalid probabilities");
    }
    out += a[i] * std::log(a[i] / b[i]);
  }
  return out;
}

double check_lemma1(const DiscreteWorld& w, std::size_t x) {
  w.validate();
  if (x >= w.nx) throw ContractError("check_lemma1: x out of range");
  std::vector<double> px = w.p_x();
  if (px[x] <= 0.0) throw ContractError("check_lemma1: p(x) = 0");
  std::vector<double> q(w.nzc);
  for (std::size_t c = 0; c < w.nzc; ++c) q[c] = w.q_zc(x, c);
  const std::vector<double> posterior = w.p_zc_posterior(x);
  const std::vector<double> prior = w.p_zc_marginal();
  const std::vector<double> lik = w.p_x_given_zc(x);

  const double lhs = kl_discrete(q, posterior);
  double elog = 0.0;
  for (std::size_t c = 0; c < w.nzc; ++c) {
    if (lik[c] <= 0.0) throw DomainError("check_lemma1: p(x|zc) = 0 on support");
    elog += q[c] * std::log(lik[c]);
  }
  const double rhs = kl_discrete(q, prior) - elog + std::log(px[x]);
  return std::fabs(lhs - rhs);
}

namespace detail {

double thm1_slack_ungated(const DiscreteWorld& w, std::size_t x,
                          const std::vector<double>* p_d) {
  std::vector<double> pd = p_d ? *p_d : w.p_zd_marginal();
  if (pd.size() != w.nzd) throw ContractError("check_thm1: P_d size mismatch");
  std::vector<double> px = w.p_x();
  if (px[x] <= 0.0) throw ContractError("check_thm1: p(x) = 0");
  std::vector<double> q(w.nzc);
  for (std::size_t c = 0; c < w.nzc; ++c) q[c] = w.q_zc(x, c);
  const std::vector<double> posterior = w.p_zc_posterior(x);
  const std::vector<double> prior = w.p_zc_marginal();

  // E_{zc~Q, zd~P_d} log p(x|zc,zd)
  double posterior_term = 0.0;
  for (std::size_t c = 0; c < w.nzc; ++c) {
    for (std::size_t d = 0; d < w.nzd; ++d) {
      if (pd[d] == 0.0) continue;
      const double l = w.like(c, d, x);
      if (l <= 0.0) {
        // The bound is vacuously true: log p(x|z) = -inf with positive weight.
        return std::numeric_limits<double>::infinity();
      }
      posterior_term += q[c] * pd[d] * std::log(l);
    }
  }
  const double upper = kl_discrete(q, prior) - posterior_term + std::log(px[x]);
  const double lhs = kl_discrete(q, posterior);
  return upper - lhs;
}

}  // namespace detail

double check_thm1(const DiscreteWorld& w, std::size_t x,
                  const std::vector<double>* p_d) {
  w.validate();
  if (x >= w.nx) throw ContractError("check_thm1: x out of range");
  return detail::thm1_slack_ungated(w, x, p_d);
}

RelaxResult check_relaxation(const DiscreteWorld& w, std::size_t x) {
  w.validate();
  if (x >= w.nx) throw ContractError("check_relaxation: x out of range");
  std::vector<double> px = w.p_x();
  if (px[x] <= 0.0) throw ContractError("check_relaxation: q(x) = 0");
  const std::vector<double> qmarg = w.q_zc_marginal();
  const std::vector<double> prior = w.p_zc_marginal();
  std::vector<double> q(w.nzc);
  for (std::size_t c = 0; c < w.nzc; ++c) q[c] = w.q_zc(x, c);

  RelaxResult out;
  // Bayes in the q-joint over (x, zc): q(x|zc)/q(x) = q(zc|x)/q(zc).
  for (std::size_t c = 0; c < w.nzc; ++c) {
    out.m = std::max(out.m, q[c] / qmarg[c]);
  }
  out.slack = out.m * kl_discrete(qmarg, prior) + out.m * std::log(out.m) -
              kl_discrete(q, prior);

  if (!w.q_zd_given_x.empty()) {
    // q(zc, zd) = sum_x p(x) q(zc|x) q(zd|x); ratio = sup q(zc|zd)/q(zc).
    std::vector<double> joint(w.nzc * w.nzd, 0.0);
    std::vector<double> qzd(w.nzd, 0.0);
    for (std::size_t xi = 0; xi < w.nx; ++xi) {
      for (std::size_t c = 0; c < w.nzc; ++c) {
        for (std::size_t d = 0; d < w.nzd; ++d) {
          const double v = px[xi] * w.q_zc(xi, c) * w.q_zd_given_x[xi * w.nzd + d];
          joint[c * w.nzd + d] += v;
          qzd[d] += v;
        }
      }
    }
    for (std::size_t c = 0; c < w.nzc; ++c) {
      for (std::size_t d = 0; d < w.nzd; ++d) {
        if (qzd[d] <= 0.0) continue;
        const double cond = joint[c * w.nzd + d] / qzd[d];
        out.disentanglement_ratio =
            std::max(out.disentanglement_ratio, cond / qmarg[c]);
      }
    }
  }
  return out;
}

double check_thm2(const DiscreteWorld& w, std::size_t target_x,
                  const std::vector<std::size_t>& source_xs,
                  const std::vector<double>& betas) {
  w.validate();
  if (target_x >= w.nx) throw ContractError("check_thm2: target out of range");
  if (source_xs.empty() || source_xs.size() != betas.size()) {
    throw ContractError("check_thm2: sources and betas must align");
  }
  const std::vector<double> p_star = w.p_zc_posterior(target_x);
  for (std::size_t i : source_xs) {
    if (i >= w.nx) throw ContractError("check_thm2: source out of range");
    const std::vector<double> p_i = w.p_zc_posterior(i);
    for (std::size_t c = 0; c < w.nzc; ++c) {
      if (std::fabs(p_i[c] - p_star[c]) > 1e-12) {
        throw ContractError(
            "check_thm2: ground-truth posteriors differ at source x = " +
            std::to_string(i) + " (assumption violation)");
      }
    }
  }
  // Pointwise domination q(zc|x_t) <= sum_i beta_i q(zc|x_i).
  for (std::size_t c = 0; c < w.nzc; ++c) {
    double cover = 0.0;
    for (std::size_t i = 0; i < source_xs.size(); ++i) {
      cover += betas[i] * w.q_zc(source_xs[i], c);
    }
    if (w.q_zc(target_x, c) > cover * (1.0 + 1e-12) + 1e-300) {
      throw InvariantError("check_thm2: domination violated at z_c = " +
                           std::to_string(c));
    }
  }
  std::vector<double> q_t(w.nzc);
  for (std::size_t c = 0; c < w.nzc; ++c) q_t[c] = w.q_zc(target_x, c);
  double bound = 0.0;
  for (std::size_t i = 0; i < source_xs.size(); ++i) {
    std::vector<double> q_i(w.nzc);
    for (std::size_t c = 0; c < w.nzc; ++c) q_i[c] = w.q_zc(source_xs[i], c);
    bound += betas[i] * kl_discrete(q_i, p_star);
  }
  return bound - kl_discrete(q_t, p_star);
}

FeasibleBeta find_feasible_beta(const std::vector<double>& q_target,
                                const std::vector<std::vector<double>>& q_sources,
                                const std::vector<double>& p_star) {
  if (q_sources.empty()) throw ContractError("find_feasible_beta: no sources");
  const std::size_t nz = q_target.size();
  for (const auto& q : q_sources) {
    if (q.size() != nz) throw ContractError("find_feasible_beta: size mismatch");
    for (double v : q) {
      if (v <= 0.0) throw ContractError("find_feasible_beta: densities must be positive");
    }
  }
  std::vector<double> divs(q_sources.size());
  for (std::size_t i = 0; i < q_sources.size(); ++i) {
    divs[i] = kl_discrete(q_sources[i], p_star);
  }

  FeasibleBeta best;
  best.bound = std::numeric_limits<double>::infinity();
  auto consider = [&](std::vector<std::size_t> idx, std::vector<double> betas) {
    // Re-verify feasibility before accepting the candidate.
    for (std::size_t c = 0; c < nz; ++c) {
      double cover = 0.0;
      for (std::size_t k = 0; k < idx.size(); ++k)
        cover += betas[k] * q_sources[idx[k]][c];
      if (q_target[c] > cover * (1.0 + 1e-12)) return;
    }
    double bound = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) bound += betas[k] * divs[idx[k]];
    if (bound < best.bound) {
      best = FeasibleBeta{std::move(idx), std::move(betas), bound};
    }
  };

  // Singletons with the exact sup ratio.
  for (std::size_t i = 0; i < q_sources.size(); ++i) {
    double ratio = 0.0;
    for (std::size_t c = 0; c < nz; ++c)
      ratio = std::max(ratio, q_target[c] / q_sources[i][c]);
    consider({i}, {ratio});
  }

  // Pairs: minimize beta_i D_i + beta_j D_j over the domination polytope.
  // With two variables the optimum sits on a vertex: the intersection of two
  // active constraints or a singleton corner (already covered above).
  for (std::size_t i = 0; i < q_sources.size(); ++i) {
    for (std::size_t j = i + 1; j < q_sources.size(); ++j) {
      for (std::size_t c1 = 0; c1 < nz; ++c1) {
        for (std::size_t c2 = c1 + 1; c2 < nz; ++c2) {
          const double a11 = q_sources[i][c1], a12 = q_sources[j][c1];
          const double a21 = q_sources[i][c2], a22 = q_sources[j][c2];
          const double det = a11 * a22 - a12 * a21;
          if (std::fabs(det) < 1e-14) continue;
          const double bi = (q_target[c1] * a22 - q_target[c2] * a12) / det;
          const double bj = (q_target[c2] * a11 - q_target[c1] * a21) / det;
          if (bi < 0.0 || bj < 0.0) continue;
          consider({i, j}, {bi, bj});
        }
      }
    }
  }
  if (!std::isfinite(best.bound)) {
    throw InvariantError("find_feasible_beta: no feasible candidate found");
  }
  return best;
}

// --- samplers ---------------------------------------------------------

namespace {

struct Supports {
  std::size_t nx, nzc, nzd;
};

Supports draw_supports(Rng& rng, std::size_t max_support) {
  const std::size_t lo = 2;
  auto draw = [&] {
    return lo + rng.uniform_index(max_support - lo + 1);
  };
  return {draw(), draw(), draw()};
}

void fill_generative_side(DiscreteWorld& w, Rng& rng) {
  std::vector<double> pc = dirichlet_like(rng, w.nzc);
  std::vector<double> pd = dirichlet_like(rng, w.nzd);
  w.p_z_joint.resize(w.nzc * w.nzd);
  for (std::size_t c = 0; c < w.nzc; ++c)
    for (std::size_t d = 0; d < w.nzd; ++d) w.p_z_joint[c * w.nzd + d] = pc[c] * pd[d];
  w.likelihood.resize(w.nzc * w.nzd * w.nx);
  for (std::size_t cd = 0; cd < w.nzc * w.nzd; ++cd) {
    std::vector<double> col = dirichlet_like(rng, w.nx);
    std::copy(col.begin(), col.end(),
              w.likelihood.begin() + static_cast<std::ptrdiff_t>(cd * w.nx));
  }
}

}  // namespace

DiscreteWorld random_world(std::uint64_t seed, std::size_t max_support) {
  Rng rng(seed * 0x9e3779b97f4a7c15ull + 1);
  DiscreteWorld w;
  w.seed = seed;
  auto s = draw_supports(rng, max_support);
  w.nx = s.nx;
  w.nzc = s.nzc;
  w.nzd = s.nzd;
  fill_generative_side(w, rng);
  w.q_zc_given_x.resize(w.nx * w.nzc);
  for (std::size_t x = 0; x < w.nx; ++x) {
    std::vector<double> row = dirichlet_like(rng, w.nzc);
    std::copy(row.begin(), row.end(),
              w.q_zc_given_x.begin() + static_cast<std::ptrdiff_t>(x * w.nzc));
  }
  return w;
}

DiscreteWorld random_world_coupled(std::uint64_t seed, double coupling,
                                   std::size_t max_support) {
  if (coupling < 0.0 || coupling > 1.0) {
    throw ContractError("random_world_coupled: coupling must be in [0, 1]");
  }
  Rng rng(seed * 0x9e3779b97f4a7c15ull + 7);
  DiscreteWorld w;
  w.seed = seed;
  auto s = draw_supports(rng, max_support);
  w.nx = s.nx;
  w.nzc = s.nzc;
  w.nzd = s.nzd;
  fill_generative_side(w, rng);
  // Base conditionals shared across x, blended with per-x sharp conditionals.
  std::vector<double> base_c = dirichlet_like(rng, w.nzc);
  std::vector<double> base_d = dirichlet_like(rng, w.nzd);
  w.q_zc_given_x.resize(w.nx * w.nzc);
  w.q_zd_given_x.resize(w.nx * w.nzd);
  for (std::size_t x = 0; x < w.nx; ++x) {
    std::vector<double> own_c = dirichlet_like(rng, w.nzc, 0.005);
    std::vector<double> own_d = dirichlet_like(rng, w.nzd, 0.005);
    for (std::size_t c = 0; c < w.nzc; ++c) {
      w.q_zc_given_x[x * w.nzc + c] =
          (1.0 - coupling) * base_c[c] + coupling * own_c[c];
    }
    for (std::size_t d = 0; d < w.nzd; ++d) {
      w.q_zd_given_x[x * w.nzd + d] =
          (1.0 - coupling) * base_d[d] + coupling * own_d[d];
    }
  }
  return w;
}

DiscreteWorld random_world_correlated(std::uint64_t seed,
                                      std::size_t max_support) {
  Rng rng(seed * 0x9e3779b97f4a7c15ull + 13);
  DiscreteWorld w;
  w.seed = seed;
  auto s = draw_supports(rng, max_support);
  w.nx = s.nx;
  w.nzc = s.nzc;
  w.nzd = s.nzd;
  // Correlated joint straight from a flat Dirichlet over the product space.
  w.p_z_joint = dirichlet_like(rng, w.nzc * w.nzd);
  w.likelihood.resize(w.nzc * w.nzd * w.nx);
  for (std::size_t cd = 0; cd < w.nzc * w.nzd; ++cd) {
    std::vector<double> col = dirichlet_like(rng, w.nx, 0.002);
    std::copy(col.begin(), col.end(),
              w.likelihood.begin() + static_cast<std::ptrdiff_t>(cd * w.nx));
  }
  w.q_zc_given_x.resize(w.nx * w.nzc);
  for (std::size_t x = 0; x < w.nx; ++x) {
    std::vector<double> row = dirichlet_like(rng, w.nzc);
    std::copy(row.begin(), row.end(),
              w.q_zc_given_x.begin() + static_cast<std::ptrdiff_t>(x * w.nzc));
  }
  return w;
}

Thm2Instance random_thm2_instance(std::uint64_t seed, std::size_t max_support) {
  Rng rng(seed * 0x9e3779b97f4a7c15ull + 29);
  Thm2Instance inst;
  DiscreteWorld& w = inst.world;
  w.seed = seed;
  auto s = draw_supports(rng, max_support);
  w.nzc = s.nzc;
  w.nzd = s.nzd;
  const std::size_t group = 2 + rng.uniform_index(3);  // target + 1..3 sources
  w.nx = std::max<std::size_t>(s.nx, group + 1);

  std::vector<double> pc = dirichlet_like(rng, w.nzc);
  std::vector<double> pd = dirichlet_like(rng, w.nzd);
  w.p_z_joint.resize(w.nzc * w.nzd);
  for (std::size_t c = 0; c < w.nzc; ++c)
    for (std::size_t d = 0; d < w.nzd; ++d) w.p_z_joint[c * w.nzd + d] = pc[c] * pd[d];

  // Likelihood columns for the group are proportional across (zc, zd), so
  // every group member has the same ground-truth posterior.
  std::vector<double> base(w.nzc * w.nzd);
  double mx = 0.0;
  for (auto& v : base) {
    v = rng.uniform(0.05, 1.0);
    mx = std::max(mx, v);
  }
  for (auto& v : base) v /= mx;
  std::vector<double> scales(group);
  for (auto& v : scales) v = rng.uniform(0.2, 1.0);

  w.likelihood.assign(w.nzc * w.nzd * w.nx, 0.0);
  for (std::size_t cd = 0; cd < w.nzc * w.nzd; ++cd) {
    std::vector<double> rest =
        w.nx > group ? dirichlet_like(rng, w.nx - group, 0.01)
                     : std::vector<double>{};
    double used = 0.0;
    for (std::size_t g = 0; g < group; ++g) used += scales[g] * base[cd];
    // Keep the proportional block below mass 1; scale down if needed.
    double shrink = 1.0;
    if (used >= 0.9) shrink = 0.9 / used;
    used = 0.0;
    for (std::size_t g = 0; g < group; ++g) {
      const double v = scales[g] * base[cd] * shrink * 0.9;
      w.likelihood[cd * w.nx + g] = v;
      used += v;
    }
    const double remain = 1.0 - used;
    for (std::size_t r = 0; r + group < w.nx; ++r) {
      w.likelihood[cd * w.nx + group + r] = remain * rest[r];
    }
  }

  // Encoder side: random source conditionals; the target is their mixture.
  w.q_zc_given_x.resize(w.nx * w.nzc);
  for (std::size_t x = 1; x < w.nx; ++x) {
    std::vector<double> row = dirichlet_like(rng, w.nzc);
    std::copy(row.begin(), row.end(),
              w.q_zc_given_x.begin() + static_cast<std::ptrdiff_t>(x * w.nzc));
  }
  inst.target_x = 0;
  for (std::size_t g = 1; g < group; ++g) inst.source_xs.push_back(g);
  std::vector<double> weights = dirichlet_like(rng, inst.source_xs.size());
  inst.betas = weights;
  for (std::size_t c = 0; c < w.nzc; ++c) {
    double v = 0.0;
    for (std::size_t k = 0; k < inst.source_xs.size(); ++k) {
      v += weights[k] * w.q_zc(inst.source_xs[k], c);
    }
    w.q_zc_given_x[0 * w.nzc + c] = v;
  }
  return inst;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw ContractError("spearman: need two equal-length series");
  }
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k);
    return r;
  };
  std::vector<double> ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

SuiteReport run_suite(const std::string& suite, std::size_t worlds,
                      std::uint64_t seed) {
  if (worlds == 0) throw ContractError("run_suite: worlds must be positive");
  SuiteReport rep;
  rep.suite = suite;
  rep.worlds = worlds;
  rep.seed = seed;
  rep.min_slack = std::numeric_limits<double>::infinity();
  rep.worst_residual = 0.0;

  if (suite == "lemma1") {
    for (std::size_t i = 0; i < worlds; ++i) {
      const std::uint64_t ws = seed + i;
      DiscreteWorld w = random_world(ws);
      for (std::size_t x = 0; x < w.nx; ++x) {
        const double r = check_lemma1(w, x);
        ++rep.checks;
        rep.worst_residual = std::max(rep.worst_residual, r);
        if (r >= kResidualTol) rep.violations.push_back({ws, x, r});
      }
    }
    rep.pass = rep.worst_residual < kResidualTol;
    rep.min_slack = 0.0;
  } else if (suite == "thm1") {
    for (std::size_t i = 0; i < worlds; ++i) {
      const std::uint64_t ws = seed + i;
      DiscreteWorld w = random_world(ws);
      for (std::size_t x = 0; x < w.nx; ++x) {
        const double s = check_thm1(w, x);
        ++rep.checks;
        rep.min_slack = std::min(rep.min_slack, s);
        if (s < kSlackTol) rep.violations.push_back({ws, x, s});
      }
    }
    rep.pass = rep.min_slack >= kSlackTol;
  } else if (suite == "relax") {
    std::vector<double> ms, ratios;
    for (std::size_t i = 0; i < worlds; ++i) {
      const std::uint64_t ws = seed + i;
      const double coupling =
          worlds > 1 ? static_cast<double>(i) / static_cast<double>(worlds - 1)
                     : 0.5;
      DiscreteWorld w = random_world_coupled(ws, coupling);
      double world_m = 0.0, world_ratio = 0.0;
      for (std::size_t x = 0; x < w.nx; ++x) {
        RelaxResult r = check_relaxation(w, x);
        ++rep.checks;
        rep.min_slack = std::min(rep.min_slack, r.slack);
        if (r.slack < kSlackTol) rep.violations.push_back({ws, x, r.slack});
        world_m = std::max(world_m, r.m);
        world_ratio = std::max(world_ratio, r.disentanglement_ratio);
      }
      ms.push_back(world_m);
      ratios.push_back(world_ratio);
    }
    rep.spearman_ratio_m = spearman(ratios, ms);
    rep.pass = rep.min_slack >= kSlackTol && rep.spearman_ratio_m > 0.0;
  } else if (suite == "thm2") {
    for (std::size_t i = 0; i < worlds; ++i) {
      const std::uint64_t ws = seed + i;
      Thm2Instance inst = random_thm2_instance(ws);
      const double s =
          check_thm2(inst.world, inst.target_x, inst.source_xs, inst.betas);
      ++rep.checks;
      rep.min_slack = std::min(rep.min_slack, s);
      if (s < kSlackTol) rep.violations.push_back({ws, 0, s});
    }
    rep.pass = rep.min_slack >= kSlackTol;
  } else {
    throw ContractError("run_suite: unknown suite '" + suite +
                        "' (expected lemma1|thm1|relax|thm2)");
  }
  return rep;
}

}  // namespace vdn
