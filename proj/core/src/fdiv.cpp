#include "vdn/fdiv.hpp"

#include <cmath>

namespace vdn {

double fenchel_conjugate(double t) {
  if (!(t < 0.0)) {
    throw DomainError("fenchel_conjugate: t = " + std::to_string(t) +
                      " outside dom f* = (-inf, 0)");
  }
  return -1.0 - std::log(-t);
}

Tensor gf_activation(const Tensor& v) {
  return neg(exp(neg(clamp(v, -30.0, 30.0))));
}

namespace {

void check_negative(const std::vector<double>& scores, const char* where) {
  for (double t : scores) {
    if (!(t < 0.0)) {
      throw InvariantError(std::string(where) + ": critic output " +
                           std::to_string(t) +
                           " not negative; activation is broken");
    }
  }
}

}  // namespace

double dual_estimate(const std::vector<double>& critic_on_p,
                     const std::vector<double>& critic_on_q) {
  if (critic_on_p.empty() || critic_on_q.empty()) {
    throw ContractError("dual_estimate: sample sets must be non-empty");
  }
  check_negative(critic_on_p, "dual_estimate");
  check_negative(critic_on_q, "dual_estimate");
  double ep = 0.0;
  for (double t : critic_on_p) ep += t;
  ep /= static_cast<double>(critic_on_p.size());
  double eq = 0.0;
  for (double t : critic_on_q) eq += fenchel_conjugate(t);
  eq /= static_cast<double>(critic_on_q.size());
  return ep - eq;
}

double dual_estimate_weighted(const std::vector<double>& critic_values,
                              const std::vector<double>& probs_p,
                              const std::vector<double>& probs_q) {
  if (critic_values.size() != probs_p.size() ||
      critic_values.size() != probs_q.size()) {
    throw ContractError("dual_estimate_weighted: size mismatch");
  }
  check_negative(critic_values, "dual_estimate_weighted");
  double ep = 0.0, eq = 0.0;
  for (std::size_t i = 0; i < critic_values.size(); ++i) {
    ep += probs_p[i] * critic_values[i];
    eq += probs_q[i] * fenchel_conjugate(critic_values[i]);
  }
  return ep - eq;
}

Tensor l_reg(const Tensor& batch_zc, const Tensor& prior_samples,
             const Tensor& fake_tags, const Tensor& real_tags,
             const CriticFn& critic) {
  if (batch_zc.shape() != prior_samples.shape()) {
    throw ContractError("l_reg: fake/real batches differ, " +
                        shape_str(batch_zc.shape()) + " vs " +
                        shape_str(prior_samples.shape()));
  }
  Tensor fake_in = concat(batch_zc, fake_tags, 1);
  Tensor real_in = concat(prior_samples, real_tags, 1);
  Tensor real_score = critic(real_in);
  Tensor fake_score = critic(fake_in);
  for (double t : real_score.data()) {
    if (!(t < 0.0)) throw InvariantError("l_reg: critic output not negative");
  }
  for (double t : fake_score.data()) {
    if (!(t < 0.0)) throw InvariantError("l_reg: critic output not negative");
  }
  Tensor term_real = mean(real_score);
  Tensor term_fake = mean(log(neg(fake_score)));
  return add_scalar(add(term_real, term_fake), 1.0);
}

}  // namespace vdn
