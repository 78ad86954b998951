#pragma once

#include <functional>
#include <vector>

#include "vdn/tensor.hpp"

namespace vdn {

// Everything here instantiates the variational dual of KL(Q || P) written as
// the f-divergence D_f(P || Q) with f(u) = -log u. The critic T ranges over
// dom f* = (-inf, 0); its optimum is T*(z) = -q(z)/p(z), where the dual
// attains the exact divergence.

// f*(t) = -1 - log(-t). DomainError for t >= 0.
double fenchel_conjugate(double t);

// Final critic activation g_f(v) = -exp(-v), which maps any pre-activation
// into dom f*. The pre-activation is clamped to [-30, 30] so the exp cannot
// overflow; gradients vanish only at the clamp boundary.
Tensor gf_activation(const Tensor& v);

// Scalar critic: maps a (B, d) batch of inputs to strictly negative scores (B).
using CriticFn = std::function<Tensor(const Tensor&)>;

// mean_p[T] - mean_q[f*(T)] from per-sample critic scores. The critic scores
// must be negative (range of g_f); anything else is an InvariantError because
// it can only come from a broken activation.
double dual_estimate(const std::vector<double>& critic_on_p,
                     const std::vector<double>& critic_on_q);

// Exact-expectation form: E_p[T] - E_q[f*(T)] with explicit weights.
// Used by the theory checks where expectations are exact sums.
double dual_estimate_weighted(const std::vector<double>& critic_values,
                              const std::vector<double>& probs_p,
                              const std::vector<double>& probs_q);

// The adversarial regularizer:
//   L_reg = E_prior[ D_c(z, tag) ] + E_batch[ log(-D_c(E_c(x), tag)) ] + 1
// sampled over a batch. Fake inputs are encoder codes with their source
// domain one-hot; real inputs are prior draws with a uniformly random
// domain one-hot. Differentiable through both encoder codes and critic.
// The training loop minimizes this over E_c and maximizes it over D_c.
Tensor l_reg(const Tensor& batch_zc, const Tensor& prior_samples,
             const Tensor& fake_tags, const Tensor& real_tags,
             const CriticFn& critic);

}  // namespace vdn
