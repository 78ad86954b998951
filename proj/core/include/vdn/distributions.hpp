#pragma once

#include "vdn/tensor.hpp"

namespace vdn {

// Diagonal Gaussian parameterized by mean and log-variance, so sigma stays
// positive without constraints and the density is positive everywhere.
// Holds either a single vector or a (B, d) batch; all ops treat the data
// flat and sum over every coordinate.
struct DiagGaussian {
  Tensor mu;
  Tensor log_var;

  DiagGaussian(Tensor mu_, Tensor log_var_);

  static DiagGaussian standard(const Shape& shape);

  std::size_t dim() const { return mu.size(); }
};

// KL(q || p) in closed form, summed over all coordinates:
//   sum_i 1/2 (sq^2/sp^2 + (mq-mp)^2/sp^2 - 1 + log sp^2 - log sq^2)
// Differentiable w.r.t. both parameter sets.
Tensor kl_gaussians(const DiagGaussian& q, const DiagGaussian& p);

// KL(q || N(0, I)) without materializing the prior.
Tensor kl_to_standard_normal(const DiagGaussian& q);

// mu + exp(log_var / 2) * noise. Gradients flow to mu and log_var only;
// the noise enters as a constant.
Tensor reparam_sample(const DiagGaussian& q, const Tensor& noise);

// Laplace density with center vector and shared scalar scale;
// log-density is an L1 distance up to constants.
struct LaplaceDensity {
  Tensor loc;
  double scale;

  LaplaceDensity(Tensor loc_, double scale_);
};

// sum_i [ -log(2 beta) - |x_i - m_i| / beta ]
Tensor laplace_log_pdf(const LaplaceDensity& d, const Tensor& x);

}  // namespace vdn
