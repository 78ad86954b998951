#include "vdn/distributions.hpp"

#include <cmath>

namespace vdn {

DiagGaussian::DiagGaussian(Tensor mu_, Tensor log_var_)
    : mu(std::move(mu_)), log_var(std::move(log_var_)) {
  if (mu.shape() != log_var.shape()) {
    throw ShapeError("DiagGaussian: mu " + shape_str(mu.shape()) +
                     " and log_var " + shape_str(log_var.shape()) + " differ");
  }
  for (double v : log_var.data()) {
    if (!std::isfinite(v)) throw NumericError("DiagGaussian: non-finite log_var");
  }
}

DiagGaussian DiagGaussian::standard(const Shape& shape) {
  return DiagGaussian(Tensor::zeros(shape), Tensor::zeros(shape));
}

Tensor kl_gaussians(const DiagGaussian& q, const DiagGaussian& p) {
  if (q.mu.shape() != p.mu.shape()) {
    throw ContractError("kl_gaussians: dimension mismatch, q " +
                        shape_str(q.mu.shape()) + " vs p " +
                        shape_str(p.mu.shape()));
  }
  // 1/2 [ exp(lq - lp) + (mq - mp)^2 exp(-lp) - 1 + lp - lq ]
  Tensor dl = sub(q.log_var, p.log_var);
  Tensor ratio = exp(dl);
  Tensor dm = sub(q.mu, p.mu);
  Tensor mterm = mul(square(dm), exp(neg(p.log_var)));
  Tensor per = sub(add(ratio, mterm), add_scalar(dl, 1.0));
  return scale(sum(per), 0.5);
}

Tensor kl_to_standard_normal(const DiagGaussian& q) {
  // 1/2 [ exp(lv) + mu^2 - 1 - lv ]
  Tensor per = sub(add(exp(q.log_var), square(q.mu)),
                   add_scalar(q.log_var, 1.0));
  return scale(sum(per), 0.5);
}

Tensor reparam_sample(const DiagGaussian& q, const Tensor& noise) {
  if (noise.shape() != q.mu.shape()) {
    throw ShapeError("reparam_sample: noise " + shape_str(noise.shape()) +
                     " vs parameters " + shape_str(q.mu.shape()));
  }
  if (noise.requires_grad()) {
    throw ContractError("reparam_sample: noise must not require grad");
  }
  Tensor sigma = exp(scale(q.log_var, 0.5));
  return add(q.mu, mul(sigma, noise));
}

LaplaceDensity::LaplaceDensity(Tensor loc_, double scale_)
    : loc(std::move(loc_)), scale(scale_) {
  if (!(scale > 0.0)) throw ContractError("LaplaceDensity: scale must be positive");
}

Tensor laplace_log_pdf(const LaplaceDensity& d, const Tensor& x) {
  if (x.shape() != d.loc.shape()) {
    throw ShapeError("laplace_log_pdf: x " + shape_str(x.shape()) + " vs loc " +
                     shape_str(d.loc.shape()));
  }
  const double n = static_cast<double>(x.size());
  Tensor l1 = sum(abs(sub(x, d.loc)));
  return add_scalar(scale(l1, -1.0 / d.scale), -n * std::log(2.0 * d.scale));
}

}  // namespace vdn
