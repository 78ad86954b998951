#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "vdn/errors.hpp"
#include "vdn/tensor.hpp"

namespace vdn {

// Central-difference gradient check. `f` must build a fresh scalar graph from
// its argument on every call; the analytic gradient is compared against
// (f(x+h) - f(x-h)) / 2h coordinate by coordinate. Returns the max over
// coordinates of |analytic - numeric| / max(1, |analytic|).
//
// The numeric side only ever evaluates f forward, so this stays independent
// of the backward implementation it is checking.
inline double finite_diff_check(
    const std::function<Tensor(const Tensor&)>& f, const Tensor& point,
    double h = 1e-5) {
  if (!(h > 0.0)) throw ContractError("finite_diff_check: h must be positive");

  Tensor x = Tensor::from_data(point.shape(), point.data(), true);
  Tensor loss = f(x);
  loss.backward();
  std::vector<double> analytic = x.grad();
  if (analytic.empty()) analytic.assign(x.size(), 0.0);

  double worst = 0.0;
  std::vector<double> probe = point.data();
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double up = f(Tensor::from_data(point.shape(), probe)).value();
    probe[i] = saved - h;
    const double dn = f(Tensor::from_data(point.shape(), probe)).value();
    probe[i] = saved;
    const double numeric = (up - dn) / (2.0 * h);
    if (!std::isfinite(numeric) || !std::isfinite(analytic[i])) {
      throw NumericError("finite_diff_check: non-finite derivative at coordinate " +
                         std::to_string(i));
    }
    const double err =
        std::fabs(analytic[i] - numeric) / std::max(1.0, std::fabs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

// Same check against a multi-input function; perturbs each listed parameter.
// Tensor handles alias their nodes, so the copies mutate the caller's graph.
inline double finite_diff_check_params(
    const std::function<Tensor()>& f, std::vector<Tensor> params,
    double h = 1e-5) {
  if (!(h > 0.0)) throw ContractError("finite_diff_check: h must be positive");
  for (auto& p : params) p.zero_grad();
  Tensor loss = f();
  loss.backward();

  double worst = 0.0;
  for (auto& p : params) {
    std::vector<double> analytic = p.grad();
    if (analytic.empty()) analytic.assign(p.size(), 0.0);
    auto& values = p.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = f().value();
      values[i] = saved - h;
      const double dn = f().value();
      values[i] = saved;
      const double numeric = (up - dn) / (2.0 * h);
      if (!std::isfinite(numeric) || !std::isfinite(analytic[i])) {
        throw NumericError("finite_diff_check: non-finite derivative");
      }
      const double err = std::fabs(analytic[i] - numeric) /
                         std::max(1.0, std::fabs(analytic[i]));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace vdn
