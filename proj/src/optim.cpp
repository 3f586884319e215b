// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfg/optim.hpp"

#include <algorithm>
#include <cmath>

namespace lfg {

template <typename Real>
AdamState<Real>::AdamState(const ParamSet<Real>& params, AdamConfig cfg) : config(cfg) {
  for (const auto& [name, p] : params) {
    m.emplace_back(p.shape());
    v.emplace_back(p.shape());
  }
}

template <typename Real>
void adam_step(ParamSet<Real>& params, std::span<const Tensor<Real>> grads, AdamState<Real>& state) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "adam_step: " + std::to_string(grads.size()) + " gradients and " +
                                               std::to_string(state.m.size()) + " moment buffers for " +
                                               std::to_string(params.size()) + " parameters");
  }
  if (state.step < 0) throw Error(ErrorCode::kInvalidArgument, "adam_step: negative step counter");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, p] = params[i];
    if (grads[i].shape() != p.shape() || state.m[i].shape() != p.shape() || state.v[i].shape() != p.shape()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "adam_step: gradient " + shape_str(grads[i].shape()) + " for parameter '" + name + "' " +
                      shape_str(p.shape()),
                  name);
    }
    if (!grads[i].all_finite()) {
      throw Error(ErrorCode::kNonFinite, "adam_step: non-finite gradient for parameter '" + name + "'", name);
    }
  }

  const std::int64_t t = state.step + 1;
  const auto& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  const Real b1 = static_cast<Real>(c.beta1), b2 = static_cast<Real>(c.beta2);
  const Real step_size = static_cast<Real>(c.lr / bc1);
  const Real inv_sqrt_bc2 = static_cast<Real>(1.0 / std::sqrt(bc2));
  const Real eps = static_cast<Real>(c.eps);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<Real>& theta = params[i].second.mutable_value();
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto& g = grads[i];
    for (std::int64_t j = 0; j < theta.numel(); ++j) {
      m[j] = b1 * m[j] + (Real(1) - b1) * g[j];
      v[j] = b2 * v[j] + (Real(1) - b2) * g[j] * g[j];
      theta[j] -= step_size * m[j] / (std::sqrt(v[j]) * inv_sqrt_bc2 + eps);
    }
  }
  state.step = t;
}

template <typename Real>
void adam_step(ParamSet<Real>& params, AdamState<Real>& state) {
  std::vector<Tensor<Real>> grads;
  grads.reserve(params.size());
  for (auto& [name, p] : params) grads.push_back(p.grad());
  adam_step<Real>(params, grads, state);
}

namespace {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace

template <typename Real>
double grad_check(const std::function<Var<Real>(const Var<Real>&)>& fn, const Tensor<Real>& point,
                  double step) {
  if (!(step > 0)) throw Error(ErrorCode::kInvalidArgument, "grad_check: step must be positive");
  Var<Real> x = Var<Real>::leaf(point);
  Var<Real> y = fn(x);
  if (y.numel() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "grad_check: function output has shape " + shape_str(y.shape()));
  }
  backward(y);
  const Tensor<Real> analytic = x.grad();

  double worst = 0;
  Tensor<Real> probe = point;
  for (std::int64_t i = 0; i < point.numel(); ++i) {
    const Real orig = probe[i];
    probe[i] = static_cast<Real>(orig + step);
    const double up = fn(Var<Real>::constant(probe)).item();
    probe[i] = static_cast<Real>(orig - step);
    const double down = fn(Var<Real>::constant(probe)).item();
    probe[i] = orig;
    worst = std::max(worst, relative_error(analytic[i], (up - down) / (2 * step)));
  }
  return worst;
}

template <typename Real>
double grad_check_params(const std::function<Var<Real>()>& fn, ParamSet<Real>& params, double step,
                         std::int64_t max_coords) {
  if (!(step > 0)) throw Error(ErrorCode::kInvalidArgument, "grad_check: step must be positive");
  Var<Real> y = fn();
  if (y.numel() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "grad_check: function output has shape " + shape_str(y.shape()));
  }
  backward(y, params);
  std::vector<Tensor<Real>> analytic;
  for (auto& [name, p] : params) analytic.push_back(p.grad());

  double worst = 0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor<Real>& value = params[t].second.mutable_value();
    const std::int64_t n = value.numel();
    const std::int64_t stride = (max_coords > 0 && n > max_coords) ? (n + max_coords - 1) / max_coords : 1;
    for (std::int64_t i = 0; i < n; i += stride) {
      const Real orig = value[i];
      value[i] = static_cast<Real>(orig + step);
      const double up = fn().item();
      value[i] = static_cast<Real>(orig - step);
      const double down = fn().item();
      value[i] = orig;
      worst = std::max(worst, relative_error(analytic[t][i], (up - down) / (2 * step)));
    }
  }
  return worst;
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(ParamSet<float>&, std::span<const Tensor<float>>, AdamState<float>&);
template void adam_step<double>(ParamSet<double>&, std::span<const Tensor<double>>, AdamState<double>&);
template void adam_step<float>(ParamSet<float>&, AdamState<float>&);
template void adam_step<double>(ParamSet<double>&, AdamState<double>&);
template double grad_check<float>(const std::function<Var<float>(const Var<float>&)>&, const Tensor<float>&, double);
template double grad_check<double>(const std::function<Var<double>(const Var<double>&)>&, const Tensor<double>&,
                                   double);
template double grad_check_params<float>(const std::function<Var<float>()>&, ParamSet<float>&, double,
                                         std::int64_t);
template double grad_check_params<double>(const std::function<Var<double>()>&, ParamSet<double>&, double,
                                          std::int64_t);

}  // namespace lfg
