// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lfg/autograd.hpp"

namespace lfg {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename Real>
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<Tensor<Real>> m;
  std::vector<Tensor<Real>> v;

  AdamState() = default;
  AdamState(const ParamSet<Real>& params, AdamConfig cfg);
};

// Bias-corrected Adam. All gradients are validated before any parameter is
// written, so a rejected step leaves params and state untouched.
template <typename Real>
void adam_step(ParamSet<Real>& params, std::span<const Tensor<Real>> grads, AdamState<Real>& state);

// Same, reading each parameter's gradient buffer.
template <typename Real>
void adam_step(ParamSet<Real>& params, AdamState<Real>& state);

// Max over coordinates of |analytic - central| / max(|analytic|, |central|, 1e-8).
template <typename Real>
double grad_check(const std::function<Var<Real>(const Var<Real>&)>& fn, const Tensor<Real>& point,
                  double step);

// Same check over every coordinate of `params` (or a deterministic sample of
// at most `max_coords` per tensor when non-zero).
template <typename Real>
double grad_check_params(const std::function<Var<Real>()>& fn, ParamSet<Real>& params, double step,
                         std::int64_t max_coords = 0);

}  // namespace lfg
