// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training losses and the three objectives built from them:
//
//   L_D   = λ_adv · (−adv_D)
//   L_CLS = λ_c · c
//   L_G   = λ_l1 · l1 + λ_adv · adv_G + λ_fm · fm   (+ λ_c · c_fake when enabled)

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lfg/autograd.hpp"
#include "lfg/glyph.hpp"

namespace lfg::loss {

inline constexpr double kProbClamp = 1e-7;

struct LossWeights {
  double l1 = 10.0;
  double adv = 1.0;
  double fm = 1.0;
  double c = 1.0;

  void validate() const;
  nlohmann::json to_json() const;
  static LossWeights from_json(const nlohmann::json& j);
};

enum class Side { kD, kG };
enum class GeneratorMode { kNonSaturating, kLiteral };

// Mean absolute pixel difference, averaged over the batch.
template <typename Real>
Var<Real> l1_loss(const Var<Real>& x, const Var<Real>& x_hat);

// Side D: mean log d_real + mean log(1 − d_fake), a value in (−∞, 0] that D
// maximises. Side G: −mean log d_fake (non-saturating) or mean log(1 − d_fake)
// (literal); d_real is ignored and may be undefined.
template <typename Real>
Var<Real> adversarial_loss(const Var<Real>& d_real, const Var<Real>& d_fake, Side side,
                           GeneratorMode mode = GeneratorMode::kNonSaturating);

// (1/L) Σ_l mean |real_l − fake_l|
template <typename Real>
Var<Real> feature_matching_loss(std::span<const Var<Real>> real, std::span<const Var<Real>> fake);

// Σ_slots softmax-CE(logits, truth) for one set of glyphs.
template <typename Real>
Var<Real> component_cls_term(std::span<const Var<Real>> logits, std::span<const glyph::ContentId> truth);

// Real-glyph term plus generated-glyph term.
template <typename Real>
Var<Real> component_cls_loss(std::span<const Var<Real>> logits_real, std::span<const Var<Real>> logits_fake,
                             std::span<const glyph::ContentId> truth);

struct LossComponents {
  double l1 = 0;
  double adv_d = 0;
  double adv_g = 0;
  double fm = 0;
  double c = 0;
};

struct LossBundle {
  double L_D = 0;
  double L_CLS = 0;
  double L_G = 0;
  LossComponents raw;
};

LossBundle assemble_objectives(const LossComponents& components, const LossWeights& weights);

// Differentiable pieces of the same arithmetic, used by the training step.
template <typename Real>
Var<Real> d_objective(const Var<Real>& adv_d, const LossWeights& w);
template <typename Real>
Var<Real> cls_objective(const Var<Real>& c, const LossWeights& w);
template <typename Real>
Var<Real> g_objective(const Var<Real>& l1, const Var<Real>& adv_g, const Var<Real>& fm, const LossWeights& w);

// One JSON-lines record: {step, L_D, L_CLS, L_G, l1, adv_D, adv_G, fm, c}.
nlohmann::ordered_json log_record(std::int64_t step, const LossBundle& bundle);

}  // namespace lfg::loss
