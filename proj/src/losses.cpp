// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfg/losses.hpp"

#include <cmath>

#include "lfg/error.hpp"

namespace lfg::loss {

namespace {

void check_weight(double v, const char* name) {
  if (!std::isfinite(v) || v < 0) {
    throw Error(ErrorCode::kInvalidArgument, std::string("loss weight ") + name + " must be finite and >= 0", name);
  }
}

void check_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, std::string("loss component ") + name + " is not finite", name);
}

template <typename Real>
Var<Real> clamped_probability(const Var<Real>& p, const char* what) {
  for (Real v : p.value().values()) {
    if (!(v >= Real(0) && v <= Real(1))) {
      throw Error(ErrorCode::kDomain, std::string(what) + ": probability " + std::to_string(static_cast<double>(v)) +
                                          " outside [0, 1]");
    }
  }
  return ops::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

template <typename Real>
Var<Real> one_minus(const Var<Real>& p) {
  return ops::add_scalar(ops::scale(p, -1.0), 1.0);
}

}  // namespace

void LossWeights::validate() const {
  check_weight(l1, "l1");
  check_weight(adv, "adv");
  check_weight(fm, "fm");
  check_weight(c, "c");
}

nlohmann::json LossWeights::to_json() const { return {{"l1", l1}, {"adv", adv}, {"fm", fm}, {"c", c}}; }

LossWeights LossWeights::from_json(const nlohmann::json& j) {
  LossWeights w;
  w.l1 = j.value("l1", w.l1);
  w.adv = j.value("adv", w.adv);
  w.fm = j.value("fm", w.fm);
  w.c = j.value("c", w.c);
  w.validate();
  return w;
}

template <typename Real>
Var<Real> l1_loss(const Var<Real>& x, const Var<Real>& x_hat) {
  if (x.shape() != x_hat.shape()) {
    throw Error(ErrorCode::kShapeMismatch,
                "l1_loss: target " + shape_str(x.shape()) + " vs generated " + shape_str(x_hat.shape()));
  }
  return ops::mean(ops::abs(ops::sub(x, x_hat)));
}

template <typename Real>
Var<Real> adversarial_loss(const Var<Real>& d_real, const Var<Real>& d_fake, Side side, GeneratorMode mode) {
  const Var<Real> fake = clamped_probability(d_fake, "adversarial_loss(d_fake)");
  if (side == Side::kG) {
    if (mode == GeneratorMode::kNonSaturating) return ops::scale(ops::mean(ops::log(fake)), -1.0);
    return ops::mean(ops::log(one_minus(fake)));
  }
  const Var<Real> real = clamped_probability(d_real, "adversarial_loss(d_real)");
  return ops::add(ops::mean(ops::log(real)), ops::mean(ops::log(one_minus(fake))));
}

template <typename Real>
Var<Real> feature_matching_loss(std::span<const Var<Real>> real, std::span<const Var<Real>> fake) {
  if (real.empty() || real.size() != fake.size()) {
    throw Error(ErrorCode::kShapeMismatch, "feature_matching_loss: " + std::to_string(real.size()) +
                                               " real layers vs " + std::to_string(fake.size()) + " fake layers");
  }
  Var<Real> total;
  for (std::size_t l = 0; l < real.size(); ++l) {
    if (real[l].shape() != fake[l].shape()) {
      throw Error(ErrorCode::kShapeMismatch, "feature_matching_loss: layer " + std::to_string(l + 1) + " shapes " +
                                                 shape_str(real[l].shape()) + " and " + shape_str(fake[l].shape()));
    }
    Var<Real> term = ops::mean(ops::abs(ops::sub(real[l], fake[l])));
    total = total.defined() ? ops::add(total, term) : term;
  }
  return ops::scale(total, 1.0 / static_cast<double>(real.size()));
}

template <typename Real>
Var<Real> component_cls_term(std::span<const Var<Real>> logits, std::span<const glyph::ContentId> truth) {
  if (logits.empty()) throw Error(ErrorCode::kShapeMismatch, "component_cls_loss: no slot logits");
  Var<Real> total;
  std::vector<std::int64_t> labels(truth.size());
  for (std::size_t s = 0; s < logits.size(); ++s) {
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i].parts.size() != logits.size()) {
        throw Error(ErrorCode::kShapeMismatch, "component_cls_loss: content " + truth[i].key() + " has " +
                                                   std::to_string(truth[i].parts.size()) + " slots, logits have " +
                                                   std::to_string(logits.size()));
      }
      labels[i] = truth[i].parts[s];
    }
    Var<Real> term = ops::softmax_cross_entropy(logits[s], std::span<const std::int64_t>(labels));
    total = total.defined() ? ops::add(total, term) : term;
  }
  return total;
}

template <typename Real>
Var<Real> component_cls_loss(std::span<const Var<Real>> logits_real, std::span<const Var<Real>> logits_fake,
                             std::span<const glyph::ContentId> truth) {
  if (logits_real.size() != logits_fake.size()) {
    throw Error(ErrorCode::kShapeMismatch, "component_cls_loss: real and generated slot counts differ");
  }
  return ops::add(component_cls_term(logits_real, truth), component_cls_term(logits_fake, truth));
}

LossBundle assemble_objectives(const LossComponents& c, const LossWeights& w) {
  w.validate();
  check_finite(c.l1, "l1");
  check_finite(c.adv_d, "adv_D");
  check_finite(c.adv_g, "adv_G");
  check_finite(c.fm, "fm");
  check_finite(c.c, "c");
  LossBundle b;
  b.raw = c;
  b.L_D = w.adv * -c.adv_d;
  b.L_CLS = w.c * c.c;
  b.L_G = w.l1 * c.l1 + w.adv * c.adv_g + w.fm * c.fm;
  return b;
}

template <typename Real>
Var<Real> d_objective(const Var<Real>& adv_d, const LossWeights& w) {
  check_finite(static_cast<double>(adv_d.item()), "adv_D");
  return ops::scale(adv_d, -w.adv);
}

template <typename Real>
Var<Real> cls_objective(const Var<Real>& c, const LossWeights& w) {
  check_finite(static_cast<double>(c.item()), "c");
  return ops::scale(c, w.c);
}

template <typename Real>
Var<Real> g_objective(const Var<Real>& l1, const Var<Real>& adv_g, const Var<Real>& fm, const LossWeights& w) {
  check_finite(static_cast<double>(l1.item()), "l1");
  check_finite(static_cast<double>(adv_g.item()), "adv_G");
  check_finite(static_cast<double>(fm.item()), "fm");
  return ops::add(ops::add(ops::scale(l1, w.l1), ops::scale(adv_g, w.adv)), ops::scale(fm, w.fm));
}

nlohmann::ordered_json log_record(std::int64_t step, const LossBundle& b) {
  return {{"step", step},     {"L_D", b.L_D},         {"L_CLS", b.L_CLS}, {"L_G", b.L_G}, {"l1", b.raw.l1},
          {"adv_D", b.raw.adv_d}, {"adv_G", b.raw.adv_g}, {"fm", b.raw.fm},   {"c", b.raw.c}};
}

#define LFG_INSTANTIATE(R)                                                                                   \
  template Var<R> l1_loss<R>(const Var<R>&, const Var<R>&);                                                \
  template Var<R> adversarial_loss<R>(const Var<R>&, const Var<R>&, Side, GeneratorMode);                  \
  template Var<R> feature_matching_loss<R>(std::span<const Var<R>>, std::span<const Var<R>>);              \
  template Var<R> component_cls_term<R>(std::span<const Var<R>>, std::span<const glyph::ContentId>);        \
  template Var<R> component_cls_loss<R>(std::span<const Var<R>>, std::span<const Var<R>>,                  \
                                        std::span<const glyph::ContentId>);                                 \
  template Var<R> d_objective<R>(const Var<R>&, const LossWeights&);                                       \
  template Var<R> cls_objective<R>(const Var<R>&, const LossWeights&);                                     \
  template Var<R> g_objective<R>(const Var<R>&, const Var<R>&, const Var<R>&, const LossWeights&);

LFG_INSTANTIATE(float)
LFG_INSTANTIATE(double)

}  // namespace lfg::loss
