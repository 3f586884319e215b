// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>

#include "lfg/losses.hpp"
#include "test_util.hpp"

using namespace lfg;
using namespace lfg::loss;
using V = Var<double>;

namespace {

V full(Shape s, double v) { return V(Tensor<double>(std::move(s), v)); }

// Σ_slots mean_n [logsumexp(z_n) − z_n,truth], one row at a time.
double ce_oracle(const std::vector<Tensor<double>>& logits, const std::vector<glyph::ContentId>& truth) {
  double total = 0;
  for (std::size_t s = 0; s < logits.size(); ++s) {
    const auto n = logits[s].dim(0), k = logits[s].dim(1);
    double slot = 0;
    for (std::int64_t r = 0; r < n; ++r) {
      double mx = -1e300;
      for (std::int64_t j = 0; j < k; ++j) mx = std::max(mx, logits[s][r * k + j]);
      double z = 0;
      for (std::int64_t j = 0; j < k; ++j) z += std::exp(logits[s][r * k + j] - mx);
      slot += mx + std::log(z) - logits[s][r * k + truth[r].parts[s]];
    }
    total += slot / static_cast<double>(n);
  }
  return total;
}

}  // namespace

TEST_CASE("l1 loss") {
  const Shape s{2, 1, 4, 4};
  CHECK(l1_loss(full(s, 0.3), full(s, 0.3)).item() == 0.0);
  CHECK(l1_loss(full(s, 1.0), full(s, 0.0)).item() == 1.0);
  const auto a = test::random_tensor<double>({3, 1, 5, 7}, 1, 0, 1);
  const auto b = test::random_tensor<double>({3, 1, 5, 7}, 2, 0, 1);
  double batch = 0;
  for (int n = 0; n < 3; ++n) {
    double img = 0;
    for (int i = 0; i < 35; ++i) img += std::abs(a[n * 35 + i] - b[n * 35 + i]);
    batch += img / 35.0;
  }
  CHECK(std::abs(l1_loss(V(a), V(b)).item() - batch / 3.0) < 1e-6);
  CHECK(l1_loss(V(a), V(b)).item() == l1_loss(V(b), V(a)).item());
  CHECK_THROWS_AS(l1_loss(full({2, 1, 4, 4}, 0), full({2, 1, 4, 5}, 0)), Error);
}

TEST_CASE("adversarial loss") {
  const V half = full({4}, 0.5);
  CHECK(adversarial_loss(half, half, Side::kD).item() == doctest::Approx(2 * std::log(0.5)).epsilon(1e-12));
  CHECK(adversarial_loss(V(), half, Side::kG).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(adversarial_loss(V(), half, Side::kG, GeneratorMode::kLiteral).item() ==
        doctest::Approx(std::log(0.5)).epsilon(1e-12));
  const double eps = 1e-9;
  const double perfect = adversarial_loss(full({4}, 1 - eps), full({4}, eps), Side::kD).item();
  CHECK(perfect <= 0.0);
  CHECK(perfect > -1e-6);
  // Exact 0 and 1 are clamped rather than producing -inf.
  CHECK(std::isfinite(adversarial_loss(full({2}, 0.0), full({2}, 1.0), Side::kD).item()));
  CHECK_THROWS_AS(adversarial_loss(full({2}, 1.5), half, Side::kD), Error);
  CHECK_THROWS_AS(adversarial_loss(V(), full({2}, -0.1), Side::kG), Error);
  CHECK_THROWS_AS(adversarial_loss(V(), full({2}, std::nan("")), Side::kG), Error);
}

TEST_CASE("feature matching loss") {
  std::vector<V> same{V(test::random_tensor<double>({2, 3, 2, 2}, 3))};
  CHECK(feature_matching_loss<double>(same, same).item() == 0.0);
  std::vector<V> ones{full({2, 3, 2, 2}, 1.0)}, zeros{full({2, 3, 2, 2}, 0.0)};
  CHECK(feature_matching_loss<double>(ones, zeros).item() == 1.0);

  std::vector<Tensor<double>> r, f;
  const std::vector<Shape> shapes{{2, 3, 4, 4}, {2, 5, 2, 2}, {2, 7, 1, 1}};
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    r.push_back(test::random_tensor<double>(shapes[l], 10 + l));
    f.push_back(test::random_tensor<double>(shapes[l], 20 + l));
  }
  double oracle = 0;
  for (std::size_t l = 0; l < r.size(); ++l) {
    double s = 0;
    for (std::int64_t i = 0; i < r[l].numel(); ++i) s += std::abs(r[l][i] - f[l][i]);
    oracle += s / static_cast<double>(r[l].numel());
  }
  oracle /= 3.0;
  std::vector<V> rv, fv;
  for (std::size_t l = 0; l < r.size(); ++l) {
    rv.emplace_back(r[l]);
    fv.emplace_back(f[l]);
  }
  CHECK(std::abs(feature_matching_loss<double>(rv, fv).item() - oracle) < 1e-6);
  CHECK(feature_matching_loss<double>(rv, fv).item() == feature_matching_loss<double>(fv, rv).item());
  std::vector<V> short_list{rv[0], rv[1]};
  CHECK_THROWS_AS(feature_matching_loss<double>(rv, short_list), Error);
  std::vector<V> wrong{rv[0], rv[1], V(test::random_tensor<double>({2, 7, 2, 1}, 1))};
  CHECK_THROWS_AS(feature_matching_loss<double>(rv, wrong), Error);
}

TEST_CASE("component classification loss") {
  const std::vector<glyph::ContentId> truth{{{1, 0, 3}}, {{5, 4, 0}}};
  std::vector<V> uniform{full({2, 6}, 0), full({2, 5}, 0), full({2, 4}, 0)};
  CHECK(component_cls_loss<double>(uniform, uniform, truth).item() ==
        doctest::Approx(2 * (std::log(6.0) + std::log(5.0) + std::log(4.0))).epsilon(1e-12));

  std::vector<V> sharp;
  for (std::size_t s = 0; s < 3; ++s) {
    const std::int64_t k = uniform[s].dim(1);
    Tensor<double> t({2, k}, -50.0);
    for (int r = 0; r < 2; ++r) t[r * k + truth[r].parts[s]] = 50.0;
    sharp.emplace_back(t);
  }
  CHECK(component_cls_loss<double>(sharp, sharp, truth).item() < 1e-12);

  std::vector<Tensor<double>> real, fake;
  std::vector<V> rv, fv;
  for (std::int64_t k : {6, 5, 4}) {
    real.push_back(test::random_tensor<double>({2, k}, 30 + k, -3, 3));
    fake.push_back(test::random_tensor<double>({2, k}, 40 + k, -3, 3));
    rv.emplace_back(real.back());
    fv.emplace_back(fake.back());
  }
  CHECK(std::abs(component_cls_term<double>(rv, truth).item() - ce_oracle(real, truth)) < 1e-6);
  CHECK(std::abs(component_cls_loss<double>(rv, fv, truth).item() - ce_oracle(real, truth) - ce_oracle(fake, truth)) <
        1e-6);

  std::vector<V> two_slots{rv[0], rv[1]};
  CHECK_THROWS_AS(component_cls_term<double>(two_slots, truth), Error);
  const std::vector<glyph::ContentId> bad{{{1, 0, 4}}, {{5, 4, 0}}};
  CHECK_THROWS_AS(component_cls_term<double>(rv, bad), Error);
}

TEST_CASE("assembled objectives") {
  LossComponents c;
  c.l1 = 0.2;
  c.adv_g = 0.3;
  c.fm = 0.1;
  c.c = 0.4;
  c.adv_d = -1.2;
  const LossWeights ones{1, 1, 1, 1};
  const auto b = assemble_objectives(c, ones);
  CHECK(b.L_G == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(b.L_CLS == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(b.L_D == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(b.raw.fm == 0.1);

  const auto zero = assemble_objectives(c, LossWeights{0, 0, 0, 0});
  CHECK(zero.L_G == 0.0);
  CHECK(zero.L_D == 0.0);
  CHECK(zero.L_CLS == 0.0);

  LossWeights fm2 = ones;
  fm2.fm = 2;
  CHECK(assemble_objectives(c, fm2).L_G - b.L_G == doctest::Approx(c.fm).epsilon(1e-12));

  // Differentiable versions agree with the plain arithmetic.
  const LossWeights w;
  const auto dflt = assemble_objectives(c, w);
  auto s = [](double v) { return V(Tensor<double>::scalar(v)); };
  CHECK(g_objective(s(c.l1), s(c.adv_g), s(c.fm), w).item() == doctest::Approx(dflt.L_G).epsilon(1e-14));
  CHECK(d_objective(s(c.adv_d), w).item() == doctest::Approx(dflt.L_D).epsilon(1e-14));
  CHECK(cls_objective(s(c.c), w).item() == doctest::Approx(dflt.L_CLS).epsilon(1e-14));

  auto bad = c;
  bad.fm = std::numeric_limits<double>::infinity();
  try {
    assemble_objectives(bad, ones);
    FAIL("expected non-finite rejection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonFinite);
    CHECK(std::string(e.what()).find("fm") != std::string::npos);
  }
  CHECK_THROWS_AS(LossWeights({-1, 1, 1, 1}).validate(), Error);
}

TEST_CASE("loss log record") {
  LossBundle b;
  b.L_G = 1.5;
  b.raw.l1 = 0.25;
  const auto j = log_record(7, b);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"step", "L_D", "L_CLS", "L_G", "l1", "adv_D", "adv_G", "fm", "c"});
  CHECK(j["step"] == 7);
  CHECK(j["L_G"] == 1.5);
  CHECK(j["l1"] == 0.25);
  CHECK(LossWeights::from_json(LossWeights{}.to_json()).l1 == 10.0);
}
