// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0
//
// Analytic gradients against central finite differences at 64-bit.

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include "grad_cases.hpp"
#include "lfg/ffg_net.hpp"
#include "lfg/losses.hpp"
#include "lfg/optim.hpp"

using namespace lfg;
using namespace lfg::test;

TEST_CASE("grad_check reports exact gradients of sum") {
  const double err = grad_check<double>([](const V& x) { return ops::sum(x); },
                                        test::random_tensor<double>({5}, 1), kStep);
  CHECK(err < 1e-9);
  CHECK_THROWS_AS(grad_check<double>([](const V& x) { return x; }, test::random_tensor<double>({2}, 1), kStep), Error);
  CHECK_THROWS_AS(grad_check<double>([](const V& x) { return ops::sum(x); }, test::random_tensor<double>({2}, 1), 0.0),
                  Error);
}

TEST_CASE("every primitive passes the finite-difference check") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cases = primitive_cases();
  std::set<std::string> covered;
  for (std::string_view name : primitive_names()) {
    const std::string id(name);
    REQUIRE_MESSAGE(cases.count(id), "no gradient case for " << id);
    const Case& cs = cases.at(id);
    for (std::size_t which = 0; which < cs.inputs.size(); ++which) {
      auto fn = [&](const V& x) {
        std::vector<V> in;
        for (std::size_t i = 0; i < cs.inputs.size(); ++i) in.push_back(i == which ? x : V(cs.inputs[i]));
        return project(apply_primitive<double>(id, std::span<const V>(in), cs.attrs), 99);
      };
      const double err = grad_check<double>(fn, cs.inputs[which], kStep);
      CAPTURE(id);
      CAPTURE(which);
      CHECK(err < kTol);
    }
    covered.insert(id);
  }
  CHECK(covered.size() == 18);
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::minutes(1));
}

TEST_CASE("layer helpers pass the finite-difference check") {
  const auto x4 = test::random_tensor<double>({4, 3, 2, 2}, 31);
  const auto bias = test::random_tensor<double>({3}, 32);
  const std::vector<std::int64_t> rows{2, 0, 2};
  std::vector<std::pair<std::string, std::function<V(const V&)>>> fns = {
      {"add_channel_bias(x)", [&](const V& x) { return project(ops::add_channel_bias(x, V(bias)), 1); }},
      {"add_channel_bias(b)",
       [&](const V& b) { return project(ops::add_channel_bias(V(x4), b), 1); }},
      {"row_sum", [&](const V& x) { return project(ops::row_sum(ops::flatten(x)), 2); }},
      {"mean_spatial", [&](const V& x) { return project(ops::mean_spatial(x), 3); }},
      {"broadcast_spatial",
       [&](const V& x) { return project(ops::broadcast_spatial(ops::mean_spatial(x), 3, 2), 4); }},
      {"group_mean", [&](const V& x) { return project(ops::group_mean(x, 2), 5); }},
      {"select_rows", [&](const V& x) { return project(ops::select_rows(x, std::span<const std::int64_t>(rows)), 6); }},
      {"add_scalar", [&](const V& x) { return project(ops::add_scalar(x, 0.3), 7); }},
      {"reshape", [&](const V& x) { return project(ops::reshape(x, {8, 6}), 8); }},
      {"clamp", [&](const V& x) { return project(ops::clamp(ops::scale(x, 0.5), -0.9, 0.9), 9); }},
  };
  for (const auto& [name, fn] : fns) {
    CAPTURE(name);
    const Tensor<double>& point = name == "add_channel_bias(b)" ? bias : x4;
    CHECK(grad_check<double>(fn, point, kStep) < kTol);
  }
}

TEST_CASE("losses pass the finite-difference check") {
  for (const auto& [name, err] : loss_grad_errors()) {
    CAPTURE(name);
    CHECK(err < kTol);
  }
}

TEST_CASE("generator objective on a micro model") {
  net::ArchConfig arch;
  arch.height = 8;
  arch.width = 8;
  arch.enc_widths = {2, 3};
  arch.dec_widths = {3};
  arch.disc_widths = {2, 3};
  arch.cls_hidden = 4;
  arch.slot_cardinalities = {2, 2};
  arch.content_classes = 4;
  arch.refs = 2;
  auto model = net::init_model<double>(arch, 3);
  // Non-zero heads so the adversarial term depends on the generator.
  for (auto& [name, p] : model.d) {
    if (name.find("style") != std::string::npos || name.find("content") != std::string::npos) {
      p.mutable_value() = test::random_tensor<double>(p.shape(), 60, -0.5, 0.5);
    }
  }
  const V src(test::random_tensor<double>({2, 1, 8, 8}, 61, 0, 1));
  const V refs(test::random_tensor<double>({4, 1, 8, 8}, 62, 0, 1));
  const V target(test::random_tensor<double>({2, 1, 8, 8}, 63, 0, 1));
  const std::vector<std::int64_t> styles{0, 0}, contents{1, 3};
  const auto real = net::discriminate(model, target, std::span<const std::int64_t>(styles),
                                      std::span<const std::int64_t>(contents));
  std::vector<V> real_feats;
  for (const auto& f : real.features) real_feats.push_back(f.detach());

  auto objective = [&] {
    const V fake = net::generate(model, src, refs, 2);
    const auto d = net::discriminate(model, fake, std::span<const std::int64_t>(styles),
                                     std::span<const std::int64_t>(contents));
    const V l1 = loss::l1_loss(target, fake);
    const V adv = loss::adversarial_loss(V(), d.prob, loss::Side::kG);
    const V fm = loss::feature_matching_loss<double>(real_feats, d.features);
    return loss::g_objective(l1, adv, fm, loss::LossWeights{});
  };
  CHECK(grad_check_params<double>(objective, model.g, 1e-6, 12) < 1e-3);
}
