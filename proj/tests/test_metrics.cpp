// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "lfg/metrics.hpp"
#include "oracles.hpp"

using namespace lfg;
using namespace lfg::metrics;

namespace {

GaussianStats diag_stats(std::vector<double> mean, std::vector<double> var) {
  GaussianStats s;
  s.dim = static_cast<int>(mean.size());
  s.count = 10;
  s.mean = std::move(mean);
  s.covariance.assign(static_cast<std::size_t>(s.dim) * s.dim, 0.0);
  for (int i = 0; i < s.dim; ++i) s.covariance[static_cast<std::size_t>(i) * s.dim + i] = var[static_cast<std::size_t>(i)];
  return s;
}

}  // namespace

TEST_CASE("extractor embedding matches the committed golden vector") {
  const FeatureExtractor ex(4, 4);
  const auto golden = test::read_numbers("extractor_golden_4x4.txt");
  REQUIRE(golden.size() == 64);
  const auto f = ex.extract(test::fixture_image_a());
  REQUIRE(f.embedding.size() == 64);
  for (std::size_t i = 0; i < 64; ++i) CHECK(std::abs(f.embedding[i] - golden[i]) < 1e-12);
}

TEST_CASE("extractor shapes and determinism") {
  const FeatureExtractor ex(32, 32);
  CHECK(ex.layer_count() == 3);
  CHECK(ex.layer_dims(0) == std::array<int, 3>{8, 32, 32});
  CHECK(ex.layer_dims(2) == std::array<int, 3>{32, 8, 8});
  const auto spec = glyph::ScriptSpec::desk_default();
  const auto g = glyph::compose_glyph(spec, glyph::ContentId{{1, 2, 3}}, glyph::StyleParams{});
  const auto a = ex.extract(g), b = ex.extract(g);
  CHECK(a.embedding == b.embedding);
  CHECK(a.embedding.size() == 64);
  const auto batch = extract_features(ex, {&g, &g, &g});
  REQUIRE(batch.size() == 3);
  CHECK(batch[2].embedding == a.embedding);
  CHECK_THROWS_AS(ex.extract(std::vector<float>(16)), Error);
  CHECK_THROWS_AS(FeatureExtractor(4, 4).extract(g), Error);
}

TEST_CASE("gaussian statistics") {
  const auto s = gaussian_stats({{0.0}, {2.0}});
  CHECK(s.mean[0] == 1.0);
  CHECK(s.cov(0, 0) == 2.0);
  const auto flat = gaussian_stats({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
  for (double v : flat.covariance) CHECK(v == 0.0);
  CHECK_THROWS_AS(gaussian_stats({{1.0}}), Error);
  CHECK_THROWS_AS(gaussian_stats({{1.0, 2.0}, {1.0}}), Error);

  SeededRng rng(3);
  std::vector<std::vector<double>> rows(17, std::vector<double>(6));
  for (auto& r : rows)
    for (auto& v : r) v = rng.uniform(-3, 3);
  const auto st = gaussian_stats(rows);
  for (int i = 0; i < 6; ++i) {
    double m = 0;
    for (const auto& r : rows) m += r[i];
    m /= 17;
    CHECK(std::abs(st.mean[i] - m) < 1e-12);
  }
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      double c = 0;
      for (const auto& r : rows) c += (r[i] - st.mean[i]) * (r[j] - st.mean[j]);
      c /= 16;
      CHECK(std::abs(st.cov(i, j) - c) < 1e-10);
      CHECK(st.cov(i, j) == st.cov(j, i));
    }
  }
}

TEST_CASE("FID analytic cases") {
  const auto a = test::random_stats(8, 1);
  CHECK(fid(a, a) < 1e-8);
  CHECK(fid(diag_stats({0}, {1}), diag_stats({1}, {1})) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fid(diag_stats({0, 0}, {1, 1}), diag_stats({0, 0}, {4, 4})) == doctest::Approx(2.0).epsilon(1e-12));
  // Literal form drops the factor 2: 1 + 4 − 2 per axis.
  CHECK(fid(diag_stats({0, 0}, {1, 1}), diag_stats({0, 0}, {4, 4}), FidForm::kLiteral) ==
        doctest::Approx(6.0).epsilon(1e-12));
  CHECK(fid(diag_stats({0, 0}, {1, 1}), diag_stats({0, 0}, {1, 1}), FidForm::kLiteral) > 0.0);
  CHECK_THROWS_AS(fid(diag_stats({0}, {1}), diag_stats({0, 0}, {1, 1})), Error);
  CHECK_THROWS_AS(fid(diag_stats({0}, {-1}), diag_stats({0}, {1})), Error);
}

TEST_CASE("FID agrees with the Jacobi oracle") {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    const auto a = test::random_stats(8, seed), b = test::random_stats(8, seed + 100);
    const double expect = test::fid_oracle(a, b);
    CAPTURE(seed);
    CHECK(std::abs(fid(a, b) - expect) < 1e-6);
    CHECK(std::abs(fid(a, b) - fid(b, a)) < 1e-8);
  }
}

TEST_CASE("LPIPS") {
  const FeatureExtractor ex(4, 4);
  const auto fa = ex.extract(test::fixture_image_a()), fb = ex.extract(test::fixture_image_b());
  CHECK(lpips_from_features(fa.layers, fa.layers) == 0.0);

  // One identity layer, x ≡ 0, y ≡ 1 on a 2×2 single-channel map.
  const std::vector<Tensor<double>> zero{Tensor<double>({1, 2, 2}, 0.0)}, one{Tensor<double>({1, 2, 2}, 1.0)};
  CHECK(lpips_from_features(zero, one) == 1.0);

  const double value = lpips_from_features(fa.layers, fb.layers);
  CHECK(std::abs(value - test::lpips_oracle(fa.layers, fb.layers)) < 1e-6);
  const auto golden = test::read_numbers("lpips_golden_4x4.txt");
  REQUIRE(golden.size() == 1);
  CHECK(std::abs(value - golden[0]) < 1e-6);
  CHECK(lpips_from_features(fb.layers, fa.layers) == value);

  const auto spec = glyph::ScriptSpec::desk_default();
  const FeatureExtractor big(32, 32);
  const auto g1 = glyph::compose_glyph(spec, glyph::ContentId{{1, 2, 3}}, glyph::StyleParams{});
  const auto g2 = glyph::compose_glyph(spec, glyph::ContentId{{4, 0, 1}}, glyph::StyleParams{});
  CHECK(lpips(g1, g1, big) == 0.0);
  CHECK(lpips(g1, g2, big) > 0.0);
  CHECK(std::abs(lpips(g1, g2, big) - test::lpips_oracle(big.extract(g1).layers, big.extract(g2).layers)) < 1e-6);
  CHECK(lpips(g1, g2, big, true) >= 0.0);

  const std::vector<Tensor<double>> two{Tensor<double>({1, 2, 2}, 0.0), Tensor<double>({1, 1, 1}, 0.0)};
  CHECK_THROWS_AS(lpips_from_features(zero, two), Error);
}

TEST_CASE("drift report") {
  const auto spec = glyph::ScriptSpec::desk_default();
  auto contents = glyph::enumerate_contents(spec);
  contents.resize(12);
  const auto styles = glyph::desk_styles();
  const auto orig = glyph::synthesize_style(spec, styles[1], contents);
  const FeatureExtractor ex(32, 32);
  const auto same = drift_report(orig, {orig, orig}, ex);
  REQUIRE(same.rows.size() == 2);
  CHECK(same.rows[0].generation == 1);
  CHECK(same.rows[1].fid < 1e-8);
  CHECK(same.rows[1].lpips == 0.0);
  CHECK(same.fid_summary.monotone);

  const auto other = glyph::synthesize_style(spec, {"bold", styles[3].params}, contents);
  const auto diff = drift_report(orig, {orig, other}, ex);
  CHECK(diff.rows[1].fid > 0.0);
  CHECK(diff.rows[1].lpips > 0.0);
  auto fewer = contents;
  fewer.pop_back();
  CHECK_THROWS_AS(drift_report(orig, {orig.subset(fewer)}, ex), Error);
}

TEST_CASE("drift report over a reference series") {
  const std::vector<double> fid_series{58.851, 93.007, 112.391, 127.271, 164.409, 179.708};
  const std::vector<double> lpips_series{0.086, 0.099, 0.102, 0.110, 0.113, 0.114};
  std::vector<DriftRow> rows;
  for (std::size_t i = 0; i < fid_series.size(); ++i) {
    rows.push_back({static_cast<int>(i + 1), fid_series[i], lpips_series[i]});
  }
  const auto r = drift_report_from_rows(rows);
  CHECK(r.fid_summary.monotone);
  CHECK(r.lpips_summary.monotone);
  CHECK(r.fid_summary.deltas == 6);
  CHECK(r.fid_increase_pct == doctest::Approx(205.36).epsilon(1e-4));
  CHECK(r.lpips_increase_pct == doctest::Approx(32.558).epsilon(1e-4));
  CHECK(r.to_json()["rows"].size() == 6);
  CHECK(r.to_table().find("179.708") != std::string::npos);

  const auto s = summarize_series({1, 3, 2, 4});
  CHECK_FALSE(s.monotone);
  CHECK(s.nondecreasing_deltas == 2);
  CHECK(s.deltas == 3);
  CHECK(s.relative_increase_pct == 300.0);
}

TEST_CASE("SUS scores reproduce every reference row") {
  const auto rows = test::read_sus_fixture();
  REQUIRE(rows.size() == 35);
  std::vector<SusResponse> responses;
  for (const auto& r : rows) {
    CAPTURE(r.user);
    CHECK(sus_score(r.items) == r.printed);
    responses.push_back(r.items);
  }
  const auto all = sus_score(responses);
  CHECK(all.scores.size() == 35);
  CHECK(std::abs(all.mean - test::kReportedSusMean) <= 0.01);
  for (double s : all.scores) {
    CHECK(s >= 0);
    CHECK(s <= 100);
  }
  CHECK(sus_score(SusResponse{5, 2, 4, 1, 5, 1, 5, 1, 5, 2}) == 92.5);
  CHECK(sus_score(SusResponse{5, 1, 5, 1, 5, 1, 5, 1, 5, 1}) == 100.0);
  CHECK(sus_score(SusResponse{3, 3, 3, 3, 3, 3, 3, 3, 3, 3}) == 50.0);
  try {
    sus_score(SusResponse{3, 3, 3, 3, 3, 3, 6, 3, 3, 3});
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.field() == "U7");
  }
}

TEST_CASE("SUS CSV and grades") {
  const auto parsed = parse_sus_csv("q1,q2,q3,q4,q5,q6,q7,q8,q9,q10\n5,2,4,1,5,1,5,1,5,2\n\n3,3,3,3,3,3,3,3,3,3\r\n");
  REQUIRE(parsed.size() == 2);
  CHECK(sus_score(parsed[0]) == 92.5);
  CHECK_THROWS_AS(parse_sus_csv("1,2,3\n"), Error);
  CHECK_THROWS_AS(parse_sus_csv("5,2,4,1,5,1,5,1,5,9\n"), Error);

  CHECK(sus_grade(95.78) == "A");
  CHECK(sus_grade(80.3) == "A");
  CHECK(sus_grade(80.29) == "B");
  CHECK(sus_grade(68.0) == "C");
  CHECK(sus_grade(0.0) == "F");
  CHECK_THROWS_AS(sus_grade(100.5), Error);
  CHECK_THROWS_AS(sus_grade(50, {{"x", 10}}), Error);
  CHECK(sus_grade(50, {{"hi", 50}, {"lo", 0}}) == "hi");
}
