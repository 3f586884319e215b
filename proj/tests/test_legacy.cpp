// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <atomic>

#include "lfg/checkpoint.hpp"
#include "lfg/legacy.hpp"
#include "test_util.hpp"

using namespace lfg;
using namespace lfg::legacy;
namespace fs = std::filesystem;

namespace {

// 12 contents on a 16×16 canvas, a handful of steps per generation.
LegacyRunConfig tiny_config(int generations = 2) {
  nlohmann::json j = {
      {"generations", generations},
      {"train_contents", 8},
      {"eval_contents", 4},
      {"script", glyph::ScriptSpec::syllable_block(3, 2, 2, 16).to_json()},
      {"arch", {{"enc_widths", {4, 8}}, {"dec_widths", {8}}, {"disc_widths", {4, 8}}, {"cls_hidden", 8}}},
      {"train", {{"steps", 6}, {"batch", 4}}},
  };
  return LegacyRunConfig::from_json(j);
}

struct Styles {
  glyph::FontStyle source, target;
};

Styles tiny_styles(const LegacyRunConfig& cfg) {
  const auto contents = glyph::enumerate_contents(cfg.script);
  const auto styles = glyph::desk_styles();
  return {glyph::synthesize_style(cfg.script, styles[0], contents),
          glyph::synthesize_style(cfg.script, styles[1], contents)};
}

LegacyRunResult run(const LegacyRunConfig& cfg, const fs::path& dir, const RunHooks& hooks = {}) {
  const auto s = tiny_styles(cfg);
  return run_legacy(cfg, s.source, s.target, dir, hooks);
}

}  // namespace

TEST_CASE("convergence check") {
  const std::vector<double> reference{34.2, 19.4, 14.9, 37.1, 15.3};
  for (std::size_t i = 1; i <= reference.size(); ++i) {
    CHECK(convergence_check({reference.begin(), reference.begin() + static_cast<long>(i)}, 1.0) ==
          Verdict::kContinue);
  }
  CHECK(convergence_check({3.0, 0.0}, 0.5) == Verdict::kStop);
  CHECK(convergence_check({3.0, -0.2}, 0.5) == Verdict::kStop);
  CHECK(convergence_check({0.0}, 0.0) == Verdict::kContinue);
  CHECK_THROWS_AS(convergence_check({}, 1.0), Error);
}

TEST_CASE("run config validation") {
  auto field_of = [](const nlohmann::json& j) {
    try {
      LegacyRunConfig::from_json(j);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInvalidArgument);
      return e.field();
    }
    return std::string("<accepted>");
  };
  CHECK(field_of({{"train", {{"steps", 0}}}}) == "train.steps");
  CHECK(field_of({{"train", {{"batch", 0}}}}) == "train.batch");
  CHECK(field_of({{"generations", 0}}) == "generations");
  CHECK(field_of({{"eps_drift", -1}}) == "eps_drift");
  CHECK(field_of({{"drift_metric", "psnr"}}) == "drift_metric");
  CHECK(field_of({{"train_contents", 200}}) == "train_contents");
  CHECK(field_of({{"generations", "four"}}) == "generations");
  CHECK(field_of(nlohmann::json::array()) == "config");

  const auto d = LegacyRunConfig::from_json(nlohmann::json::object());
  CHECK(d.generations == 4);
  CHECK(d.train.steps == 2000);
  CHECK(d.train.batch == 16);
  CHECK(d.arch.content_classes == 120);
  const auto rt = LegacyRunConfig::from_json(tiny_config().to_json());
  CHECK(rt.to_json() == tiny_config().to_json());
  CHECK(tiny_config().with_overrides({{"generations", 5}}).generations == 5);
  // Canvas and labels follow the script even when the arch says otherwise.
  CHECK(LegacyRunConfig::from_json({{"arch", {{"height", 64}}}}).arch.height == 32);
}

TEST_CASE("training is deterministic per seed") {
  const auto cfg = tiny_config();
  const auto s = tiny_styles(cfg);
  auto train_once = [&](std::uint64_t seed) {
    auto m = net::init_model<float>(cfg.arch, 3);
    auto t = cfg.train;
    t.seed = seed;
    return train_generation(m, s.source.subset(s.target.contents()), s.target, cfg.script, t).history;
  };
  const auto a = train_once(1), b = train_once(1), c = train_once(2);
  REQUIRE(a.size() == 6);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].bundle.L_G == b[i].bundle.L_G);
    CHECK(a[i].bundle.L_D == b[i].bundle.L_D);
    CHECK(a[i].bundle.L_CLS == b[i].bundle.L_CLS);
  }
  CHECK(a.back().bundle.L_G != c.back().bundle.L_G);

  auto m = net::init_model<float>(cfg.arch, 3);
  TrainConfig zero = cfg.train;
  zero.steps = 0;
  CHECK_THROWS_AS(train_generation(m, s.source, s.target, cfg.script, zero), Error);
  auto fewer = s.target.contents();
  fewer.pop_back();
  CHECK_THROWS_AS(train_generation(m, s.source.subset(fewer), s.target, cfg.script, cfg.train), Error);
}

TEST_CASE("regenerated sets cover exactly the training contents") {
  const auto cfg = tiny_config();
  const auto s = tiny_styles(cfg);
  auto contents = s.target.contents();
  contents.resize(8);
  const auto m = net::init_model<float>(cfg.arch, 4);
  const auto out = regenerate_training_set(m, s.source.subset(contents), s.target.subset(contents));
  CHECK(out.contents() == contents);
  CHECK(out.style() == s.target.style());
  for (const auto& [c, g] : out) {
    for (float p : g.pixels) {
      CHECK(p > 0.0f);
      CHECK(p < 1.0f);
      CHECK(glyph::quantize8(p) == p);
    }
  }
  const auto plan = reference_plan(contents, 3);
  CHECK(plan[0][0] == contents[0]);
  CHECK(plan[7] == std::vector<glyph::ContentId>{contents[7], contents[0], contents[1]});
  CHECK_THROWS_AS(reference_plan(contents, 9), Error);
}

TEST_CASE("a single generation") {
  test::TempDir dir("n1");
  const auto r = run(tiny_config(1), dir.path() / "run");
  CHECK(r.stop_reason == "n_exhausted");
  REQUIRE(r.records.size() == 1);
  CHECK(r.outputs.size() == 1);
  CHECK(r.records[0].generation == 1);
  CHECK_FALSE(r.records[0].delta_fid.has_value());
  CHECK(r.records[0].cls_accuracy.size() == 3);
  for (const char* p : {"config.json", "metrics.jsonl", "inputs/source.atlas.png", "inputs/target.atlas.json",
                        "gen-1/params.lfgc", "gen-1/losses.jsonl", "gen-1/outputs.atlas.png", "gen-1/samples"}) {
    CHECK_MESSAGE(fs::exists(dir.path() / "run" / p), p);
  }
  CHECK_FALSE(fs::exists(dir.path() / "run" / "gen-2"));
}

TEST_CASE("hash chain, persistence and reproducibility") {
  test::TempDir dir("chain");
  const auto cfg = tiny_config(3);
  const auto r = run(cfg, dir.path() / "a");
  REQUIRE(r.stop_reason == "n_exhausted");
  REQUIRE(r.records.size() == 3);
  REQUIRE(r.outputs.size() == 3);

  const auto s = tiny_styles(cfg);
  const auto split = glyph::split_dataset(s.target, 8, 4, cfg.split_seed);
  CHECK(r.records[0].input_hash == glyph::content_hash(s.target.subset(split.train)));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r.records[i].output_hash == glyph::content_hash(r.outputs[i]));
    CHECK(r.outputs[i].contents() == split.train);
    const auto disk = read_generation_outputs(dir.path() / "a", static_cast<int>(i) + 1);
    CHECK(disk == r.outputs[i]);
    if (i > 0) {
      CHECK(r.records[i].input_hash == r.records[i - 1].output_hash);
      REQUIRE(r.records[i].delta_fid.has_value());
      CHECK(*r.records[i].delta_fid == doctest::Approx(r.records[i].fid - r.records[i - 1].fid));
    }
  }
  const auto rows = read_metrics(dir.path() / "a");
  REQUIRE(rows.size() == 3);
  CHECK(rows[2].to_json() == r.records[2].to_json());
  CHECK(completed_generations(dir.path() / "a") == 3);

  const auto again = run(cfg, dir.path() / "b");
  CHECK(read_file(dir.path() / "a" / "metrics.jsonl") == read_file(dir.path() / "b" / "metrics.jsonl"));
  CHECK(read_file(dir.path() / "a" / "gen-3" / "params.lfgc") == read_file(dir.path() / "b" / "gen-3" / "params.lfgc"));
  CHECK(read_file(dir.path() / "a" / "config.json") == read_file(dir.path() / "b" / "config.json"));

  // Each generation continues from the previous parameters.
  const auto g1 = net::load_model<float>(dir.path() / "a" / "gen-1" / "params.lfgc");
  const auto g2 = net::load_model<float>(dir.path() / "a" / "gen-2" / "params.lfgc");
  const auto fresh = net::init_model<float>(cfg.arch, cfg.seed);
  double d12 = 0, d02 = 0;
  for (std::size_t i = 0; i < g2.g.size(); ++i) {
    for (std::int64_t k = 0; k < g2.g[i].second.numel(); ++k) {
      d12 += std::abs(g2.g[i].second.value()[k] - g1.g[i].second.value()[k]);
      d02 += std::abs(g2.g[i].second.value()[k] - fresh.g[i].second.value()[k]);
    }
  }
  CHECK(d12 < d02);
}

TEST_CASE("an injected failure keeps the completed generations") {
  test::TempDir dir("fail");
  auto cfg = tiny_config(3);
  cfg.fail_at_generation = 2;
  const auto r = run(cfg, dir.path() / "run");
  CHECK(r.stop_reason == "error");
  CHECK(r.error.find("generation 2") != std::string::npos);
  CHECK(r.records.size() == 1);
  CHECK(read_metrics(dir.path() / "run").size() == 1);
  CHECK(fs::exists(dir.path() / "run" / "gen-1" / "params.lfgc"));
  CHECK_FALSE(fs::exists(dir.path() / "run" / "gen-2"));
}

TEST_CASE("extending a run matches running it longer") {
  test::TempDir dir("extend");
  const auto one = run(tiny_config(1), dir.path() / "short");
  REQUIRE(one.records.size() == 1);
  const auto ext = extend_legacy(dir.path() / "short", 1);
  CHECK(ext.stop_reason == "n_exhausted");
  CHECK(ext.records.size() == 2);
  CHECK(ext.outputs.size() == 2);
  CHECK(ext.records[1].input_hash == ext.records[0].output_hash);
  run(tiny_config(2), dir.path() / "long");
  CHECK(read_file(dir.path() / "short" / "metrics.jsonl") == read_file(dir.path() / "long" / "metrics.jsonl"));
  CHECK(nlohmann::json::parse(read_file(dir.path() / "short" / "config.json"))["generations"] == 2);
  CHECK_THROWS_AS(extend_legacy(dir.path() / "short", 0), Error);

  auto cfg = tiny_config(1);
  cfg.fail_at_generation = 1;
  run(cfg, dir.path() / "empty");
  CHECK_THROWS_AS(extend_legacy(dir.path() / "empty", 1), Error);
}

TEST_CASE("stopping early") {
  test::TempDir dir("stop");
  auto cfg = tiny_config(4);
  cfg.eps_drift = 1e9;
  const auto r = run(cfg, dir.path() / "conv");
  CHECK(r.stop_reason == "converged");
  CHECK(r.records.size() == 2);

  std::atomic<bool> cancel{true};
  RunHooks hooks;
  hooks.cancel = &cancel;
  const auto c = run(tiny_config(2), dir.path() / "cancel", hooks);
  CHECK(c.stop_reason == "error");
  CHECK(c.records.empty());

  cancel = false;
  int seen = 0;
  std::int64_t steps = 0;
  hooks.on_generation = [&](const GenerationRecord&) {
    ++seen;
    cancel = true;
  };
  hooks.on_step = [&](int, const StepRecord&) { ++steps; };
  const auto h = run(tiny_config(3), dir.path() / "hooks", hooks);
  CHECK(seen == 1);
  CHECK(steps == 6);
  CHECK(h.records.size() == 1);
  CHECK(h.stop_reason == "error");
}

TEST_CASE("literal source update") {
  test::TempDir dir("src");
  auto cfg = tiny_config(2);
  cfg.update_source = true;
  const auto r = run(cfg, dir.path() / "run");
  CHECK(r.stop_reason == "n_exhausted");
  CHECK(r.records.size() == 2);
  CHECK(r.records[1].input_hash == r.records[0].output_hash);
}

TEST_CASE("generation records round trip") {
  GenerationRecord rec;
  rec.generation = 3;
  rec.fid = 1.5;
  rec.lpips = 0.25;
  rec.delta_fid = 0.5;
  rec.delta_lpips = -0.01;
  rec.cls_accuracy = {1.0, 0.9};
  rec.input_hash = 0xabcdef;
  const auto j = rec.to_json();
  CHECK(j["gen"] == 3);
  CHECK(j["deltas"]["fid"] == 0.5);
  CHECK(GenerationRecord::from_json(j).to_json() == j);
  GenerationRecord first;
  first.generation = 1;
  CHECK(first.to_json()["deltas"]["fid"].is_null());
  CHECK_THROWS_AS(GenerationRecord::from_json({{"gen", "x"}}), Error);
}
