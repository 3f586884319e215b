// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "cli_util.hpp"
#include "grad_cases.hpp"
#include "lfg/atlas.hpp"
#include "lfg/checkpoint.hpp"
#include "lfg/ffg_net.hpp"
#include "lfg/kernels.hpp"
#include "lfg/legacy.hpp"
#include "lfg/metrics.hpp"
#include "oracles.hpp"

using namespace lfg;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void gradient_correctness() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_name;
  std::size_t n = 0;
  for (const auto& list : {test::primitive_grad_errors(), test::loss_grad_errors()}) {
    for (const auto& [name, err] : list) {
      ++n;
      if (!(err <= worst)) {
        worst = err;
        worst_name = name;
      }
    }
  }
  const double secs = seconds_since(t0);
  report("gradient-correctness", worst < 1e-4 && secs < 60.0,
         std::to_string(n) + " checks, worst " + fmt(worst) + " (" + worst_name + "), " + fmt(secs) + " s");
}

void sus_exactness() {
  const auto rows = test::read_sus_fixture();
  std::vector<metrics::SusResponse> responses;
  int exact = 0;
  for (const auto& r : rows) {
    if (metrics::sus_score(r.items) == r.printed) ++exact;
    responses.push_back(r.items);
  }
  const double mean = metrics::sus_score(responses).mean;
  const bool ok = rows.size() == 35 && exact == 35 && std::abs(mean - test::kReportedSusMean) <= 0.01;
  report("sus-exactness", ok, std::to_string(exact) + "/" + std::to_string(rows.size()) + " rows exact, mean " + fmt(mean));
}

metrics::GaussianStats diag_stats(std::vector<double> mean, std::vector<double> var) {
  metrics::GaussianStats s;
  s.dim = static_cast<int>(mean.size());
  s.count = 10;
  s.mean = std::move(mean);
  s.covariance.assign(static_cast<std::size_t>(s.dim) * s.dim, 0.0);
  for (int i = 0; i < s.dim; ++i) s.covariance[static_cast<std::size_t>(i) * s.dim + i] = var[static_cast<std::size_t>(i)];
  return s;
}

void fid_cases() {
  const auto r = test::random_stats(8, 3);
  const double same = metrics::fid(r, r);
  const double one = metrics::fid(diag_stats({0}, {1}), diag_stats({1}, {1}));
  const double two = metrics::fid(diag_stats({0, 0}, {1, 1}), diag_stats({0, 0}, {4, 4}));
  double worst = 0.0;
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    const auto a = test::random_stats(8, seed), b = test::random_stats(8, seed + 100);
    worst = std::max(worst, std::abs(metrics::fid(a, b) - test::fid_oracle(a, b)));
  }
  const bool ok = std::abs(same) < 1e-8 && std::abs(one - 1.0) < 1e-12 && std::abs(two - 2.0) < 1e-12 && worst < 1e-6;
  report("fid-analytic", ok,
         "identical " + fmt(same) + ", 1-D " + fmt(one) + ", 2-D " + fmt(two) + ", oracle gap " + fmt(worst));
}

void lpips_cases() {
  const metrics::FeatureExtractor ex(4, 4);
  const auto fa = ex.extract(test::fixture_image_a()), fb = ex.extract(test::fixture_image_b());
  const double self = metrics::lpips_from_features(fa.layers, fa.layers);
  const std::vector<Tensor<double>> zero{Tensor<double>({1, 2, 2}, 0.0)}, one{Tensor<double>({1, 2, 2}, 1.0)};
  const double identity = metrics::lpips_from_features(zero, one);
  const double gap = std::abs(metrics::lpips_from_features(fa.layers, fb.layers) - test::lpips_oracle(fa.layers, fb.layers));
  report("lpips-cases", self == 0.0 && identity == 1.0 && gap < 1e-6,
         "self " + fmt(self) + ", identity layer " + fmt(identity) + ", oracle gap " + fmt(gap));
}

void combinatorics() {
  const auto n = glyph::enumerate_contents(glyph::ScriptSpec::syllable_block(19, 21, 28)).size();
  report("composition-combinatorics", n == 11172, std::to_string(n) + " contents");
}

struct DeskRun {
  fs::path data;
  fs::path cli_run;
  fs::path lib_run;
  legacy::LegacyRunResult result;
  double lib_wall_s = 0.0;
  double cli_wall_s = 0.0;
  bool cli_ok = true;
  std::string cli_log;
};

bool cli_step(DeskRun& d, const std::string& args) {
  const auto r = test::run_cli(args);
  if (r.code != 0) {
    d.cli_ok = false;
    d.cli_log += "`lfg " + args + "` exited " + std::to_string(r.code) + ": " + r.output;
  }
  return r.code == 0;
}

// Desk configuration, once through the CLI and once in-process.
void desk_runs(DeskRun& d) {
  const std::string q = test::quote(d.data.string());
  cli_step(d, "synth-dataset --out " + q);
  auto t0 = Clock::now();
  if (d.cli_ok) cli_step(d, "train --data " + q + " --out " + test::quote(d.cli_run.string()));
  d.cli_wall_s = seconds_since(t0);
  if (d.cli_ok) cli_step(d, "report --run " + test::quote(d.cli_run.string()));
  if (d.cli_ok) {
    for (int gen : {0, 4}) {
      cli_step(d, "export --run " + test::quote(d.cli_run.string()) + " --gen " + std::to_string(gen) + " --out " +
                      test::quote((d.data.parent_path() / ("export-" + std::to_string(gen))).string()));
    }
  }

  legacy::LegacyRunConfig cfg;
  const auto source = glyph::load_glyphs(d.data / cfg.source_style);
  const auto target = glyph::load_glyphs(d.data / cfg.target_style);
  t0 = Clock::now();
  d.result = legacy::run_legacy(cfg, source, target, d.lib_run);
  d.lib_wall_s = seconds_since(t0);
}

bool non_decreasing_at_least(const std::vector<double>& series, int need) {
  int ok = 0;
  for (std::size_t i = 1; i < series.size(); ++i) ok += series[i] >= series[i - 1] ? 1 : 0;
  return ok >= need;
}

std::string series_text(const std::vector<double>& s) {
  std::string out;
  for (double v : s) out += (out.empty() ? "" : " ") + fmt(v);
  return out;
}

void drift_trend(const DeskRun& d) {
  const auto& recs = d.result.records;
  if (recs.size() != 4) {
    report("drift-trend", false, "desk run stopped after " + std::to_string(recs.size()) + " generations (" +
                                     d.result.stop_reason + " " + d.result.error + ")");
    return;
  }
  std::vector<double> fid{0.0}, lp{0.0};
  for (const auto& r : recs) {
    fid.push_back(r.fid);
    lp.push_back(r.lpips);
  }
  const bool trend = non_decreasing_at_least(fid, 3) && non_decreasing_at_least(lp, 3) && fid[4] > fid[1] &&
                     lp[4] > lp[1];
  const bool fast = d.lib_wall_s <= 1800.0;
  report("drift-trend", trend && fast,
         "FID [" + series_text(fid) + "], LPIPS [" + series_text(lp) + "], desk run " + fmt(d.lib_wall_s) + " s on " +
             std::to_string(kernels::max_threads()) + " thread(s), budget 1800 s");
}

void learning_sanity(const DeskRun& d) {
  if (d.result.records.empty()) {
    report("learning-sanity", false, "no generation completed");
    return;
  }
  const auto& g1 = d.result.records[0];
  bool cls_ok = !g1.cls_accuracy.empty();
  for (double a : g1.cls_accuracy) cls_ok = cls_ok && a >= 0.9;
  report("learning-sanity", g1.l1_tail < 0.2 * g1.l1_head && cls_ok,
         "gen-1 L1 " + fmt(g1.l1_head) + " -> " + fmt(g1.l1_tail) + ", CLS accuracy [" + series_text(g1.cls_accuracy) +
             "]");
}

void algorithm_fidelity(const DeskRun& d) {
  const auto& r = d.result;
  bool ok = r.outputs.size() == r.records.size() && !r.records.empty();
  ok = ok && static_cast<int>(r.records.size()) == legacy::completed_generations(d.lib_run);
  bool chain = ok;
  for (std::size_t i = 0; chain && i < r.records.size(); ++i) {
    chain = r.records[i].output_hash == glyph::content_hash(r.outputs[i]) &&
            (i == 0 || r.records[i].input_hash == r.records[i - 1].output_hash);
  }
  bool same = false;
  if (d.cli_ok && fs::exists(d.cli_run / "metrics.jsonl")) {
    same = read_file(d.cli_run / "metrics.jsonl") == read_file(d.lib_run / "metrics.jsonl");
  }
  report("algorithm-fidelity", ok && chain && same,
         std::to_string(r.outputs.size()) + " outputs for " + std::to_string(r.records.size()) + " records, hash chain " +
             (chain ? "intact" : "broken") + ", rerun metrics.jsonl " + (same ? "byte-identical" : "differs"));
}

void persistence(const DeskRun& d, const fs::path& scratch) {
  bool atlas_ok = !d.result.outputs.empty();
  for (const auto& out : d.result.outputs) {
    const auto back = atlas::import_atlas(atlas::decode(atlas::encode(atlas::export_atlas(out))));
    atlas_ok = atlas_ok && back == out;
  }
  bool ckpt_ok = false;
  const fs::path params = d.lib_run / "gen-4" / "params.lfgc";
  if (fs::exists(params)) {
    nlohmann::json meta;
    const auto model = net::load_model<float>(params, &meta);
    net::save_model(scratch / "resaved.lfgc", model, meta);
    ckpt_ok = read_file(params) == read_file(scratch / "resaved.lfgc");
  }
  bool cli_ok = d.cli_ok;
  if (cli_ok) {
    cli_ok = atlas::import_atlas(atlas::read_atlas(d.data.parent_path() / "export-4")) ==
             legacy::read_generation_outputs(d.cli_run, 4);
  }
  report("persistence", atlas_ok && ckpt_ok && cli_ok,
         std::string("atlas round trip ") + (atlas_ok ? "exact" : "differs") + ", checkpoint re-save " +
             (ckpt_ok ? "bit-exact" : "differs") + ", CLI path " + (cli_ok ? "ok" : "failed: " + d.cli_log));
}

}  // namespace

int main() {
  gradient_correctness();
  sus_exactness();
  fid_cases();
  lpips_cases();
  combinatorics();

  test::TempDir scratch("acceptance");
  DeskRun desk;
  desk.data = scratch.path() / "data";
  desk.cli_run = scratch.path() / "cli-run";
  desk.lib_run = scratch.path() / "lib-run";
  try {
    desk_runs(desk);
  } catch (const std::exception& e) {
    desk.result.stop_reason = "error";
    desk.result.error = e.what();
  }
  drift_trend(desk);
  learning_sanity(desk);
  algorithm_fidelity(desk);
  persistence(desk, scratch.path());
  std::cout << "CLI desk run " << fmt(desk.cli_wall_s) << " s, in-process desk run " << fmt(desk.lib_wall_s) << " s"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
