// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0
//
// Generational retraining. Generation 1 trains on the original target glyphs;
// every later generation continues from the previous parameters and trains on
// the previous generation's regenerated glyphs. Each completed generation is
// written to the run directory before the next begins:
//
//   config.json
//   inputs/{source,target}.atlas.{png,json}
//   gen-<i>/params.lfgc
//   gen-<i>/losses.jsonl
//   gen-<i>/samples/<content>.png
//   gen-<i>/outputs.atlas.{png,json}
//   metrics.jsonl            one record per generation

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lfg/ffg_net.hpp"
#include "lfg/glyph.hpp"
#include "lfg/losses.hpp"
#include "lfg/metrics.hpp"

namespace lfg::legacy {

struct TrainConfig {
  std::int64_t steps = 2000;
  std::int64_t batch = 16;
  double lr_g = 2e-4;
  double lr_d = 2e-4;
  double lr_cls = 2e-4;
  loss::LossWeights weights;
  loss::GeneratorMode generator_mode = loss::GeneratorMode::kNonSaturating;
  bool cls_in_g = false;  // add λ_c · (generated-glyph CLS term) to L_G
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct StepRecord {
  std::int64_t step = 0;
  loss::LossBundle bundle;
};

struct TrainResult {
  std::vector<StepRecord> history;

  double mean_l1(std::int64_t first, std::int64_t count) const;
};

// Builds the k style references of every content: the target glyph itself
// followed by the next k−1 contents of `contents`, cyclically.
std::vector<std::vector<glyph::ContentId>> reference_plan(const std::vector<glyph::ContentId>& contents, int k);

// Trains in place. Each step updates θ_D, then θ_CLS, then θ_G, each with its
// own Adam state. `stream` separates the sampling order of generations.
TrainResult train_generation(net::Model<float>& model, const glyph::FontStyle& source, const glyph::FontStyle& target,
                             const glyph::ScriptSpec& script, const TrainConfig& cfg, std::uint64_t stream = 0,
                             const std::function<void(const StepRecord&)>& on_step = {});

// One generated glyph per content of `target`, quantized to 8 bits within
// [1/255, 254/255]; the style id is the target's.
glyph::FontStyle regenerate_training_set(const net::Model<float>& model, const glyph::FontStyle& source,
                                         const glyph::FontStyle& target);

enum class Verdict { kContinue, kStop };
Verdict convergence_check(const std::vector<double>& deltas, double eps);

struct LegacyRunConfig {
  int generations = 4;
  double eps_drift = 0.0;
  std::string drift_metric = "fid";  // "fid" | "lpips"
  std::string source_style = "regular";
  std::string target_style = "bold";
  std::int64_t train_contents = 96;
  std::int64_t eval_contents = 24;
  std::uint64_t split_seed = 7;
  std::uint64_t seed = 1;
  bool deterministic = true;
  bool update_source = false;
  int fail_at_generation = 0;  // test hook: throw when this generation starts
  glyph::ScriptSpec script = glyph::ScriptSpec::desk_default();
  net::ArchConfig arch;
  TrainConfig train;

  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults; arch defaults follow the script.
  static LegacyRunConfig from_json(const nlohmann::json& j);
  // Applies every key present in `overrides` on top of this config.
  LegacyRunConfig with_overrides(const nlohmann::json& overrides) const;
};

struct GenerationRecord {
  int generation = 0;
  std::string checkpoint;
  std::uint64_t input_hash = 0;
  std::uint64_t output_hash = 0;
  double fid = 0.0;
  double lpips = 0.0;
  std::optional<double> delta_fid;
  std::optional<double> delta_lpips;
  double l1_head = 0.0;  // mean L1 over the first 100 steps
  double l1_tail = 0.0;  // mean L1 over the last 100 steps
  std::vector<double> cls_accuracy;  // per slot, held-out original glyphs
  double wall_s = 0.0;

  nlohmann::ordered_json to_json() const;
  static GenerationRecord from_json(const nlohmann::json& j);
};

struct LegacyRunResult {
  std::vector<GenerationRecord> records;
  std::vector<glyph::FontStyle> outputs;  // x̂_set, one entry per record
  std::string stop_reason;                // "n_exhausted" | "converged" | "error"
  std::string error;
  double wall_s = 0.0;
};

struct RunHooks {
  std::function<void(const GenerationRecord&)> on_generation;
  std::function<void(int generation, const StepRecord&)> on_step;
  const std::atomic<bool>* cancel = nullptr;
};

// Writes config.json and the input atlases, then runs every generation.
LegacyRunResult run_legacy(const LegacyRunConfig& cfg, const glyph::FontStyle& source,
                           const glyph::FontStyle& target, const std::filesystem::path& run_dir,
                           const RunHooks& hooks = {});

// Continues a run directory for `extra` more generations from its last
// completed generation (config.json's generation count is raised to match).
LegacyRunResult extend_legacy(const std::filesystem::path& run_dir, int extra, const RunHooks& hooks = {});

// Helpers shared with the service and CLI.
std::vector<GenerationRecord> read_metrics(const std::filesystem::path& run_dir);
std::filesystem::path generation_dir(const std::filesystem::path& run_dir, int generation);
int completed_generations(const std::filesystem::path& run_dir);
glyph::FontStyle read_generation_outputs(const std::filesystem::path& run_dir, int generation);

}  // namespace lfg::legacy
