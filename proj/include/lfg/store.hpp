// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0
//
// On-disk registry behind the service:
//
//   <root>/styles/<id>/style.json             {id, origin, script}
//   <root>/styles/<id>/glyphs.atlas.{png,json}
//   <root>/runs/run-<uuid>/status.json        run state (see RunStatus)
//   <root>/runs/run-<uuid>/...                legacy run directory

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lfg/glyph.hpp"
#include "lfg/legacy.hpp"

namespace lfg::service {

struct StyleEntry {
  glyph::StyleId id;
  std::string origin;  // "synthetic" | "ingested"
  std::int64_t glyph_count = 0;
  std::vector<glyph::ContentId> thumbnails;
  glyph::ScriptSpec script;

  nlohmann::json to_json() const;
};

enum class RunState { kQueued, kRunning, kCompleted, kConverged, kFailed };

std::string to_string(RunState s);
RunState parse_run_state(const std::string& s);
// queued→running→{completed, converged, failed}; a finished successful run
// may go back to queued when it is extended.
bool transition_allowed(RunState from, RunState to);

struct RunStatus {
  std::string id;
  glyph::StyleId style;
  RunState state = RunState::kQueued;
  int generation = 0;          // completed generations
  int target_generations = 0;  // generations requested so far
  std::string stop_reason;
  std::string error;
  std::vector<legacy::GenerationRecord> rows;

  nlohmann::ordered_json to_json() const;
};

class RunStore {
 public:
  explicit RunStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  // Style ids are 1-64 characters of [A-Za-z0-9_-].
  static void validate_style_id(const std::string& id);
  void add_style(const glyph::FontStyle& glyphs, const std::string& origin, const glyph::ScriptSpec& script);
  // Registers each desk style that is not yet present.
  void bootstrap_desk(const glyph::ScriptSpec& script = glyph::ScriptSpec::desk_default());
  bool has_style(const std::string& id) const;
  std::vector<StyleEntry> list_styles() const;
  StyleEntry style_entry(const std::string& id) const;
  glyph::FontStyle load_style(const std::string& id) const;

  std::string new_run_id() const;
  std::filesystem::path run_dir(const std::string& run_id) const;
  bool has_run(const std::string& run_id) const;
  std::vector<std::string> run_ids() const;

  // status.json plus the rows and completed count read from metrics.jsonl.
  RunStatus read_status(const std::string& run_id) const;
  void write_status(const RunStatus& status) const;

 private:
  std::filesystem::path root_;
};

}  // namespace lfg::service
