// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfg/store.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include "lfg/atlas.hpp"
#include "lfg/checkpoint.hpp"
#include "lfg/error.hpp"

namespace lfg::service {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kThumbnails = 3;

bool valid_run_id(const std::string& id) {
  // run-xxxxxxxx-xxxx-xxxx-xxxx-xxxxxxxxxxxx
  if (id.size() != 40 || id.rfind("run-", 0) != 0) return false;
  for (std::size_t i = 4; i < id.size(); ++i) {
    const char c = id[i];
    const bool dash = i == 12 || i == 17 || i == 22 || i == 27;
    if (dash ? c != '-' : !std::isxdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

nlohmann::json read_json(const fs::path& p) {
  try {
    return nlohmann::json::parse(read_file(p));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorrupt, p.filename().string() + ": " + e.what());
  }
}

}  // namespace

nlohmann::json StyleEntry::to_json() const {
  nlohmann::json thumbs = nlohmann::json::array();
  for (const auto& c : thumbnails) thumbs.push_back(c.key());
  return {{"id", id}, {"origin", origin}, {"glyph_count", glyph_count}, {"thumbnails", thumbs},
          {"script", script.to_json()}};
}

std::string to_string(RunState s) {
  switch (s) {
    case RunState::kQueued: return "queued";
    case RunState::kRunning: return "running";
    case RunState::kCompleted: return "completed";
    case RunState::kConverged: return "converged";
    case RunState::kFailed: return "failed";
  }
  return "failed";
}

RunState parse_run_state(const std::string& s) {
  for (RunState r : {RunState::kQueued, RunState::kRunning, RunState::kCompleted, RunState::kConverged,
                     RunState::kFailed}) {
    if (to_string(r) == s) return r;
  }
  throw Error(ErrorCode::kCorrupt, "unknown run state \"" + s + "\"");
}

bool transition_allowed(RunState from, RunState to) {
  switch (from) {
    case RunState::kQueued: return to == RunState::kRunning || to == RunState::kFailed;
    case RunState::kRunning:
      return to == RunState::kCompleted || to == RunState::kConverged || to == RunState::kFailed;
    case RunState::kCompleted:
    case RunState::kConverged: return to == RunState::kQueued;
    case RunState::kFailed: return false;
  }
  return false;
}

nlohmann::ordered_json RunStatus::to_json() const {
  using oj = nlohmann::ordered_json;
  oj j = {{"id", id},
                      {"style", style},
                      {"state", to_string(state)},
                      {"generation", generation},
                      {"target_generations", target_generations},
                      {"stop_reason", stop_reason.empty() ? oj(nullptr) : oj(stop_reason)},
                      {"error", error.empty() ? oj(nullptr) : oj(error)}};
  oj rs = oj::array();
  for (const auto& r : rows) rs.push_back(r.to_json());
  j["rows"] = rs;
  return j;
}

RunStore::RunStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "styles");
  fs::create_directories(root_ / "runs");
}

void RunStore::validate_style_id(const std::string& id) {
  const bool ok = !id.empty() && id.size() <= 64 && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
  if (!ok) throw Error(ErrorCode::kInvalidArgument, "style id \"" + id + "\" must be 1-64 of [A-Za-z0-9_-]", "style");
}

void RunStore::add_style(const glyph::FontStyle& glyphs, const std::string& origin, const glyph::ScriptSpec& script) {
  validate_style_id(glyphs.style());
  if (glyphs.empty()) throw Error(ErrorCode::kInvalidArgument, "style " + glyphs.style() + " has no glyphs", "style");
  if (origin != "synthetic" && origin != "ingested") {
    throw Error(ErrorCode::kInvalidArgument, "origin must be synthetic or ingested", "origin");
  }
  script.validate();
  for (const auto& [c, g] : glyphs) {
    glyph::validate_content(script, c);
    if (g.height != script.height || g.width != script.width) {
      throw Error(ErrorCode::kInvalidArgument, "glyph " + c.key() + " does not match the script canvas", "style");
    }
  }
  if (has_style(glyphs.style())) throw Error(ErrorCode::kConflict, "style " + glyphs.style() + " already exists", "style");

  const fs::path final_dir = root_ / "styles" / glyphs.style();
  const fs::path tmp = root_ / "styles" / (glyphs.style() + ".tmp");
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  atlas::write_atlas(atlas::export_atlas(glyphs, {script, std::nullopt}), tmp / "glyphs.atlas");
  const nlohmann::json meta = {{"id", glyphs.style()}, {"origin", origin}, {"script", script.to_json()}};
  write_file_atomic(tmp / "style.json", meta.dump(2) + "\n");
  fs::rename(tmp, final_dir);
}

void RunStore::bootstrap_desk(const glyph::ScriptSpec& script) {
  const auto contents = glyph::enumerate_contents(script);
  for (const auto& named : glyph::desk_styles()) {
    if (has_style(named.id)) continue;
    add_style(glyph::synthesize_style(script, named, contents), "synthetic", script);
  }
}

bool RunStore::has_style(const std::string& id) const {
  try {
    validate_style_id(id);
  } catch (const Error&) {
    return false;
  }
  return fs::exists(root_ / "styles" / id / "style.json");
}

StyleEntry RunStore::style_entry(const std::string& id) const {
  if (!has_style(id)) throw Error(ErrorCode::kNotFound, "unknown style \"" + id + "\"", "style");
  const fs::path dir = root_ / "styles" / id;
  const nlohmann::json meta = read_json(dir / "style.json");
  const nlohmann::json manifest = read_json(dir / "glyphs.atlas.json");
  StyleEntry e;
  e.id = id;
  e.origin = meta.at("origin").get<std::string>();
  e.script = glyph::ScriptSpec::from_json(meta.at("script"));
  e.glyph_count = manifest.at("count").get<std::int64_t>();
  for (const auto& g : manifest.at("glyphs")) {
    if (e.thumbnails.size() == kThumbnails) break;
    e.thumbnails.push_back(glyph::ContentId::parse(g.at("content").get<std::string>()));
  }
  return e;
}

std::vector<StyleEntry> RunStore::list_styles() const {
  if (!fs::is_directory(root_ / "styles")) throw Error(ErrorCode::kIo, "store is not initialized: " + root_.string());
  std::vector<std::string> ids;
  for (const auto& d : fs::directory_iterator(root_ / "styles")) {
    const std::string name = d.path().filename().string();
    if (d.is_directory() && has_style(name)) ids.push_back(name);
  }
  std::sort(ids.begin(), ids.end());
  std::vector<StyleEntry> out;
  for (const auto& id : ids) out.push_back(style_entry(id));
  return out;
}

glyph::FontStyle RunStore::load_style(const std::string& id) const {
  if (!has_style(id)) throw Error(ErrorCode::kNotFound, "unknown style \"" + id + "\"", "style");
  return atlas::import_atlas(atlas::read_atlas(root_ / "styles" / id / "glyphs.atlas"));
}

std::string RunStore::new_run_id() const {
  std::random_device rd;
  std::mt19937_64 rng((static_cast<std::uint64_t>(rd()) << 32) ^ rd());
  for (;;) {
    std::uint64_t hi = rng();
    std::uint64_t lo = rng();
    hi = (hi & ~0xf000ull) | 0x4000ull;                         // version 4
    lo = (lo & ~(0xc000ull << 48)) | (0x8000ull << 48);         // RFC 4122 variant
    char buf[48];
    std::snprintf(buf, sizeof buf, "run-%08x-%04x-%04x-%04x-%012llx", static_cast<unsigned>(hi >> 32),
                  static_cast<unsigned>((hi >> 16) & 0xffff), static_cast<unsigned>(hi & 0xffff),
                  static_cast<unsigned>(lo >> 48), static_cast<unsigned long long>(lo & 0xffffffffffffull));
    std::string id(buf);
    if (!fs::exists(root_ / "runs" / id)) return id;
  }
}

fs::path RunStore::run_dir(const std::string& run_id) const {
  if (!valid_run_id(run_id)) throw Error(ErrorCode::kNotFound, "unknown run \"" + run_id + "\"", "id");
  return root_ / "runs" / run_id;
}

bool RunStore::has_run(const std::string& run_id) const {
  return valid_run_id(run_id) && fs::exists(root_ / "runs" / run_id / "status.json");
}

std::vector<std::string> RunStore::run_ids() const {
  std::vector<std::string> ids;
  for (const auto& d : fs::directory_iterator(root_ / "runs")) {
    const std::string name = d.path().filename().string();
    if (has_run(name)) ids.push_back(name);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

RunStatus RunStore::read_status(const std::string& run_id) const {
  if (!has_run(run_id)) throw Error(ErrorCode::kNotFound, "unknown run \"" + run_id + "\"", "id");
  const fs::path dir = run_dir(run_id);
  const nlohmann::json j = read_json(dir / "status.json");
  RunStatus s;
  s.id = run_id;
  s.style = j.at("style").get<std::string>();
  s.state = parse_run_state(j.at("state").get<std::string>());
  s.target_generations = j.at("target_generations").get<int>();
  s.stop_reason = j.value("stop_reason", "");
  s.error = j.value("error", "");
  if (fs::exists(dir / "metrics.jsonl")) s.rows = legacy::read_metrics(dir);
  s.generation = static_cast<int>(s.rows.size());
  return s;
}

void RunStore::write_status(const RunStatus& status) const {
  const fs::path dir = run_dir(status.id);
  fs::create_directories(dir);
  const nlohmann::json j = {{"id", status.id},
                            {"style", status.style},
                            {"state", to_string(status.state)},
                            {"target_generations", status.target_generations},
                            {"stop_reason", status.stop_reason},
                            {"error", status.error}};
  write_file_atomic(dir / "status.json", j.dump(2) + "\n");
}

}  // namespace lfg::service
