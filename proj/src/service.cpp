// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfg/service.hpp"

#include <algorithm>
#include <cmath>

#include "lfg/checkpoint.hpp"
#include "lfg/error.hpp"
#include "lfg/png_io.hpp"

namespace lfg::service {

namespace fs = std::filesystem;

namespace {

std::string glyph_to_png(const glyph::GlyphImage& g) {
  png::GrayImage img{g.width, g.height, {}};
  img.pixels.reserve(g.pixels.size());
  for (float p : g.pixels) img.pixels.push_back(static_cast<std::uint8_t>(std::nearbyint(p * 255.0f)));
  return png::encode(img);
}

glyph::ContentId parse_content(const std::string& key) {
  try {
    return glyph::ContentId::parse(key);
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidArgument, e.what(), "contents");
  }
}

}  // namespace

Service::Service(RunStore& store, ServiceOptions options) : store_(store), options_(std::move(options)) {
  if (options_.workers < 1) throw Error(ErrorCode::kInvalidArgument, "workers must be >= 1", "workers");
  if (!options_.run_defaults.is_object()) {
    throw Error(ErrorCode::kInvalidArgument, "run defaults must be a JSON object", "run_defaults");
  }
  for (const auto& id : store_.run_ids()) {
    RunStatus s = store_.read_status(id);
    if (s.state == RunState::kRunning) {
      // A worker died with the previous process; its partial generation
      // never got renamed into place.
      s.state = RunState::kFailed;
      s.stop_reason = "error";
      s.error = "interrupted by service restart";
      store_.write_status(s);
    } else if (s.state == RunState::kQueued) {
      const bool fresh = !fs::exists(store_.run_dir(id) / "config.json");
      queue_.push_back({id, fresh ? 0 : s.target_generations - s.generation});
    }
  }
  for (int i = 0; i < options_.workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

Service::~Service() { shutdown(); }

void Service::shutdown() {
  {
    std::lock_guard lock(mu_);
    if (stopping_.exchange(true)) return;
  }
  cv_.notify_all();
  for (auto& t : workers_) t.join();
  workers_.clear();
}

std::vector<StyleEntry> Service::list_styles() const { return store_.list_styles(); }

std::string Service::glyph_png(const std::string& style, const std::string& content_key) const {
  const glyph::FontStyle glyphs = store_.load_style(style);
  const auto c = parse_content(content_key);
  if (!glyphs.contains(c)) throw Error(ErrorCode::kNotFound, "style " + style + " has no glyph " + content_key, "content");
  return glyph_to_png(glyphs.at(c));
}

std::string Service::create_run(const std::string& style, const nlohmann::json& overrides) {
  if (!overrides.is_object()) throw Error(ErrorCode::kInvalidArgument, "config must be a JSON object", "config");
  const StyleEntry entry = store_.style_entry(style);
  nlohmann::json base = legacy::LegacyRunConfig{}.to_json();
  base["script"] = entry.script.to_json();
  base.erase("arch");  // re-derived from the script
  base.merge_patch(options_.run_defaults);
  base.merge_patch(overrides);
  base["target_style"] = style;
  const legacy::LegacyRunConfig cfg = legacy::LegacyRunConfig::from_json(base);
  if (!store_.has_style(cfg.source_style)) {
    throw Error(ErrorCode::kNotFound, "unknown source style \"" + cfg.source_style + "\"", "source_style");
  }

  RunStatus s;
  {
    std::lock_guard lock(mu_);
    s.id = store_.new_run_id();
    s.style = style;
    s.state = RunState::kQueued;
    s.target_generations = cfg.generations;
    fs::create_directories(store_.run_dir(s.id));
    write_file_atomic(store_.run_dir(s.id) / "request.json", cfg.to_json().dump(2) + "\n");
    store_.write_status(s);
    queue_.push_back({s.id, 0});
  }
  cv_.notify_one();
  return s.id;
}

RunStatus Service::run_status(const std::string& id) const {
  std::lock_guard lock(mu_);
  return store_.read_status(id);
}

std::vector<RunStatus> Service::list_runs() const {
  std::lock_guard lock(mu_);
  std::vector<RunStatus> out;
  for (const auto& id : store_.run_ids()) out.push_back(store_.read_status(id));
  return out;
}

fs::path Service::completed_generation_dir(const std::string& id, int generation) const {
  const RunStatus s = run_status(id);
  if (generation < 0) throw Error(ErrorCode::kInvalidArgument, "generation must be >= 0", "generation");
  if (generation > s.generation) {
    throw Error(ErrorCode::kConflict, "generation " + std::to_string(generation) + " is not completed (" +
                                          std::to_string(s.generation) + " completed)",
                "generation");
  }
  if (generation == 0 && !fs::exists(store_.run_dir(id) / "inputs" / "target.atlas.json")) {
    throw Error(ErrorCode::kConflict, "run has not started yet", "generation");
  }
  return generation == 0 ? store_.run_dir(id) / "inputs" : legacy::generation_dir(store_.run_dir(id), generation);
}

std::vector<Sample> Service::get_samples(const std::string& id, int generation,
                                         const std::vector<std::string>& contents) const {
  const fs::path dir = completed_generation_dir(id, generation);
  std::vector<Sample> out;
  if (generation == 0) {
    // Originals restricted to the run's training contents, like the rows.
    const auto target = atlas::import_atlas(atlas::read_atlas(dir / "target.atlas"));
    const nlohmann::json cfg = nlohmann::json::parse(read_file(store_.run_dir(id) / "config.json"));
    const auto split = glyph::DatasetSplit::from_json(cfg.at("split"));
    std::vector<glyph::ContentId> wanted;
    if (contents.empty()) {
      wanted = split.train;
      std::sort(wanted.begin(), wanted.end());
    }
    for (const auto& k : contents) wanted.push_back(parse_content(k));
    for (const auto& c : wanted) {
      if (std::find(split.train.begin(), split.train.end(), c) == split.train.end() || !target.contains(c)) {
        throw Error(ErrorCode::kNotFound, "no sample for content " + c.key(), "contents");
      }
      out.push_back({c, glyph_to_png(target.at(c))});
    }
    return out;
  }
  std::vector<glyph::ContentId> wanted;
  if (contents.empty()) {
    std::vector<std::string> keys;
    for (const auto& e : fs::directory_iterator(dir / "samples")) {
      if (e.path().extension() == ".png") keys.push_back(e.path().stem().string());
    }
    for (const auto& k : keys) wanted.push_back(parse_content(k));
    std::sort(wanted.begin(), wanted.end());
  }
  for (const auto& k : contents) wanted.push_back(parse_content(k));
  for (const auto& c : wanted) {
    const fs::path p = dir / "samples" / (c.key() + ".png");
    if (!fs::exists(p)) throw Error(ErrorCode::kNotFound, "no sample for content " + c.key(), "contents");
    out.push_back({c, read_file(p)});
  }
  return out;
}

atlas::AtlasFiles Service::export_selection(const std::string& id, int generation) const {
  const fs::path dir = completed_generation_dir(id, generation);
  const fs::path prefix = generation == 0 ? dir / "target.atlas" : dir / "outputs.atlas";
  atlas::AtlasFiles files{read_file(prefix.string() + ".png"), read_file(prefix.string() + ".json")};
  atlas::import_atlas(atlas::decode(files));  // refuse to hand out a damaged atlas
  return files;
}

RunStatus Service::extend_run(const std::string& id, int extra_generations) {
  if (extra_generations < 1) {
    throw Error(ErrorCode::kInvalidArgument, "extra_generations must be >= 1", "extra_generations");
  }
  {
    std::lock_guard lock(mu_);
    RunStatus s = store_.read_status(id);
    if (!transition_allowed(s.state, RunState::kQueued)) {
      throw Error(ErrorCode::kConflict, "run is " + to_string(s.state) + "; only completed or converged runs extend",
                  "id");
    }
    s.state = RunState::kQueued;
    s.target_generations = s.generation + extra_generations;
    s.stop_reason.clear();
    s.error.clear();
    store_.write_status(s);
    queue_.push_back({id, extra_generations});
  }
  cv_.notify_one();
  return run_status(id);
}

bool Service::wait_idle(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  return idle_cv_.wait_for(lock, timeout, [this] { return queue_.empty() && active_ == 0; });
}

void Service::transition(const std::string& id, RunState to, const std::string& stop_reason,
                         const std::string& error) {
  std::lock_guard lock(mu_);
  RunStatus s = store_.read_status(id);
  if (!transition_allowed(s.state, to)) {
    throw Error(ErrorCode::kConflict, "run " + id + ": illegal transition " + to_string(s.state) + " -> " +
                                          to_string(to));
  }
  s.state = to;
  s.stop_reason = stop_reason;
  s.error = error;
  store_.write_status(s);
}

void Service::worker_loop() {
  for (;;) {
    Job job;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      job = queue_.front();
      queue_.pop_front();
      ++active_;
    }
    execute(job);
    {
      std::lock_guard lock(mu_);
      --active_;
    }
    idle_cv_.notify_all();
  }
}

void Service::execute(const Job& job) {
  try {
    transition(job.id, RunState::kRunning);
  } catch (const std::exception&) {
    return;
  }
  const fs::path dir = store_.run_dir(job.id);
  legacy::RunHooks hooks;
  hooks.cancel = &stopping_;
  legacy::LegacyRunResult result;
  try {
    if (job.extra == 0) {
      const auto cfg = legacy::LegacyRunConfig::from_json(nlohmann::json::parse(read_file(dir / "request.json")));
      result = legacy::run_legacy(cfg, store_.load_style(cfg.source_style), store_.load_style(cfg.target_style), dir,
                                  hooks);
    } else {
      result = legacy::extend_legacy(dir, job.extra, hooks);
    }
  } catch (const std::exception& e) {
    result.stop_reason = "error";
    result.error = e.what();
  }
  if (result.stop_reason == "converged") {
    transition(job.id, RunState::kConverged, result.stop_reason);
  } else if (result.stop_reason == "n_exhausted") {
    transition(job.id, RunState::kCompleted, result.stop_reason);
  } else {
    transition(job.id, RunState::kFailed, "error", result.error);
  }
}

}  // namespace lfg::service
