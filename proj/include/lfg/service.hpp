// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run registry and background workers. Requests return immediately; runs
// execute on a bounded worker pool, and every read is served from the files
// of completed generations, so all calls stay usable while a run trains.

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "lfg/atlas.hpp"
#include "lfg/store.hpp"

namespace lfg::service {

struct ServiceOptions {
  int workers = 1;
  // Applied under every run's overrides, e.g. {"train": {"steps": 50}}.
  nlohmann::json run_defaults = nlohmann::json::object();
};

struct Sample {
  glyph::ContentId content;
  std::string png;
};

class Service {
 public:
  explicit Service(RunStore& store, ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  RunStore& store() { return store_; }

  std::vector<StyleEntry> list_styles() const;
  std::string glyph_png(const std::string& style, const std::string& content_key) const;

  // The style becomes the run's target; the source defaults to "regular".
  std::string create_run(const std::string& style, const nlohmann::json& overrides = nlohmann::json::object());
  RunStatus run_status(const std::string& id) const;
  std::vector<RunStatus> list_runs() const;
  // Generation 0 is the original target set. An empty `contents` selects all.
  std::vector<Sample> get_samples(const std::string& id, int generation,
                                  const std::vector<std::string>& contents) const;
  atlas::AtlasFiles export_selection(const std::string& id, int generation) const;
  RunStatus extend_run(const std::string& id, int extra_generations);

  // Blocks until no run is queued or running, or the timeout passes.
  bool wait_idle(std::chrono::milliseconds timeout);
  void shutdown();

 private:
  struct Job {
    std::string id;
    int extra = 0;  // 0: fresh run
  };

  void worker_loop();
  void execute(const Job& job);
  void transition(const std::string& id, RunState to, const std::string& stop_reason = {},
                  const std::string& error = {});
  std::filesystem::path completed_generation_dir(const std::string& id, int generation) const;

  RunStore& store_;
  ServiceOptions options_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::deque<Job> queue_;
  int active_ = 0;
  std::atomic<bool> stopping_{false};
  std::vector<std::thread> workers_;
};

}  // namespace lfg::service
