// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0
//
// lfg: headless front end for dataset synthesis, legacy runs, reports,
// atlas export, SUS scoring and the HTTP service.

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lfg/atlas.hpp"
#include "lfg/checkpoint.hpp"
#include "lfg/error.hpp"
#include "lfg/http.hpp"
#include "lfg/kernels.hpp"
#include "lfg/legacy.hpp"
#include "lfg/metrics.hpp"
#include "lfg/service.hpp"
#include "lfg/store.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<bool> deterministic;
  int threads = 0;
};

json parse_json_file(const fs::path& p) {
  try {
    return json::parse(lfg::read_file(p));
  } catch (const json::exception& e) {
    throw lfg::Error(lfg::ErrorCode::kInvalidArgument, p.string() + ": " + e.what(), "config");
  }
}

// --config file, then every --set a.b=value (value parsed as JSON when it
// parses, else taken as a string), then --seed / --deterministic.
json merged_config(const Globals& g) {
  json cfg = g.config_file.empty() ? json::object() : parse_json_file(g.config_file);
  if (!cfg.is_object()) throw lfg::Error(lfg::ErrorCode::kInvalidArgument, "config must be a JSON object", "config");
  for (const auto& s : g.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw lfg::Error(lfg::ErrorCode::kInvalidArgument, "--set expects key=value, got " + s, "set");
    }
    std::string pointer = "/" + s.substr(0, eq);
    for (char& c : pointer) {
      if (c == '.') c = '/';
    }
    const std::string raw = s.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;
    }
    cfg[json::json_pointer(pointer)] = value;
  }
  if (g.seed) cfg["seed"] = *g.seed;
  if (g.deterministic) cfg["deterministic"] = *g.deterministic;
  return cfg;
}

lfg::glyph::ScriptSpec script_from(const json& cfg) {
  return cfg.contains("script") ? lfg::glyph::ScriptSpec::from_json(cfg.at("script"))
                                : lfg::glyph::ScriptSpec::desk_default();
}

std::vector<lfg::glyph::NamedStyle> seeded_desk_styles(const Globals& g) {
  auto styles = lfg::glyph::desk_styles();
  if (g.seed) {
    for (auto& s : styles) {
      if (s.params.jitter_seed != 0) s.params.jitter_seed = lfg::hash_combine(s.params.jitter_seed, *g.seed);
    }
  }
  return styles;
}

lfg::glyph::FontStyle style_from(const std::string& id, const std::string& data_dir, const std::string& store_dir,
                                 const lfg::glyph::ScriptSpec& script, const Globals& g) {
  if (!data_dir.empty()) return lfg::glyph::load_glyphs(fs::path(data_dir) / id);
  if (!store_dir.empty()) return lfg::service::RunStore(store_dir).load_style(id);
  for (const auto& named : seeded_desk_styles(g)) {
    if (named.id == id) return lfg::glyph::synthesize_style(script, named, lfg::glyph::enumerate_contents(script));
  }
  throw lfg::Error(lfg::ErrorCode::kNotFound, "unknown style \"" + id + "\" (use --data or --store)", "style");
}

void print_generation(const lfg::legacy::GenerationRecord& r) {
  std::cout << "gen " << r.generation << "  fid " << r.fid << "  lpips " << r.lpips << "  l1 " << r.l1_head << " -> "
            << r.l1_tail << "  hash " << lfg::glyph::hash_hex(r.output_hash) << std::endl;
}

int finish(const lfg::legacy::LegacyRunResult& result) {
  std::cout << "stop: " << result.stop_reason << " after " << result.records.size() << " generation(s)\n";
  if (result.stop_reason == "error") {
    std::cerr << "error: " << result.error << "\n";
    return 1;
  }
  return 0;
}

lfg::service::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Legacy-learning font generation toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_file, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--set", g.sets, "Override a config key, e.g. --set train.steps=200");
  app.add_option("--seed", g.seed, "Seed for every random stream");
  app.add_flag("--deterministic,!--no-deterministic", g.deterministic, "Bit-reproducible run artifacts");
  app.add_option("--threads", g.threads, "OpenMP threads (0 = runtime default)");

  auto* synth = app.add_subcommand("synth-dataset", "Render the synthetic desk styles to PNG directories");
  std::string synth_out;
  synth->add_option("--out", synth_out, "Output directory (one subdirectory per style)")->required();

  auto* ingest = app.add_subcommand("ingest", "Register a directory of <style>__<content>.png glyphs");
  std::string ingest_store, ingest_dir, ingest_script;
  ingest->add_option("--store", ingest_store, "Service store root")->required();
  ingest->add_option("--dir", ingest_dir, "Glyph directory")->required()->check(CLI::ExistingDirectory);
  ingest->add_option("--script", ingest_script, "Script JSON (default: <dir>/script.json, else desk)");

  auto* train = app.add_subcommand("train", "Run legacy learning headlessly");
  std::string train_out, train_data, train_store;
  std::optional<int> train_gens;
  std::optional<std::int64_t> train_steps;
  train->add_option("--out", train_out, "Run directory to create")->required();
  train->add_option("--data", train_data, "Directory written by synth-dataset");
  train->add_option("--store", train_store, "Service store to read styles from");
  train->add_option("--generations", train_gens, "Number of legacy generations N");
  train->add_option("--steps", train_steps, "Training steps per generation");

  auto* extend = app.add_subcommand("extend", "Continue a finished run for more generations");
  std::string extend_run;
  int extend_extra = 1;
  extend->add_option("--run", extend_run, "Run directory")->required()->check(CLI::ExistingDirectory);
  extend->add_option("--extra", extend_extra, "Additional generations");

  auto* report = app.add_subcommand("report", "Drift report of a run");
  std::string report_run;
  bool report_json = false;
  report->add_option("--run", report_run, "Run directory")->required()->check(CLI::ExistingDirectory);
  report->add_flag("--json", report_json, "Emit JSON instead of a table");

  auto* exportc = app.add_subcommand("export", "Write one generation as a glyph atlas");
  std::string export_run, export_out;
  int export_gen = 0;
  exportc->add_option("--run", export_run, "Run directory")->required()->check(CLI::ExistingDirectory);
  exportc->add_option("--gen", export_gen, "Generation (0 = original target)")->required();
  exportc->add_option("--out", export_out, "Output prefix (<out>.png, <out>.json)")->required();

  auto* sus = app.add_subcommand("sus", "Score System Usability Scale responses");
  std::string sus_csv;
  bool sus_json = false;
  sus->add_option("--csv", sus_csv, "CSV with ten 1-5 answers per row")->required()->check(CLI::ExistingFile);
  sus->add_flag("--json", sus_json, "Emit JSON");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string serve_store, serve_host = "127.0.0.1";
  int serve_port = 8080, serve_workers = 1;
  bool serve_bootstrap = false;
  serve->add_option("--store", serve_store, "Store root")->required();
  serve->add_option("--host", serve_host, "Bind address");
  serve->add_option("--port", serve_port, "Port (0 = any)");
  serve->add_option("--workers", serve_workers, "Concurrent training runs");
  serve->add_flag("--bootstrap", serve_bootstrap, "Register the synthetic desk styles if missing");

  CLI11_PARSE(app, argc, argv);
  if (g.threads > 0) lfg::kernels::set_threads(g.threads);

  try {
    if (*synth) {
      const json cfg = merged_config(g);
      const auto script = script_from(cfg);
      const auto contents = lfg::glyph::enumerate_contents(script);
      for (const auto& named : seeded_desk_styles(g)) {
        const fs::path dir = fs::path(synth_out) / named.id;
        fs::create_directories(dir);
        lfg::glyph::save_glyphs(lfg::glyph::synthesize_style(script, named, contents), dir);
        lfg::write_file_atomic(dir / "script.json", script.to_json().dump(2) + "\n");
        std::cout << named.id << ": " << contents.size() << " glyphs -> " << dir.string() << "\n";
      }
      return 0;
    }

    if (*ingest) {
      std::vector<std::string> warnings;
      const auto glyphs = lfg::glyph::load_glyphs(ingest_dir, &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
      fs::path script_path = ingest_script.empty() ? fs::path(ingest_dir) / "script.json" : fs::path(ingest_script);
      const auto script = fs::exists(script_path) ? lfg::glyph::ScriptSpec::from_json(parse_json_file(script_path))
                                                  : lfg::glyph::ScriptSpec::desk_default();
      lfg::service::RunStore(ingest_store).add_style(glyphs, "ingested", script);
      std::cout << "ingested " << glyphs.style() << " (" << glyphs.size() << " glyphs)\n";
      return 0;
    }

    if (*train) {
      json cfgj = merged_config(g);
      if (train_gens) cfgj["generations"] = *train_gens;
      if (train_steps) cfgj["train"]["steps"] = *train_steps;
      const auto cfg = lfg::legacy::LegacyRunConfig::from_json(cfgj);
      const auto source = style_from(cfg.source_style, train_data, train_store, cfg.script, g);
      const auto target = style_from(cfg.target_style, train_data, train_store, cfg.script, g);
      if (fs::exists(train_out) && !fs::is_empty(train_out)) {
        throw lfg::Error(lfg::ErrorCode::kConflict, "run directory is not empty: " + train_out, "out");
      }
      lfg::legacy::RunHooks hooks;
      hooks.on_generation = print_generation;
      return finish(lfg::legacy::run_legacy(cfg, source, target, train_out, hooks));
    }

    if (*extend) {
      lfg::legacy::RunHooks hooks;
      hooks.on_generation = print_generation;
      return finish(lfg::legacy::extend_legacy(extend_run, extend_extra, hooks));
    }

    if (*report) {
      std::vector<lfg::metrics::DriftRow> rows;
      for (const auto& r : lfg::legacy::read_metrics(report_run)) rows.push_back({r.generation, r.fid, r.lpips});
      const auto rep = lfg::metrics::drift_report_from_rows(rows);
      if (report_json) {
        std::cout << rep.to_json().dump(2) << "\n";
      } else {
        std::cout << rep.to_table();
      }
      return 0;
    }

    if (*exportc) {
      const int done = lfg::legacy::completed_generations(export_run);
      if (export_gen < 0 || export_gen > done) {
        throw lfg::Error(lfg::ErrorCode::kConflict,
                         "generation " + std::to_string(export_gen) + " is not completed (" + std::to_string(done) +
                             " completed)",
                         "gen");
      }
      const fs::path prefix = export_gen == 0 ? fs::path(export_run) / "inputs" / "target.atlas"
                                              : lfg::legacy::generation_dir(export_run, export_gen) / "outputs.atlas";
      const auto atlas = lfg::atlas::read_atlas(prefix);
      const auto glyphs = lfg::atlas::import_atlas(atlas);
      lfg::atlas::write_atlas(atlas, export_out);
      std::cout << "wrote " << glyphs.size() << " glyphs to " << export_out << ".png/.json\n";
      return 0;
    }

    if (*sus) {
      const auto responses = lfg::metrics::parse_sus_csv(lfg::read_file(sus_csv));
      const auto res = lfg::metrics::sus_score(responses);
      if (sus_json) {
        std::cout << json{{"scores", res.scores}, {"mean", res.mean}, {"grade", lfg::metrics::sus_grade(res.mean)}}
                         .dump(2)
                  << "\n";
      } else {
        for (std::size_t i = 0; i < res.scores.size(); ++i) std::cout << i + 1 << "," << res.scores[i] << "\n";
        std::cout << "mean," << res.mean << "\ngrade," << lfg::metrics::sus_grade(res.mean) << "\n";
      }
      return 0;
    }

    if (*serve) {
      lfg::service::RunStore store(serve_store);
      if (serve_bootstrap) store.bootstrap_desk();
      lfg::service::ServiceOptions opts;
      opts.workers = serve_workers;
      opts.run_defaults = merged_config(g);
      lfg::service::Service service(store, opts);
      lfg::service::HttpServer http(service);
      const int port = serve_port == 0 ? http.bind_any_port(serve_host) : http.bind(serve_host, serve_port);
      if (port < 0) throw lfg::Error(lfg::ErrorCode::kIo, "cannot bind " + serve_host + ":" + std::to_string(serve_port));
      g_server = &http;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on http://" << serve_host << ":" << port << std::endl;
      http.listen();
      g_server = nullptr;
      service.shutdown();
      return 0;
    }
  } catch (const lfg::Error& e) {
    std::cerr << "error [" << lfg::to_string(e.code()) << "]";
    if (!e.field().empty()) std::cerr << " (" << e.field() << ")";
    std::cerr << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
