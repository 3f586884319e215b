// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfg/legacy.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lfg/atlas.hpp"
#include "lfg/checkpoint.hpp"
#include "lfg/error.hpp"
#include "lfg/optim.hpp"
#include "lfg/png_io.hpp"

namespace lfg::legacy {

namespace fs = std::filesystem;
using glyph::ContentId;
using glyph::FontStyle;
using glyph::GlyphImage;

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& message) {
  throw Error(ErrorCode::kInvalidArgument, field + ": " + message, field);
}

void check_rate(double v, const std::string& field) {
  if (!std::isfinite(v) || v <= 0) config_error(field, "must be a positive finite number");
}

float quantize_output(float v) {
  const float q = std::nearbyint(std::clamp(v, 0.0f, 1.0f) * 255.0f);
  return std::clamp(q, 1.0f, 254.0f) / 255.0f;
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback, const std::string& prefix = "") {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    config_error(prefix + key, "has the wrong type");
  }
}

struct Batch {
  Var<float> source;
  Var<float> target;
  Var<float> refs;
  std::vector<ContentId> contents;
  std::vector<std::int64_t> content_labels;
  std::vector<std::int64_t> style_labels;
};

Batch make_batch(const std::vector<std::size_t>& picks, const std::vector<ContentId>& contents,
                 const std::vector<std::vector<ContentId>>& plan, const FontStyle& source, const FontStyle& target,
                 const glyph::ScriptSpec& script, const net::ArchConfig& arch) {
  Batch b;
  std::vector<const GlyphImage*> src, tgt, refs;
  for (std::size_t i : picks) {
    const ContentId& c = contents[i];
    src.push_back(&source.at(c));
    tgt.push_back(&target.at(c));
    for (const auto& r : plan[i]) refs.push_back(&target.at(r));
    b.contents.push_back(c);
    b.content_labels.push_back(glyph::content_ordinal(script, c));
    b.style_labels.push_back(0);
  }
  b.source = Var<float>::constant(net::stack_glyphs<float>(src, arch));
  b.target = Var<float>::constant(net::stack_glyphs<float>(tgt, arch));
  b.refs = Var<float>::constant(net::stack_glyphs<float>(refs, arch));
  return b;
}

std::vector<Var<float>> detached(const std::vector<Var<float>>& vs) {
  std::vector<Var<float>> out;
  for (const auto& v : vs) out.push_back(v.detach());
  return out;
}

}  // namespace

// ---------------------------------------------------------------- configs

void TrainConfig::validate() const {
  if (steps < 1) config_error("train.steps", "must be >= 1");
  if (batch < 1) config_error("train.batch", "must be >= 1");
  check_rate(lr_g, "train.lr_g");
  check_rate(lr_d, "train.lr_d");
  check_rate(lr_cls, "train.lr_cls");
  weights.validate();
}

nlohmann::json TrainConfig::to_json() const {
  return {{"steps", steps},
          {"batch", batch},
          {"lr_g", lr_g},
          {"lr_d", lr_d},
          {"lr_cls", lr_cls},
          {"weights", weights.to_json()},
          {"generator_mode", generator_mode == loss::GeneratorMode::kLiteral ? "literal" : "non_saturating"},
          {"cls_in_g", cls_in_g},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig t;
  t.steps = get_or(j, "steps", t.steps, "train.");
  t.batch = get_or(j, "batch", t.batch, "train.");
  t.lr_g = get_or(j, "lr_g", t.lr_g, "train.");
  t.lr_d = get_or(j, "lr_d", t.lr_d, "train.");
  t.lr_cls = get_or(j, "lr_cls", t.lr_cls, "train.");
  if (j.contains("weights")) t.weights = loss::LossWeights::from_json(j.at("weights"));
  const std::string mode = get_or<std::string>(j, "generator_mode", "non_saturating", "train.");
  if (mode == "literal") {
    t.generator_mode = loss::GeneratorMode::kLiteral;
  } else if (mode != "non_saturating") {
    config_error("train.generator_mode", "must be \"non_saturating\" or \"literal\"");
  }
  t.cls_in_g = get_or(j, "cls_in_g", t.cls_in_g, "train.");
  t.seed = get_or(j, "seed", t.seed, "train.");
  return t;
}

void LegacyRunConfig::validate() const {
  if (generations < 1) config_error("generations", "must be >= 1");
  if (!std::isfinite(eps_drift) || eps_drift < 0) config_error("eps_drift", "must be >= 0");
  if (drift_metric != "fid" && drift_metric != "lpips") config_error("drift_metric", "must be \"fid\" or \"lpips\"");
  if (source_style.empty()) config_error("source_style", "must not be empty");
  if (target_style.empty()) config_error("target_style", "must not be empty");
  script.validate();
  if (train_contents < 1) config_error("train_contents", "must be >= 1");
  if (eval_contents < 0) config_error("eval_contents", "must be >= 0");
  if (train_contents + eval_contents > script.content_count()) {
    config_error("train_contents", "train + eval exceeds the script's " + std::to_string(script.content_count()) +
                                       " contents");
  }
  if (fail_at_generation < 0) config_error("fail_at_generation", "must be >= 0");
  arch.validate();
  if (arch.refs > train_contents) config_error("arch.refs", "exceeds the number of train contents");
  if (arch.height != script.height || arch.width != script.width) config_error("arch.height", "must match the script canvas");
  train.validate();
}

nlohmann::json LegacyRunConfig::to_json() const {
  return {{"generations", generations},
          {"eps_drift", eps_drift},
          {"drift_metric", drift_metric},
          {"source_style", source_style},
          {"target_style", target_style},
          {"train_contents", train_contents},
          {"eval_contents", eval_contents},
          {"split_seed", split_seed},
          {"seed", seed},
          {"deterministic", deterministic},
          {"update_source", update_source},
          {"fail_at_generation", fail_at_generation},
          {"script", script.to_json()},
          {"arch", arch.to_json()},
          {"train", train.to_json()}};
}

LegacyRunConfig LegacyRunConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) config_error("config", "must be a JSON object");
  LegacyRunConfig c;
  c.generations = get_or(j, "generations", c.generations);
  c.eps_drift = get_or(j, "eps_drift", c.eps_drift);
  c.drift_metric = get_or(j, "drift_metric", c.drift_metric);
  c.source_style = get_or(j, "source_style", c.source_style);
  c.target_style = get_or(j, "target_style", c.target_style);
  c.train_contents = get_or(j, "train_contents", c.train_contents);
  c.eval_contents = get_or(j, "eval_contents", c.eval_contents);
  c.split_seed = get_or(j, "split_seed", c.split_seed);
  c.seed = get_or(j, "seed", c.seed);
  c.deterministic = get_or(j, "deterministic", c.deterministic);
  c.update_source = get_or(j, "update_source", c.update_source);
  c.fail_at_generation = get_or(j, "fail_at_generation", c.fail_at_generation);
  try {
    if (j.contains("script")) c.script = glyph::ScriptSpec::from_json(j.at("script"));
  } catch (const nlohmann::json::exception& e) {
    config_error("script", e.what());
  }
  nlohmann::json arch = net::ArchConfig::for_script(c.script).to_json();
  if (j.contains("arch")) {
    if (!j.at("arch").is_object()) config_error("arch", "must be an object");
    arch.update(j.at("arch"));
  }
  // Canvas and label structure always follow the script.
  const auto derived = net::ArchConfig::for_script(c.script);
  arch["height"] = derived.height;
  arch["width"] = derived.width;
  arch["slot_cardinalities"] = derived.slot_cardinalities;
  arch["content_classes"] = derived.content_classes;
  c.arch = net::ArchConfig::from_json(arch);
  if (j.contains("train")) {
    if (!j.at("train").is_object()) config_error("train", "must be an object");
    c.train = TrainConfig::from_json(j.at("train"));
  }
  c.validate();
  return c;
}

LegacyRunConfig LegacyRunConfig::with_overrides(const nlohmann::json& overrides) const {
  if (!overrides.is_object()) config_error("config", "overrides must be a JSON object");
  nlohmann::json j = to_json();
  j.merge_patch(overrides);
  return from_json(j);
}

// ---------------------------------------------------------------- training

double TrainResult::mean_l1(std::int64_t first, std::int64_t count) const {
  const auto n = static_cast<std::int64_t>(history.size());
  first = std::clamp<std::int64_t>(first, 0, n);
  const std::int64_t last = std::clamp<std::int64_t>(first + count, first, n);
  if (last == first) return 0.0;
  double s = 0;
  for (std::int64_t i = first; i < last; ++i) s += history[static_cast<std::size_t>(i)].bundle.raw.l1;
  return s / static_cast<double>(last - first);
}

std::vector<std::vector<ContentId>> reference_plan(const std::vector<ContentId>& contents, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > contents.size()) {
    throw Error(ErrorCode::kInvalidArgument, "reference count " + std::to_string(k) + " exceeds " +
                                                 std::to_string(contents.size()) + " contents");
  }
  std::vector<std::vector<ContentId>> plan(contents.size());
  for (std::size_t i = 0; i < contents.size(); ++i) {
    for (int r = 0; r < k; ++r) plan[i].push_back(contents[(i + static_cast<std::size_t>(r)) % contents.size()]);
  }
  return plan;
}

TrainResult train_generation(net::Model<float>& model, const FontStyle& source, const FontStyle& target,
                             const glyph::ScriptSpec& script, const TrainConfig& cfg, std::uint64_t stream,
                             const std::function<void(const StepRecord&)>& on_step) {
  cfg.validate();
  const auto contents = target.contents();
  if (contents.empty()) throw Error(ErrorCode::kInvalidArgument, "train_generation: empty target set");
  for (const auto& c : contents) {
    if (!source.contains(c)) {
      throw Error(ErrorCode::kInvalidArgument, "train_generation: source lacks content " + c.key());
    }
  }
  if (source.size() != target.size()) {
    throw Error(ErrorCode::kInvalidArgument, "train_generation: source and target cover different contents");
  }
  const auto& arch = model.arch;
  const int k = arch.refs;
  const auto plan = reference_plan(contents, k);

  AdamState<float> opt_d(model.d, {cfg.lr_d});
  AdamState<float> opt_cls(model.cls, {cfg.lr_cls});
  AdamState<float> opt_g(model.g, {cfg.lr_g});

  SeededRng rng(hash_combine(cfg.seed, stream));
  std::vector<std::size_t> order(contents.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();

  TrainResult result;
  result.history.reserve(static_cast<std::size_t>(cfg.steps));
  const auto& w = cfg.weights;

  for (std::int64_t step = 1; step <= cfg.steps; ++step) {
    std::vector<std::size_t> picks;
    while (static_cast<std::int64_t>(picks.size()) < cfg.batch) {
      if (cursor == order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      picks.push_back(order[cursor++]);
    }
    try {
      const Batch b = make_batch(picks, contents, plan, source, target, script, arch);
      const Var<float> x_hat = net::generate(model, b.source, b.refs, k);
      loss::LossComponents comp;

      {  // θ_D
        const auto real = net::discriminate(model, b.target, b.style_labels, b.content_labels);
        const auto fake = net::discriminate(model, x_hat.detach(), b.style_labels, b.content_labels);
        const auto adv_d = loss::adversarial_loss(real.prob, fake.prob, loss::Side::kD);
        comp.adv_d = adv_d.item();
        backward(loss::d_objective(adv_d, w), model.d);
        adam_step(model.d, opt_d);
      }
      {  // θ_CLS, on features the current encoder extracts
        const auto f_real = net::style_trunk(model, b.target).detach();
        const auto f_fake = net::style_trunk(model, x_hat.detach()).detach();
        const auto c = loss::component_cls_loss<float>(net::classify_components(model, f_real),
                                                       net::classify_components(model, f_fake), b.contents);
        comp.c = c.item();
        backward(loss::cls_objective(c, w), model.cls);
        adam_step(model.cls, opt_cls);
      }
      {  // θ_G
        const auto real = net::discriminate(model, b.target, b.style_labels, b.content_labels);
        const auto fake = net::discriminate(model, x_hat, b.style_labels, b.content_labels);
        const auto l1 = loss::l1_loss(b.target, x_hat);
        const auto adv_g = loss::adversarial_loss(Var<float>(), fake.prob, loss::Side::kG, cfg.generator_mode);
        const auto real_feats = detached(real.features);
        const auto fm = loss::feature_matching_loss<float>(real_feats, fake.features);
        comp.l1 = l1.item();
        comp.adv_g = adv_g.item();
        comp.fm = fm.item();
        Var<float> objective = loss::g_objective(l1, adv_g, fm, w);
        if (cfg.cls_in_g) {
          const auto logits = net::classify_components(model, net::style_trunk(model, x_hat));
          objective = ops::add(objective, ops::scale(loss::component_cls_term<float>(logits, b.contents), w.c));
        }
        backward(objective, model.g);
        adam_step(model.g, opt_g);
      }
      StepRecord rec{step, loss::assemble_objectives(comp, w)};
      result.history.push_back(rec);
      if (on_step) on_step(rec);
    } catch (const Error& e) {
      throw Error(e.code(), "step " + std::to_string(step) + ": " + e.what(), e.field());
    }
  }
  return result;
}

glyph::FontStyle regenerate_training_set(const net::Model<float>& model, const FontStyle& source,
                                         const FontStyle& target) {
  const auto contents = target.contents();
  const int k = model.arch.refs;
  const auto plan = reference_plan(contents, k);
  FontStyle out(target.style());
  constexpr std::size_t kChunk = 16;
  for (std::size_t first = 0; first < contents.size(); first += kChunk) {
    const std::size_t last = std::min(contents.size(), first + kChunk);
    std::vector<const GlyphImage*> src, refs;
    for (std::size_t i = first; i < last; ++i) {
      src.push_back(&source.at(contents[i]));
      for (const auto& r : plan[i]) refs.push_back(&target.at(r));
    }
    const auto y = net::generate(model, Var<float>::constant(net::stack_glyphs<float>(src, model.arch)),
                                 Var<float>::constant(net::stack_glyphs<float>(refs, model.arch)), k);
    for (std::size_t i = first; i < last; ++i) {
      GlyphImage g = net::to_glyph(y.value(), static_cast<std::int64_t>(i - first), contents[i], target.style());
      for (float& p : g.pixels) p = quantize_output(p);
      out.insert(std::move(g));
    }
  }
  return out;
}

Verdict convergence_check(const std::vector<double>& deltas, double eps) {
  if (deltas.empty()) throw Error(ErrorCode::kInvalidArgument, "convergence_check: empty delta series");
  if (eps <= 0.0) return Verdict::kContinue;
  return std::abs(deltas.back()) < eps ? Verdict::kStop : Verdict::kContinue;
}

// ---------------------------------------------------------------- records

nlohmann::ordered_json GenerationRecord::to_json() const {
  nlohmann::ordered_json j;
  j["gen"] = generation;
  j["fid"] = fid;
  j["lpips"] = lpips;
  j["deltas"] = {{"fid", delta_fid ? nlohmann::ordered_json(*delta_fid) : nlohmann::ordered_json(nullptr)},
                 {"lpips", delta_lpips ? nlohmann::ordered_json(*delta_lpips) : nlohmann::ordered_json(nullptr)}};
  j["wall_s"] = wall_s;
  j["checkpoint"] = checkpoint;
  j["input_hash"] = glyph::hash_hex(input_hash);
  j["output_hash"] = glyph::hash_hex(output_hash);
  j["l1_head"] = l1_head;
  j["l1_tail"] = l1_tail;
  j["cls_accuracy"] = cls_accuracy;
  return j;
}

GenerationRecord GenerationRecord::from_json(const nlohmann::json& j) {
  GenerationRecord r;
  try {
    r.generation = j.at("gen");
    r.fid = j.at("fid");
    r.lpips = j.at("lpips");
    const auto& d = j.at("deltas");
    if (!d.at("fid").is_null()) r.delta_fid = d.at("fid").get<double>();
    if (!d.at("lpips").is_null()) r.delta_lpips = d.at("lpips").get<double>();
    r.wall_s = j.at("wall_s");
    r.checkpoint = j.value("checkpoint", "");
    r.input_hash = std::stoull(j.value("input_hash", "0"), nullptr, 16);
    r.output_hash = std::stoull(j.value("output_hash", "0"), nullptr, 16);
    r.l1_head = j.value("l1_head", 0.0);
    r.l1_tail = j.value("l1_tail", 0.0);
    r.cls_accuracy = j.value("cls_accuracy", std::vector<double>{});
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kCorrupt, std::string("metrics record: ") + e.what());
  }
  return r;
}

fs::path generation_dir(const fs::path& run_dir, int generation) {
  return run_dir / ("gen-" + std::to_string(generation));
}

std::vector<GenerationRecord> read_metrics(const fs::path& run_dir) {
  std::vector<GenerationRecord> out;
  const fs::path p = run_dir / "metrics.jsonl";
  if (!fs::exists(p)) return out;
  std::istringstream in(read_file(p));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(GenerationRecord::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kCorrupt, std::string("metrics.jsonl: ") + e.what());
    }
  }
  return out;
}

int completed_generations(const fs::path& run_dir) { return static_cast<int>(read_metrics(run_dir).size()); }

glyph::FontStyle read_generation_outputs(const fs::path& run_dir, int generation) {
  return atlas::import_atlas(atlas::read_atlas(generation_dir(run_dir, generation) / "outputs.atlas"));
}

// ---------------------------------------------------------------- runs

namespace {

struct RunContext {
  LegacyRunConfig cfg;
  fs::path dir;
  glyph::DatasetSplit split;
  net::Model<float> model;
  FontStyle original;       // target, train contents
  FontStyle eval_original;  // target, held-out contents
  FontStyle source;         // current content sources
  FontStyle target;         // current training targets
  metrics::FeatureExtractor extractor;
  metrics::GaussianStats base;
  std::vector<GenerationRecord> records;

  RunContext(const LegacyRunConfig& c, fs::path d)
      : cfg(c), dir(std::move(d)), extractor(c.script.height, c.script.width) {}
};

FontStyle restyled(const FontStyle& glyphs, const glyph::StyleId& style) {
  FontStyle out(style);
  for (const auto& [c, g] : glyphs) {
    GlyphImage copy = g;
    copy.style = style;
    out.insert(std::move(copy));
  }
  return out;
}

metrics::GaussianStats embed(const metrics::FeatureExtractor& ex, const FontStyle& s) {
  std::vector<const GlyphImage*> ptrs;
  for (const auto& [c, g] : s) ptrs.push_back(&g);
  std::vector<std::vector<double>> rows;
  for (auto& f : metrics::extract_features(ex, ptrs)) rows.push_back(std::move(f.embedding));
  return metrics::gaussian_stats(rows);
}

std::vector<double> cls_accuracy(const net::Model<float>& model, const FontStyle& held_out) {
  const auto& cards = model.arch.slot_cardinalities;
  std::vector<double> acc(cards.size(), 0.0);
  if (held_out.empty()) return acc;
  std::vector<const GlyphImage*> ptrs;
  for (const auto& [c, g] : held_out) ptrs.push_back(&g);
  const auto pred = net::predict_components(model, ptrs);
  for (std::size_t i = 0; i < ptrs.size(); ++i)
    for (std::size_t s = 0; s < cards.size(); ++s)
      if (pred[i][s] == ptrs[i]->content.parts[s]) acc[s] += 1.0;
  for (double& a : acc) a /= static_cast<double>(ptrs.size());
  return acc;
}

void write_generation(const RunContext& ctx, int gen, const TrainResult& train, const FontStyle& outputs,
                      const GenerationRecord& rec) {
  const fs::path final_dir = generation_dir(ctx.dir, gen);
  const fs::path tmp = ctx.dir / ("gen-" + std::to_string(gen) + ".tmp");
  if (fs::exists(final_dir)) {
    throw Error(ErrorCode::kConflict, "generation directory already exists: " + final_dir.string());
  }
  fs::remove_all(tmp);
  fs::create_directories(tmp / "samples");
  net::save_model(tmp / "params.lfgc", ctx.model,
                  {{"generation", gen},
                   {"input_hash", glyph::hash_hex(rec.input_hash)},
                   {"output_hash", glyph::hash_hex(rec.output_hash)}});
  std::string losses;
  for (const auto& s : train.history) losses += loss::log_record(s.step, s.bundle).dump() + "\n";
  write_file_atomic(tmp / "losses.jsonl", losses);
  for (const auto& [c, g] : outputs) {
    png::GrayImage img{g.width, g.height, {}};
    for (float p : g.pixels) img.pixels.push_back(static_cast<std::uint8_t>(std::nearbyint(p * 255.0f)));
    write_file_atomic(tmp / "samples" / (c.key() + ".png"), png::encode(img));
  }
  atlas::write_atlas(atlas::export_atlas(outputs, {ctx.cfg.script, gen}), tmp / "outputs.atlas");
  fs::rename(tmp, final_dir);
}

void append_metrics(const fs::path& run_dir, const GenerationRecord& rec) {
  const fs::path p = run_dir / "metrics.jsonl";
  std::string text = fs::exists(p) ? read_file(p) : std::string();
  text += rec.to_json().dump() + "\n";
  write_file_atomic(p, text);
}

void write_config(const fs::path& run_dir, const LegacyRunConfig& cfg, const glyph::DatasetSplit& split) {
  nlohmann::json j = cfg.to_json();
  j["split"] = split.to_json();
  write_file_atomic(run_dir / "config.json", j.dump(2) + "\n");
}

void run_generations(RunContext& ctx, int first, int last, const RunHooks& hooks, LegacyRunResult& result) {
  using clock = std::chrono::steady_clock;
  const auto& cfg = ctx.cfg;
  for (int gen = first; gen <= last; ++gen) {
    if (hooks.cancel && hooks.cancel->load()) {
      result.stop_reason = "error";
      result.error = "cancelled before generation " + std::to_string(gen);
      return;
    }
    const auto t0 = clock::now();
    try {
      if (gen == cfg.fail_at_generation) {
        throw Error(ErrorCode::kInvalidArgument, "injected failure at generation " + std::to_string(gen));
      }
      GenerationRecord rec;
      rec.generation = gen;
      rec.input_hash = glyph::content_hash(ctx.target);
      std::function<void(const StepRecord&)> on_step;
      if (hooks.on_step) on_step = [&](const StepRecord& s) { hooks.on_step(gen, s); };
      const TrainResult train = train_generation(ctx.model, ctx.source, ctx.target, cfg.script, cfg.train,
                                                 static_cast<std::uint64_t>(gen), on_step);
      FontStyle outputs = regenerate_training_set(ctx.model, ctx.source, ctx.target);
      rec.output_hash = glyph::content_hash(outputs);
      rec.fid = metrics::fid(ctx.base, embed(ctx.extractor, outputs));
      rec.lpips = metrics::lpips_mean(ctx.original, outputs, ctx.extractor);
      if (!ctx.records.empty()) {
        rec.delta_fid = rec.fid - ctx.records.back().fid;
        rec.delta_lpips = rec.lpips - ctx.records.back().lpips;
      }
      rec.l1_head = train.mean_l1(0, 100);
      rec.l1_tail = train.mean_l1(static_cast<std::int64_t>(train.history.size()) - 100, 100);
      rec.cls_accuracy = cls_accuracy(ctx.model, ctx.eval_original);
      rec.checkpoint = "gen-" + std::to_string(gen) + "/params.lfgc";
      rec.wall_s = cfg.deterministic ? 0.0 : std::chrono::duration<double>(clock::now() - t0).count();

      write_generation(ctx, gen, train, outputs, rec);
      append_metrics(ctx.dir, rec);
      ctx.records.push_back(rec);
      result.records.push_back(rec);
      result.outputs.push_back(outputs);
      if (hooks.on_generation) hooks.on_generation(rec);

      if (cfg.update_source) ctx.source = restyled(outputs, ctx.source.style());
      ctx.target = std::move(outputs);

      if (rec.delta_fid) {
        const double d = cfg.drift_metric == "fid" ? *rec.delta_fid : *rec.delta_lpips;
        if (convergence_check({d}, cfg.eps_drift) == Verdict::kStop) {
          result.stop_reason = "converged";
          return;
        }
      }
    } catch (const std::exception& e) {
      result.stop_reason = "error";
      result.error = "generation " + std::to_string(gen) + ": " + e.what();
      return;
    }
  }
  result.stop_reason = "n_exhausted";
}

void prepare_sets(RunContext& ctx, const FontStyle& source, const FontStyle& target) {
  for (const auto* set : {&ctx.split.train, &ctx.split.eval}) {
    for (const auto& c : *set) {
      if (!source.contains(c)) throw Error(ErrorCode::kInvalidArgument, "source style lacks content " + c.key(), "source_style");
      if (!target.contains(c)) throw Error(ErrorCode::kInvalidArgument, "target style lacks content " + c.key(), "target_style");
    }
  }
  ctx.original = target.subset(ctx.split.train);
  ctx.eval_original = target.subset(ctx.split.eval);
  ctx.source = source.subset(ctx.split.train);
  ctx.target = ctx.original;
  ctx.base = embed(ctx.extractor, ctx.original);
}

}  // namespace

LegacyRunResult run_legacy(const LegacyRunConfig& cfg, const FontStyle& source, const FontStyle& target,
                           const fs::path& run_dir, const RunHooks& hooks) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  RunContext ctx(cfg, run_dir);
  ctx.split = glyph::split_dataset(target, cfg.train_contents, cfg.eval_contents, cfg.split_seed);
  prepare_sets(ctx, source, target);
  ctx.model = net::init_model<float>(cfg.arch, cfg.seed);

  fs::create_directories(run_dir / "inputs");
  write_config(run_dir, cfg, ctx.split);
  atlas::write_atlas(atlas::export_atlas(source, {cfg.script, std::nullopt}), run_dir / "inputs" / "source.atlas");
  atlas::write_atlas(atlas::export_atlas(target, {cfg.script, std::nullopt}), run_dir / "inputs" / "target.atlas");

  LegacyRunResult result;
  run_generations(ctx, 1, cfg.generations, hooks, result);
  result.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

LegacyRunResult extend_legacy(const fs::path& run_dir, int extra, const RunHooks& hooks) {
  const auto t0 = std::chrono::steady_clock::now();
  if (extra < 1) config_error("extra_generations", "must be >= 1");
  nlohmann::json stored;
  try {
    stored = nlohmann::json::parse(read_file(run_dir / "config.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorrupt, std::string("config.json: ") + e.what());
  }
  const int done = completed_generations(run_dir);
  if (done < 1) throw Error(ErrorCode::kConflict, "run has no completed generation to extend");

  LegacyRunConfig cfg = LegacyRunConfig::from_json(stored);
  cfg.generations = done + extra;
  RunContext ctx(cfg, run_dir);
  ctx.split = glyph::DatasetSplit::from_json(stored.at("split"));
  const FontStyle source = atlas::import_atlas(atlas::read_atlas(run_dir / "inputs" / "source.atlas"));
  const FontStyle target = atlas::import_atlas(atlas::read_atlas(run_dir / "inputs" / "target.atlas"));
  prepare_sets(ctx, source, target);
  ctx.model = net::load_model<float>(generation_dir(run_dir, done) / "params.lfgc");
  ctx.records = read_metrics(run_dir);
  FontStyle last = read_generation_outputs(run_dir, done);
  if (cfg.update_source) ctx.source = restyled(last, ctx.source.style());
  ctx.target = std::move(last);

  nlohmann::json updated = stored;
  updated["generations"] = cfg.generations;
  write_file_atomic(run_dir / "config.json", updated.dump(2) + "\n");

  LegacyRunResult result;
  result.records = ctx.records;
  for (int g = 1; g < done; ++g) result.outputs.push_back(read_generation_outputs(run_dir, g));
  result.outputs.push_back(ctx.target);
  run_generations(ctx, done + 1, cfg.generations, hooks, result);
  result.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace lfg::legacy
