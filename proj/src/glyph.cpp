// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfg/glyph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "lfg/png_io.hpp"
#include "lfg/tensor.hpp"

namespace lfg::glyph {

void ScriptSpec::validate() const {
  if (slots.empty()) throw Error(ErrorCode::kInvalidArgument, "script spec has no slots", "slots");
  if (height < 4 || width < 4) throw Error(ErrorCode::kInvalidArgument, "canvas smaller than 4x4", "canvas");
  for (const auto& s : slots) {
    if (s.cardinality < 1) {
      throw Error(ErrorCode::kInvalidArgument, "slot '" + s.name + "' has cardinality < 1", "slots");
    }
    const auto& r = s.region;
    if (r.x0 < 0 || r.y0 < 0 || r.x1 > 1 || r.y1 > 1 || r.x0 >= r.x1 || r.y0 >= r.y1) {
      throw Error(ErrorCode::kInvalidArgument, "slot '" + s.name + "' region is outside [0,1]^2", "slots");
    }
  }
}

std::int64_t ScriptSpec::content_count() const {
  std::int64_t n = 1;
  for (const auto& s : slots) n *= s.cardinality;
  return n;
}

ScriptSpec ScriptSpec::syllable_block(int onsets, int nuclei, int codas, int canvas) {
  ScriptSpec spec;
  spec.height = spec.width = canvas;
  spec.slots = {
      {"onset", onsets, {0.06, 0.06, 0.52, 0.58}, false},
      {"nucleus", nuclei, {0.56, 0.06, 0.94, 0.58}, false},
      {"coda", codas, {0.12, 0.64, 0.88, 0.94}, true},
  };
  spec.validate();
  return spec;
}

ScriptSpec ScriptSpec::desk_default() { return syllable_block(6, 5, 4, 32); }

nlohmann::json ScriptSpec::to_json() const {
  nlohmann::json j;
  j["height"] = height;
  j["width"] = width;
  j["slots"] = nlohmann::json::array();
  for (const auto& s : slots) {
    j["slots"].push_back({{"name", s.name},
                          {"cardinality", s.cardinality},
                          {"region", {s.region.x0, s.region.y0, s.region.x1, s.region.y1}},
                          {"optional", s.optional}});
  }
  return j;
}

ScriptSpec ScriptSpec::from_json(const nlohmann::json& j) {
  ScriptSpec spec;
  spec.height = j.at("height");
  spec.width = j.at("width");
  for (const auto& s : j.at("slots")) {
    const auto r = s.at("region").get<std::vector<double>>();
    if (r.size() != 4) throw Error(ErrorCode::kInvalidArgument, "slot region needs 4 numbers", "slots");
    spec.slots.push_back({s.at("name"), s.at("cardinality"), {r[0], r[1], r[2], r[3]}, s.value("optional", false)});
  }
  spec.validate();
  return spec;
}

std::string ContentId::key() const {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += '-';
    out += std::to_string(parts[i]);
  }
  return out;
}

ContentId ContentId::parse(const std::string& key) {
  ContentId c;
  std::size_t start = 0;
  while (true) {
    const std::size_t dash = key.find('-', start);
    const std::string tok = key.substr(start, dash == std::string::npos ? std::string::npos : dash - start);
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char ch) { return ch >= '0' && ch <= '9'; }) ||
        tok.size() > 6) {
      throw Error(ErrorCode::kInvalidArgument, "unparsable content key '" + key + "'", key);
    }
    c.parts.push_back(std::stoi(tok));
    if (dash == std::string::npos) break;
    start = dash + 1;
  }
  return c;
}

void validate_content(const ScriptSpec& spec, const ContentId& content) {
  if (content.parts.size() != spec.slots.size()) {
    throw Error(ErrorCode::kInvalidArgument, "content '" + content.key() + "' has " +
                                                 std::to_string(content.parts.size()) + " slots, script has " +
                                                 std::to_string(spec.slots.size()));
  }
  for (std::size_t i = 0; i < content.parts.size(); ++i) {
    if (content.parts[i] < 0 || content.parts[i] >= spec.slots[i].cardinality) {
      throw Error(ErrorCode::kInvalidArgument, "content '" + content.key() + "': index " +
                                                   std::to_string(content.parts[i]) + " out of range for slot '" +
                                                   spec.slots[i].name + "'");
    }
  }
}

std::vector<ContentId> enumerate_contents(const ScriptSpec& spec) {
  spec.validate();
  std::vector<ContentId> out;
  out.reserve(static_cast<std::size_t>(spec.content_count()));
  ContentId cur;
  cur.parts.assign(spec.slots.size(), 0);
  while (true) {
    out.push_back(cur);
    std::size_t i = spec.slots.size();
    while (i > 0) {
      --i;
      if (++cur.parts[i] < spec.slots[i].cardinality) break;
      cur.parts[i] = 0;
      if (i == 0) return out;
    }
  }
}

std::int64_t content_ordinal(const ScriptSpec& spec, const ContentId& content) {
  validate_content(spec, content);
  std::int64_t ord = 0;
  for (std::size_t i = 0; i < spec.slots.size(); ++i) ord = ord * spec.slots[i].cardinality + content.parts[i];
  return ord;
}

void StyleParams::validate() const {
  if (!(thickness >= 1.0)) throw Error(ErrorCode::kInvalidArgument, "stroke thickness must be >= 1 px", "thickness");
  if (!(rounding >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "rounding must be >= 0", "rounding");
  if (!(gamma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "gamma must be positive", "gamma");
  if (!(std::abs(slant_deg) < 45.0)) throw Error(ErrorCode::kInvalidArgument, "|slant| must be < 45 deg", "slant_deg");
}

nlohmann::json StyleParams::to_json() const {
  return {{"thickness", thickness}, {"slant_deg", slant_deg}, {"rounding", rounding},
          {"gamma", gamma},         {"jitter_seed", jitter_seed}};
}

StyleParams StyleParams::from_json(const nlohmann::json& j) {
  StyleParams p;
  p.thickness = j.value("thickness", p.thickness);
  p.slant_deg = j.value("slant_deg", p.slant_deg);
  p.rounding = j.value("rounding", p.rounding);
  p.gamma = j.value("gamma", p.gamma);
  p.jitter_seed = j.value("jitter_seed", p.jitter_seed);
  p.validate();
  return p;
}

float quantize8(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return std::nearbyint(c * 255.0f) / 255.0f;
}

namespace {

struct Point {
  double x, y;
};

double segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = a.x + t * dx - p.x, ey = a.y + t * dy - p.y;
  return std::sqrt(ex * ex + ey * ey);
}

constexpr std::uint64_t kComponentSalt = 0x6c6567616379ULL;

// Polylines for one component, in slot-local lattice coordinates [0,1]^2.
std::vector<std::vector<Point>> component_strokes(std::size_t slot, int component) {
  SeededRng rng(hash_combine(hash_combine(kComponentSalt, slot), static_cast<std::uint64_t>(component)));
  const int strokes = 2 + static_cast<int>(rng.below(3));
  std::vector<std::vector<Point>> out;
  for (int s = 0; s < strokes; ++s) {
    const int points = 2 + static_cast<int>(rng.below(2));
    std::vector<Point> line;
    Point prev{-1, -1};
    for (int p = 0; p < points; ++p) {
      Point q;
      do {
        q = {static_cast<double>(rng.below(4)) / 3.0, static_cast<double>(rng.below(4)) / 3.0};
      } while (q.x == prev.x && q.y == prev.y);
      line.push_back(q);
      prev = q;
    }
    out.push_back(std::move(line));
  }
  return out;
}

}  // namespace

GlyphImage compose_glyph(const ScriptSpec& spec, const ContentId& content, const StyleParams& style,
                         const StyleId& style_id) {
  spec.validate();
  validate_content(spec, content);
  style.validate();

  const int H = spec.height, W = spec.width;
  const double half = style.thickness / 2.0;
  const double soft = 1.0 + style.rounding;
  constexpr double kJitter = 0.75;
  // Ink never reaches further than this from a stroke's (snapped) skeleton.
  const double margin = half + soft / 2.0 + kJitter + 1.0;
  const double shear = std::tan(style.slant_deg * M_PI / 180.0);

  GlyphImage img;
  img.height = H;
  img.width = W;
  img.pixels.assign(static_cast<std::size_t>(H * W), 0.0f);
  img.content = content;
  img.style = style_id;

  for (std::size_t s = 0; s < spec.slots.size(); ++s) {
    const Slot& slot = spec.slots[s];
    const int comp = content.parts[s];
    if (slot.optional && comp == 0) continue;
    const double rx0 = slot.region.x0 * W + margin, rx1 = slot.region.x1 * W - margin;
    const double ry0 = slot.region.y0 * H + margin, ry1 = slot.region.y1 * H - margin;
    const double spanx = std::max(0.0, rx1 - rx0), spany = std::max(0.0, ry1 - ry0);

    SeededRng jitter(hash_combine(hash_combine(style.jitter_seed, s), static_cast<std::uint64_t>(comp)));
    std::vector<std::pair<Point, Point>> segments;
    for (const auto& line : component_strokes(s, comp)) {
      std::vector<Point> px;
      for (const auto& q : line) {
        double x = rx0 + q.x * spanx + (style.jitter_seed ? jitter.uniform(-kJitter, kJitter) : 0.0);
        double y = ry0 + q.y * spany + (style.jitter_seed ? jitter.uniform(-kJitter, kJitter) : 0.0);
        x += shear * (H / 2.0 - y);
        // Snap to pixel centres so every stroke owns at least one solid pixel.
        px.push_back({std::floor(x) + 0.5, std::floor(y) + 0.5});
      }
      for (std::size_t i = 0; i + 1 < px.size(); ++i) segments.emplace_back(px[i], px[i + 1]);
    }

    const double reach = half + soft;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const Point p{x + 0.5, y + 0.5};
        double d = 1e9;
        for (const auto& [a, b] : segments) {
          if (p.x < std::min(a.x, b.x) - reach || p.x > std::max(a.x, b.x) + reach ||
              p.y < std::min(a.y, b.y) - reach || p.y > std::max(a.y, b.y) + reach) {
            continue;
          }
          d = std::min(d, segment_distance(p, a, b));
        }
        const double cover = std::clamp((half - d) / soft + 0.5, 0.0, 1.0);
        if (cover <= 0) continue;
        const float v = static_cast<float>(std::pow(cover, style.gamma));
        float& dst = img.pixels[static_cast<std::size_t>(y * W + x)];
        dst = std::max(dst, v);
      }
    }
  }
  for (float& v : img.pixels) v = quantize8(v);
  return img;
}

const GlyphImage& FontStyle::at(const ContentId& c) const {
  auto it = glyphs_.find(c);
  if (it == glyphs_.end()) {
    throw Error(ErrorCode::kNotFound, "style '" + style_ + "' has no glyph for content " + c.key(), c.key());
  }
  return it->second;
}

void FontStyle::insert(GlyphImage glyph) {
  if (glyph.style != style_) {
    throw Error(ErrorCode::kInvalidArgument,
                "glyph of style '" + glyph.style + "' inserted into style '" + style_ + "'");
  }
  if (glyph.pixels.size() != static_cast<std::size_t>(glyph.height * glyph.width)) {
    throw Error(ErrorCode::kShapeMismatch, "glyph " + glyph.content.key() + " pixel count does not match canvas");
  }
  if (!glyphs_.empty()) {
    const auto& first = glyphs_.begin()->second;
    if (first.height != glyph.height || first.width != glyph.width) {
      throw Error(ErrorCode::kShapeMismatch, "glyph " + glyph.content.key() + " is " +
                                                 std::to_string(glyph.height) + "x" + std::to_string(glyph.width) +
                                                 ", style canvas is " + std::to_string(first.height) + "x" +
                                                 std::to_string(first.width));
    }
  }
  const ContentId key = glyph.content;
  if (!glyphs_.emplace(key, std::move(glyph)).second) {
    throw Error(ErrorCode::kConflict, "duplicate content " + key.key() + " in style '" + style_ + "'", key.key());
  }
}

std::vector<ContentId> FontStyle::contents() const {
  std::vector<ContentId> out;
  out.reserve(glyphs_.size());
  for (const auto& [c, g] : glyphs_) out.push_back(c);
  return out;
}

FontStyle FontStyle::subset(const std::vector<ContentId>& contents) const {
  FontStyle out(style_);
  for (const auto& c : contents) out.insert(at(c));
  return out;
}

std::uint64_t content_hash(const FontStyle& style) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [c, g] : style) {
    const std::string key = c.key();
    mix(key.data(), key.size());
    mix(&g.height, sizeof g.height);
    mix(&g.width, sizeof g.width);
    mix(g.pixels.data(), g.pixels.size() * sizeof(float));
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<NamedStyle> desk_styles() {
  return {
      {"regular", {1.5, 0.0, 0.0, 1.0, 0}},
      {"bold", {3.0, 0.0, 0.5, 0.8, 11}},
      {"italic", {2.0, 12.0, 0.0, 1.0, 22}},
      {"soft", {2.5, -6.0, 1.5, 1.3, 33}},
  };
}

FontStyle synthesize_style(const ScriptSpec& spec, const NamedStyle& style, const std::vector<ContentId>& contents) {
  FontStyle out(style.id);
  for (const auto& c : contents) out.insert(compose_glyph(spec, c, style.params, style.id));
  return out;
}

nlohmann::json DatasetSplit::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["train"] = nlohmann::json::array();
  j["eval"] = nlohmann::json::array();
  for (const auto& c : train) j["train"].push_back(c.key());
  for (const auto& c : eval) j["eval"].push_back(c.key());
  return j;
}

DatasetSplit DatasetSplit::from_json(const nlohmann::json& j) {
  DatasetSplit s;
  s.seed = j.value("seed", std::uint64_t{0});
  for (const auto& k : j.at("train")) s.train.push_back(ContentId::parse(k));
  for (const auto& k : j.at("eval")) s.eval.push_back(ContentId::parse(k));
  return s;
}

DatasetSplit split_dataset(const FontStyle& style, std::int64_t train_n, std::int64_t eval_n, std::uint64_t seed) {
  if (train_n < 0 || eval_n < 0 || train_n + eval_n > static_cast<std::int64_t>(style.size())) {
    throw Error(ErrorCode::kInvalidArgument,
                "split_dataset: requested " + std::to_string(train_n) + " train + " + std::to_string(eval_n) +
                    " eval glyphs from a style with " + std::to_string(style.size()),
                "train_n");
  }
  std::vector<ContentId> pool = style.contents();
  SeededRng rng(seed);
  rng.shuffle(pool);
  DatasetSplit split;
  split.seed = seed;
  split.train.assign(pool.begin(), pool.begin() + train_n);
  split.eval.assign(pool.begin() + train_n, pool.begin() + train_n + eval_n);
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.eval.begin(), split.eval.end());
  return split;
}

FontStyle load_glyphs(const std::filesystem::path& dir, std::vector<std::string>* warnings) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kNotFound, "not a directory: " + dir.string(), dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    if (warnings) warnings->push_back("no glyph files in " + dir.string());
    return FontStyle();
  }

  FontStyle out;
  std::map<ContentId, std::string> origin;
  bool first = true;
  for (const auto& path : files) {
    const std::string stem = path.stem().string();
    const std::string name = path.filename().string();
    const auto sep = stem.find("__");
    if (sep == std::string::npos || sep == 0 || sep + 2 >= stem.size()) {
      throw Error(ErrorCode::kInvalidArgument, "file name does not match <style>__<content-key>.png: " + name, name);
    }
    const std::string style = stem.substr(0, sep);
    ContentId content;
    try {
      content = ContentId::parse(stem.substr(sep + 2));
    } catch (const Error&) {
      throw Error(ErrorCode::kInvalidArgument, "unparsable content key in " + name, name);
    }
    if (first) {
      out = FontStyle(style);
      first = false;
    } else if (style != out.style()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "file " + name + " has style '" + style + "', directory holds '" + out.style() + "'", name);
    }
    if (auto it = origin.find(content); it != origin.end()) {
      throw Error(ErrorCode::kConflict, "duplicate content " + content.key() + " in " + it->second + " and " + name,
                  name);
    }
    const png::GrayImage raw = png::read(path);
    GlyphImage g;
    g.height = raw.height;
    g.width = raw.width;
    g.content = content;
    g.style = style;
    g.pixels.resize(raw.pixels.size());
    for (std::size_t i = 0; i < raw.pixels.size(); ++i) g.pixels[i] = static_cast<float>(raw.pixels[i]) / 255.0f;
    if (!out.empty()) {
      const auto& ref = out.begin()->second;
      if (ref.height != g.height || ref.width != g.width) {
        throw Error(ErrorCode::kShapeMismatch, "size mismatch: " + name + " is " + std::to_string(g.width) + "x" +
                                                   std::to_string(g.height) + ", expected " +
                                                   std::to_string(ref.width) + "x" + std::to_string(ref.height),
                    name);
      }
    }
    out.insert(std::move(g));
    origin[content] = name;
  }
  return out;
}

void save_glyphs(const FontStyle& style, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [c, g] : style) {
    png::GrayImage raw{g.width, g.height, {}};
    raw.pixels.resize(g.pixels.size());
    for (std::size_t i = 0; i < g.pixels.size(); ++i) {
      raw.pixels[i] = static_cast<std::uint8_t>(std::nearbyint(std::clamp(g.pixels[i], 0.0f, 1.0f) * 255.0f));
    }
    png::write(dir / (style.style() + "__" + c.key() + ".png"), raw);
  }
}

}  // namespace lfg::glyph
