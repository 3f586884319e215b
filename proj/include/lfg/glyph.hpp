// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0
//
// Components, contents, styles and glyph images, plus the synthetic
// compositional script used for desk-scale experiments.

#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lfg/error.hpp"

namespace lfg::glyph {

// Normalised rectangle inside the glyph canvas.
struct Region {
  double x0 = 0, y0 = 0, x1 = 1, y1 = 1;
};

struct Slot {
  std::string name;
  int cardinality = 1;
  Region region;
  // Optional slots treat component 0 as "absent" and draw nothing for it.
  bool optional = false;
};

struct ScriptSpec {
  std::vector<Slot> slots;
  int height = 32;
  int width = 32;

  void validate() const;
  std::int64_t content_count() const;

  // Three slots laid out like an onset / nucleus / coda syllable block.
  static ScriptSpec syllable_block(int onsets, int nuclei, int codas, int canvas = 32);
  // Desk default: (6, 5, 4) on a 32x32 canvas, optional coda.
  static ScriptSpec desk_default();

  nlohmann::json to_json() const;
  static ScriptSpec from_json(const nlohmann::json& j);
};

// One component index per slot.
struct ContentId {
  std::vector<int> parts;

  auto operator<=>(const ContentId&) const = default;
  // Dash-joined slot indices, e.g. "3-1-0".
  std::string key() const;
  static ContentId parse(const std::string& key);
};

void validate_content(const ScriptSpec& spec, const ContentId& content);

// Lexicographic order; size equals the product of slot cardinalities.
std::vector<ContentId> enumerate_contents(const ScriptSpec& spec);
// Position of `content` in enumerate_contents order.
std::int64_t content_ordinal(const ScriptSpec& spec, const ContentId& content);

using StyleId = std::string;

struct StyleParams {
  double thickness = 1.5;  // px
  double slant_deg = 0.0;
  double rounding = 0.0;   // px of edge softening
  double gamma = 1.0;      // contrast
  std::uint64_t jitter_seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static StyleParams from_json(const nlohmann::json& j);
};

struct GlyphImage {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;  // row-major, each in [0,1]
  ContentId content;
  StyleId style;

  float at(int y, int x) const { return pixels[static_cast<std::size_t>(y * width + x)]; }
  bool operator==(const GlyphImage&) const = default;
};

// Nearest 8-bit level, k / 255.
float quantize8(float v);

GlyphImage compose_glyph(const ScriptSpec& spec, const ContentId& content, const StyleParams& style,
                         const StyleId& style_id = "synthetic");

// Glyphs of one style keyed by content.
class FontStyle {
 public:
  FontStyle() = default;
  explicit FontStyle(StyleId style) : style_(std::move(style)) {}

  const StyleId& style() const { return style_; }
  std::size_t size() const { return glyphs_.size(); }
  bool empty() const { return glyphs_.empty(); }
  bool contains(const ContentId& c) const { return glyphs_.count(c) > 0; }
  const GlyphImage& at(const ContentId& c) const;

  // Rejects duplicates, style mismatches and canvas mismatches.
  void insert(GlyphImage glyph);
  std::vector<ContentId> contents() const;
  // Restriction to `contents` (all must exist).
  FontStyle subset(const std::vector<ContentId>& contents) const;

  auto begin() const { return glyphs_.begin(); }
  auto end() const { return glyphs_.end(); }
  bool operator==(const FontStyle&) const = default;

 private:
  StyleId style_;
  std::map<ContentId, GlyphImage> glyphs_;
};

// FNV-1a over contents, canvas sizes and pixel bytes, in content order.
std::uint64_t content_hash(const FontStyle& style);
std::string hash_hex(std::uint64_t h);

struct NamedStyle {
  StyleId id;
  StyleParams params;
};

// The four synthetic desk styles. The first is the canonical content source.
std::vector<NamedStyle> desk_styles();

FontStyle synthesize_style(const ScriptSpec& spec, const NamedStyle& style,
                           const std::vector<ContentId>& contents);

struct DatasetSplit {
  std::vector<ContentId> train;
  std::vector<ContentId> eval;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static DatasetSplit from_json(const nlohmann::json& j);
};

DatasetSplit split_dataset(const FontStyle& style, std::int64_t train_n, std::int64_t eval_n, std::uint64_t seed);

// Reads `<style>__<content-key>.png` files (8-bit grayscale, uniform size).
// Non-fatal notes such as "empty directory" are appended to `warnings`.
FontStyle load_glyphs(const std::filesystem::path& dir, std::vector<std::string>* warnings = nullptr);
// Inverse of load_glyphs; values are quantised to 8 bits.
void save_glyphs(const FontStyle& style, const std::filesystem::path& dir);

}  // namespace lfg::glyph
