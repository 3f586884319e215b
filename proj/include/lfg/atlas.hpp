// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0
//
// Glyph atlas: every glyph of a FontStyle packed row-major, in content order,
// onto one 8-bit sheet that is ceil(sqrt(n)) glyphs wide, plus a JSON
// manifest locating each glyph. This is the project's font export format.

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "lfg/glyph.hpp"
#include "lfg/png_io.hpp"

namespace lfg::atlas {

struct GlyphAtlas {
  png::GrayImage sheet;
  nlohmann::json manifest;
};

struct ExportOptions {
  std::optional<glyph::ScriptSpec> script;
  std::optional<int> generation;
};

std::int64_t columns_for(std::int64_t n);

GlyphAtlas export_atlas(const glyph::FontStyle& glyphs, const ExportOptions& options = {});
glyph::FontStyle import_atlas(const GlyphAtlas& atlas);

struct AtlasFiles {
  std::string png_bytes;
  std::string manifest_text;
};

AtlasFiles encode(const GlyphAtlas& atlas);
GlyphAtlas decode(const AtlasFiles& files);

// `<prefix>.png` and `<prefix>.json`.
void write_atlas(const GlyphAtlas& atlas, const std::filesystem::path& prefix);
GlyphAtlas read_atlas(const std::filesystem::path& prefix);

}  // namespace lfg::atlas
