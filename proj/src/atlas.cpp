// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfg/atlas.hpp"

#include <algorithm>
#include <cmath>

#include "lfg/checkpoint.hpp"

namespace lfg::atlas {

namespace {
constexpr const char* kFormat = "lfg-atlas-1";

std::filesystem::path with_suffix(const std::filesystem::path& prefix, const char* ext) {
  auto p = prefix;
  p += ext;
  return p;
}
}  // namespace

std::int64_t columns_for(std::int64_t n) {
  std::int64_t c = 0;
  while (c * c < n) ++c;
  return std::max<std::int64_t>(c, 1);
}

GlyphAtlas export_atlas(const glyph::FontStyle& glyphs, const ExportOptions& options) {
  if (glyphs.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot export an empty glyph set");
  const auto& first = glyphs.begin()->second;
  const int gw = first.width, gh = first.height;
  const auto n = static_cast<std::int64_t>(glyphs.size());
  const std::int64_t cols = columns_for(n);
  const std::int64_t rows = (n + cols - 1) / cols;

  GlyphAtlas atlas;
  atlas.sheet.width = static_cast<int>(cols * gw);
  atlas.sheet.height = static_cast<int>(rows * gh);
  atlas.sheet.pixels.assign(static_cast<std::size_t>(atlas.sheet.width) * atlas.sheet.height, 0);

  nlohmann::json entries = nlohmann::json::array();
  std::int64_t i = 0;
  for (const auto& [content, g] : glyphs) {
    const int x0 = static_cast<int>((i % cols) * gw);
    const int y0 = static_cast<int>((i / cols) * gh);
    for (int y = 0; y < gh; ++y) {
      for (int x = 0; x < gw; ++x) {
        const float v = std::clamp(g.at(y, x), 0.0f, 1.0f);
        atlas.sheet.pixels[static_cast<std::size_t>(y0 + y) * atlas.sheet.width + x0 + x] =
            static_cast<std::uint8_t>(std::nearbyint(v * 255.0f));
      }
    }
    entries.push_back({{"content", content.key()}, {"style", g.style}, {"x", x0}, {"y", y0}});
    ++i;
  }

  auto& m = atlas.manifest;
  m["format"] = kFormat;
  m["style"] = glyphs.style();
  m["glyph_width"] = gw;
  m["glyph_height"] = gh;
  m["columns"] = cols;
  m["rows"] = rows;
  m["count"] = n;
  m["glyphs"] = std::move(entries);
  m["script"] = options.script ? options.script->to_json() : nlohmann::json(nullptr);
  if (options.generation) m["generation"] = *options.generation;
  return atlas;
}

glyph::FontStyle import_atlas(const GlyphAtlas& atlas) {
  const auto& m = atlas.manifest;
  try {
    if (m.at("format") != kFormat) throw Error(ErrorCode::kCorrupt, "atlas: unknown format");
    const int gw = m.at("glyph_width"), gh = m.at("glyph_height");
    const std::int64_t cols = m.at("columns"), rows = m.at("rows"), count = m.at("count");
    const auto& entries = m.at("glyphs");
    if (gw <= 0 || gh <= 0 || cols <= 0 || rows <= 0) throw Error(ErrorCode::kCorrupt, "atlas: bad geometry");
    if (static_cast<std::int64_t>(entries.size()) != count) {
      throw Error(ErrorCode::kCorrupt, "atlas: manifest lists " + std::to_string(entries.size()) +
                                           " glyphs but count is " + std::to_string(count));
    }
    if (atlas.sheet.width != cols * gw || atlas.sheet.height != rows * gh) {
      throw Error(ErrorCode::kCorrupt, "atlas: sheet is " + std::to_string(atlas.sheet.width) + "x" +
                                           std::to_string(atlas.sheet.height) + ", manifest implies " +
                                           std::to_string(cols * gw) + "x" + std::to_string(rows * gh));
    }
    std::vector<bool> used(static_cast<std::size_t>(cols * rows), false);
    glyph::FontStyle out(m.at("style").get<std::string>());
    for (const auto& e : entries) {
      const int x0 = e.at("x"), y0 = e.at("y");
      if (x0 < 0 || y0 < 0 || x0 % gw != 0 || y0 % gh != 0 || x0 + gw > atlas.sheet.width ||
          y0 + gh > atlas.sheet.height) {
        throw Error(ErrorCode::kCorrupt, "atlas: glyph cell outside the sheet grid");
      }
      const std::size_t cell = static_cast<std::size_t>((y0 / gh) * cols + x0 / gw);
      if (used[cell]) throw Error(ErrorCode::kCorrupt, "atlas: overlapping glyph cells");
      used[cell] = true;
      glyph::GlyphImage g;
      g.width = gw;
      g.height = gh;
      g.content = glyph::ContentId::parse(e.at("content"));
      g.style = e.at("style");
      g.pixels.resize(static_cast<std::size_t>(gw * gh));
      for (int y = 0; y < gh; ++y) {
        for (int x = 0; x < gw; ++x) {
          g.pixels[static_cast<std::size_t>(y * gw + x)] =
              static_cast<float>(atlas.sheet.pixels[static_cast<std::size_t>(y0 + y) * atlas.sheet.width + x0 + x]) /
              255.0f;
        }
      }
      out.insert(std::move(g));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorrupt, std::string("atlas: malformed manifest: ") + e.what());
  }
}

AtlasFiles encode(const GlyphAtlas& atlas) { return {png::encode(atlas.sheet), atlas.manifest.dump(2) + "\n"}; }

GlyphAtlas decode(const AtlasFiles& files) {
  GlyphAtlas atlas;
  atlas.sheet = png::decode(files.png_bytes, "atlas sheet");
  try {
    atlas.manifest = nlohmann::json::parse(files.manifest_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorrupt, std::string("atlas: manifest is not JSON: ") + e.what());
  }
  return atlas;
}

void write_atlas(const GlyphAtlas& atlas, const std::filesystem::path& prefix) {
  const AtlasFiles files = encode(atlas);
  write_file_atomic(with_suffix(prefix, ".png"), files.png_bytes);
  write_file_atomic(with_suffix(prefix, ".json"), files.manifest_text);
}

GlyphAtlas read_atlas(const std::filesystem::path& prefix) {
  return decode({read_file(with_suffix(prefix, ".png")), read_file(with_suffix(prefix, ".json"))});
}

}  // namespace lfg::atlas
