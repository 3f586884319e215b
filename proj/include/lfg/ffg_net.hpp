// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0
//
// Few-shot font generation network: content encoder, style encoder and
// decoder (together the generator G), a two-headed discriminator D and a
// per-slot component classifier CLS.
//
// Images travel as [N,1,H,W] tensors. Style references for N targets are
// stacked as [N*k,1,H,W], k consecutive rows per target.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "lfg/autograd.hpp"
#include "lfg/glyph.hpp"

namespace lfg::net {

struct ArchConfig {
  int height = 32;
  int width = 32;
  int kernel = 3;
  std::vector<int> enc_widths{16, 32, 64};   // stride-2 stages, shared by Enc_c and Enc_s
  std::vector<int> dec_widths{64, 32};       // upsample+conv stages; a final stage maps to 1 channel
  std::vector<int> disc_widths{16, 32, 64};  // one feature layer per entry (L)
  int cls_hidden = 64;
  std::vector<int> slot_cardinalities{6, 5, 4};
  int style_classes = 1;
  int content_classes = 120;
  double alpha = 0.2;
  int refs = 3;

  void validate() const;
  int feature_h() const { return height >> enc_widths.size(); }
  int feature_w() const { return width >> enc_widths.size(); }
  int style_dim() const { return enc_widths.back(); }
  std::int64_t content_numel() const {
    return static_cast<std::int64_t>(enc_widths.back()) * feature_h() * feature_w();
  }
  Shape content_shape(std::int64_t n) const { return {n, enc_widths.back(), feature_h(), feature_w()}; }

  nlohmann::json to_json() const;
  static ArchConfig from_json(const nlohmann::json& j);
  static ArchConfig for_script(const glyph::ScriptSpec& spec);
};

template <typename Real>
struct Model {
  ArchConfig arch;
  ParamSet<Real> g;    // Enc_c, Enc_s, Dec
  ParamSet<Real> d;
  ParamSet<Real> cls;
};

template <typename Real>
Model<Real> init_model(const ArchConfig& arch, std::uint64_t seed);

template <typename Real>
Model<Real> clone_model(const Model<Real>& model);

// [N,1,H,W] -> [N,C,h,w]
template <typename Real>
Var<Real> encode_content(const Model<Real>& model, const Var<Real>& x);
// Enc_s trunk before pooling, [N,1,H,W] -> [N,C,h,w]; CLS reads these.
template <typename Real>
Var<Real> style_trunk(const Model<Real>& model, const Var<Real>& x);
// [N*k,1,H,W] -> [N,C]: mean over each target's k pooled reference encodings.
template <typename Real>
Var<Real> encode_style(const Model<Real>& model, const Var<Real>& refs, std::int64_t k);
// ([N,C], [N,C,h,w]) -> [N,1,H,W] in (0,1)
template <typename Real>
Var<Real> decode(const Model<Real>& model, const Var<Real>& f_s, const Var<Real>& f_c);
template <typename Real>
Var<Real> generate(const Model<Real>& model, const Var<Real>& content_source, const Var<Real>& refs,
                   std::int64_t k);

template <typename Real>
struct DiscOutput {
  std::vector<Var<Real>> features;  // D^(1..L)
  Var<Real> style_logit;            // [N], entry at each row's style label
  Var<Real> content_logit;          // [N], entry at each row's content label
  Var<Real> prob;                   // [N], sigmoid(style) * sigmoid(content)
};

template <typename Real>
DiscOutput<Real> discriminate(const Model<Real>& model, const Var<Real>& x,
                              std::span<const std::int64_t> style_labels,
                              std::span<const std::int64_t> content_labels);

// One [N, cardinality] logit tensor per slot.
template <typename Real>
std::vector<Var<Real>> classify_components(const Model<Real>& model, const Var<Real>& trunk_features);

// Glyph-level conveniences.
template <typename Real>
Tensor<Real> stack_glyphs(std::span<const glyph::GlyphImage* const> glyphs, const ArchConfig& arch);
template <typename Real>
glyph::GlyphImage to_glyph(const Tensor<Real>& batch, std::int64_t row, const glyph::ContentId& content,
                           const std::string& style);

template <typename Real>
glyph::GlyphImage generate_glyph(const Model<Real>& model, const glyph::GlyphImage& content_source,
                                 std::span<const glyph::GlyphImage* const> refs);

// Per-slot argmax of the classifier on real glyphs.
template <typename Real>
std::vector<std::vector<int>> predict_components(const Model<Real>& model,
                                                 std::span<const glyph::GlyphImage* const> glyphs);

template <typename Real>
void save_model(const std::filesystem::path& path, const Model<Real>& model,
                const nlohmann::json& meta = nlohmann::json::object());
template <typename Real>
Model<Real> load_model(const std::filesystem::path& path, nlohmann::json* meta = nullptr);

}  // namespace lfg::net
