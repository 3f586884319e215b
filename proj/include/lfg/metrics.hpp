// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0
//
// Drift measurement and usability scoring.
//
// One frozen, seed-fixed convolutional extractor serves both FID (pooled
// 64-dim embedding) and LPIPS (per-layer maps). It is a stand-in for the
// usual Inception/VGG backbones, so absolute values are only comparable
// within this project.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lfg/glyph.hpp"
#include "lfg/tensor.hpp"

namespace lfg::metrics {

struct ExtractorLayer {
  int in_ch = 1;
  int out_ch = 1;
  int kernel = 3;
  int stride = 1;
};

class FeatureExtractor {
 public:
  static constexpr int kEmbeddingDim = 64;
  static constexpr std::uint64_t kDefaultSeed = 0x5eed'f1d0;

  FeatureExtractor(int height, int width, std::uint64_t seed = kDefaultSeed);

  int height() const { return height_; }
  int width() const { return width_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t layer_count() const { return layers_.size(); }
  // Output extent of layer l (0-based) as {channels, H_l, W_l}.
  std::array<int, 3> layer_dims(std::size_t l) const;

  struct Features {
    std::vector<Tensor<double>> layers;  // [C_l, H_l, W_l] each
    std::vector<double> embedding;       // kEmbeddingDim
  };

  // pixels: height*width row-major intensities.
  Features extract(const std::vector<float>& pixels) const;
  Features extract(const glyph::GlyphImage& image) const;

 private:
  int height_;
  int width_;
  std::uint64_t seed_;
  std::vector<ExtractorLayer> layers_;
  std::vector<std::vector<double>> weights_;
  ExtractorLayer head_;
  std::vector<double> head_weights_;
};

std::vector<FeatureExtractor::Features> extract_features(const FeatureExtractor& extractor,
                                                         const std::vector<const glyph::GlyphImage*>& images);

struct GaussianStats {
  int dim = 0;
  std::int64_t count = 0;
  std::vector<double> mean;        // dim
  std::vector<double> covariance;  // dim*dim row-major

  double cov(int i, int j) const { return covariance[static_cast<std::size_t>(i) * dim + j]; }
};

// rows: one embedding per sample, all the same length.
GaussianStats gaussian_stats(const std::vector<std::vector<double>>& rows);

enum class FidForm { kStandard, kLiteral };

// ‖μa − μb‖² + Tr(Σa + Σb − 2 (Σa Σb)^{1/2}); kLiteral drops the 2.
double fid(const GaussianStats& a, const GaussianStats& b, FidForm form = FidForm::kStandard);

// Σ_l (1/(H_l W_l)) Σ_{h,w} ‖x^l_hw − y^l_hw‖² with unit layer weights.
// `normalize` rescales each channel vector to unit length first.
double lpips_from_features(const std::vector<Tensor<double>>& x, const std::vector<Tensor<double>>& y,
                           bool normalize = false);
double lpips(const glyph::GlyphImage& x, const glyph::GlyphImage& y, const FeatureExtractor& extractor,
             bool normalize = false);
// Mean over content-aligned pairs.
double lpips_mean(const glyph::FontStyle& x, const glyph::FontStyle& y, const FeatureExtractor& extractor,
                  bool normalize = false);

struct SeriesSummary {
  bool monotone = true;                 // non-decreasing throughout
  int nondecreasing_deltas = 0;
  int deltas = 0;
  double relative_increase_pct = 0.0;   // (last − first) / first · 100
};

SeriesSummary summarize_series(const std::vector<double>& series);

struct DriftRow {
  int generation = 0;
  double fid = 0.0;
  double lpips = 0.0;
};

struct DriftReport {
  std::vector<DriftRow> rows;
  SeriesSummary fid_summary;    // over [0, gen 1, ..., gen N]
  SeriesSummary lpips_summary;
  double fid_increase_pct = 0.0;    // gen N vs gen 1
  double lpips_increase_pct = 0.0;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

// Drift of each generation against `original` over the contents they share;
// every generation must cover exactly the original's contents.
DriftReport drift_report(const glyph::FontStyle& original, const std::vector<glyph::FontStyle>& generations,
                         const FeatureExtractor& extractor);
// Same, from already-computed per-generation values.
DriftReport drift_report_from_rows(std::vector<DriftRow> rows);

using SusResponse = std::array<int, 10>;

struct SusResult {
  std::vector<double> scores;
  double mean = 0.0;
};

double sus_score(const SusResponse& response);
SusResult sus_score(const std::vector<SusResponse>& responses);
// Rows of 10 integers; blank lines and a non-numeric header row are skipped.
std::vector<SusResponse> parse_sus_csv(const std::string& text);

struct GradeBand {
  std::string label;
  double lower = 0.0;  // inclusive
};

// Descending lower bounds; the last band must start at 0.
std::vector<GradeBand> default_grade_bands();
std::string sus_grade(double score, const std::vector<GradeBand>& bands = default_grade_bands());

}  // namespace lfg::metrics
