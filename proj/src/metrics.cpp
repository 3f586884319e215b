// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfg/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdio>
#include <sstream>

#include "lfg/error.hpp"
#include "lfg/kernels.hpp"

namespace lfg::metrics {

namespace {

constexpr double kAlpha = 0.2;
constexpr double kPsdTolerance = 1e-8;

void leaky_relu_inplace(std::vector<double>& v) {
  for (double& x : v) x = x > 0 ? x : kAlpha * x;
}

Eigen::MatrixXd to_matrix(const GaussianStats& s) {
  Eigen::MatrixXd m(s.dim, s.dim);
  for (int i = 0; i < s.dim; ++i)
    for (int j = 0; j < s.dim; ++j) m(i, j) = s.cov(i, j);
  return m;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* which) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::kDomain, std::string("fid: eigendecomposition failed for ") + which);
  Eigen::VectorXd lambda = eig.eigenvalues();
  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  if (lambda.minCoeff() < -kPsdTolerance * scale) {
    throw Error(ErrorCode::kDomain, std::string("fid: covariance ") + which + " is not positive semidefinite (eigenvalue " +
                                        std::to_string(lambda.minCoeff()) + ")");
  }
  lambda = lambda.cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

}  // namespace

FeatureExtractor::FeatureExtractor(int height, int width, std::uint64_t seed)
    : height_(height), width_(width), seed_(seed) {
  if (height < 4 || width < 4) {
    throw Error(ErrorCode::kInvalidArgument, "feature extractor needs at least a 4x4 input");
  }
  layers_ = {{1, 8, 3, 1}, {8, 16, 3, 2}, {16, 32, 3, 2}};
  head_ = {32, kEmbeddingDim, 1, 1};
  SeededRng rng(seed);
  auto draw = [&rng](const ExtractorLayer& l) {
    const double fan_in = static_cast<double>(l.in_ch) * l.kernel * l.kernel;
    const double sd = std::sqrt(2.0 / fan_in);
    std::vector<double> w(static_cast<std::size_t>(l.out_ch) * l.in_ch * l.kernel * l.kernel);
    for (double& v : w) v = sd * rng.normal();
    return w;
  };
  for (const auto& l : layers_) weights_.push_back(draw(l));
  head_weights_ = draw(head_);
}

std::array<int, 3> FeatureExtractor::layer_dims(std::size_t l) const {
  int h = height_, w = width_;
  for (std::size_t i = 0; i <= l; ++i) {
    const auto& L = layers_.at(i);
    h = (h + 2 * (L.kernel / 2) - L.kernel) / L.stride + 1;
    w = (w + 2 * (L.kernel / 2) - L.kernel) / L.stride + 1;
  }
  return {layers_.at(l).out_ch, h, w};
}

FeatureExtractor::Features FeatureExtractor::extract(const std::vector<float>& pixels) const {
  if (pixels.size() != static_cast<std::size_t>(height_) * width_) {
    throw Error(ErrorCode::kShapeMismatch, "extract_features: image has " + std::to_string(pixels.size()) +
                                               " pixels, extractor expects " + std::to_string(height_) + "x" +
                                               std::to_string(width_));
  }
  Features out;
  std::vector<double> x(pixels.begin(), pixels.end());
  int h = height_, w = width_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& L = layers_[i];
    kernels::Conv2dGeom g{1, L.in_ch, h, w, L.out_ch, L.kernel, L.stride, L.kernel / 2};
    std::vector<double> y(static_cast<std::size_t>(L.out_ch * g.out_h() * g.out_w()));
    kernels::conv2d_forward(g, x.data(), weights_[i].data(), y.data());
    leaky_relu_inplace(y);
    h = static_cast<int>(g.out_h());
    w = static_cast<int>(g.out_w());
    out.layers.emplace_back(Shape{L.out_ch, h, w}, y);
    x = std::move(y);
  }
  kernels::Conv2dGeom g{1, head_.in_ch, h, w, head_.out_ch, 1, 1, 0};
  std::vector<double> y(static_cast<std::size_t>(head_.out_ch) * h * w);
  kernels::conv2d_forward(g, x.data(), head_weights_.data(), y.data());
  leaky_relu_inplace(y);
  out.embedding.assign(kEmbeddingDim, 0.0);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < kEmbeddingDim; ++c) {
    double acc = 0;
    for (std::size_t p = 0; p < plane; ++p) acc += y[c * plane + p];
    out.embedding[static_cast<std::size_t>(c)] = acc / static_cast<double>(plane);
  }
  return out;
}

FeatureExtractor::Features FeatureExtractor::extract(const glyph::GlyphImage& image) const {
  if (image.height != height_ || image.width != width_) {
    throw Error(ErrorCode::kShapeMismatch, "extract_features: glyph " + image.content.key() + " is " +
                                               std::to_string(image.width) + "x" + std::to_string(image.height) +
                                               ", extractor expects " + std::to_string(width_) + "x" +
                                               std::to_string(height_));
  }
  return extract(image.pixels);
}

std::vector<FeatureExtractor::Features> extract_features(const FeatureExtractor& extractor,
                                                         const std::vector<const glyph::GlyphImage*>& images) {
  std::vector<FeatureExtractor::Features> out(images.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < images.size(); ++i) out[i] = extractor.extract(*images[i]);
  return out;
}

GaussianStats gaussian_stats(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "gaussian_stats: need at least 2 samples, got " + std::to_string(rows.size()));
  }
  GaussianStats s;
  s.dim = static_cast<int>(rows[0].size());
  s.count = static_cast<std::int64_t>(rows.size());
  for (const auto& r : rows) {
    if (r.size() != rows[0].size()) throw Error(ErrorCode::kShapeMismatch, "gaussian_stats: ragged embeddings");
  }
  Eigen::MatrixXd x(rows.size(), s.dim);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < s.dim; ++j) x(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mu;
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(rows.size() - 1);
  cov = (0.5 * (cov + cov.transpose())).eval();
  s.mean.assign(mu.data(), mu.data() + s.dim);
  s.covariance.resize(static_cast<std::size_t>(s.dim) * s.dim);
  for (int i = 0; i < s.dim; ++i)
    for (int j = 0; j < s.dim; ++j) s.covariance[static_cast<std::size_t>(i) * s.dim + j] = cov(i, j);
  return s;
}

double fid(const GaussianStats& a, const GaussianStats& b, FidForm form) {
  if (a.dim != b.dim || a.dim < 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "fid: dimension " + std::to_string(a.dim) + " vs " + std::to_string(b.dim));
  }
  double mean_term = 0;
  for (int i = 0; i < a.dim; ++i) {
    const double d = a.mean[static_cast<std::size_t>(i)] - b.mean[static_cast<std::size_t>(i)];
    mean_term += d * d;
  }
  const Eigen::MatrixXd sa = to_matrix(a), sb = to_matrix(b);
  const Eigen::MatrixXd ra = psd_sqrt(sa, "a");
  psd_sqrt(sb, "b");
  Eigen::MatrixXd inner = ra * sb * ra;
  inner = (0.5 * (inner + inner.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inner, Eigen::EigenvaluesOnly);
  double tr_sqrt = 0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) tr_sqrt += std::sqrt(std::max(0.0, eig.eigenvalues()(i)));
  const double factor = form == FidForm::kStandard ? 2.0 : 1.0;
  const double value = mean_term + sa.trace() + sb.trace() - factor * tr_sqrt;
  return std::max(0.0, value);
}

double lpips_from_features(const std::vector<Tensor<double>>& x, const std::vector<Tensor<double>>& y, bool normalize) {
  if (x.size() != y.size()) throw Error(ErrorCode::kShapeMismatch, "lpips: layer counts differ");
  double total = 0;
  for (std::size_t l = 0; l < x.size(); ++l) {
    if (x[l].shape() != y[l].shape() || x[l].rank() != 3) {
      throw Error(ErrorCode::kShapeMismatch,
                  "lpips: layer " + std::to_string(l + 1) + " shapes " + shape_str(x[l].shape()) + " and " +
                      shape_str(y[l].shape()));
    }
    const std::int64_t c = x[l].dim(0), plane = x[l].dim(1) * x[l].dim(2);
    double layer = 0;
    for (std::int64_t p = 0; p < plane; ++p) {
      double nx = 1, ny = 1;
      if (normalize) {
        nx = ny = 0;
        for (std::int64_t k = 0; k < c; ++k) {
          nx += x[l][k * plane + p] * x[l][k * plane + p];
          ny += y[l][k * plane + p] * y[l][k * plane + p];
        }
        nx = std::sqrt(nx) + 1e-10;
        ny = std::sqrt(ny) + 1e-10;
      }
      for (std::int64_t k = 0; k < c; ++k) {
        const double d = x[l][k * plane + p] / nx - y[l][k * plane + p] / ny;
        layer += d * d;
      }
    }
    total += layer / static_cast<double>(plane);
  }
  return total;
}

double lpips(const glyph::GlyphImage& x, const glyph::GlyphImage& y, const FeatureExtractor& extractor, bool normalize) {
  if (x.height != y.height || x.width != y.width) {
    throw Error(ErrorCode::kShapeMismatch, "lpips: image sizes differ");
  }
  return lpips_from_features(extractor.extract(x).layers, extractor.extract(y).layers, normalize);
}

double lpips_mean(const glyph::FontStyle& x, const glyph::FontStyle& y, const FeatureExtractor& extractor,
                  bool normalize) {
  if (x.contents() != y.contents()) throw Error(ErrorCode::kInvalidArgument, "lpips: glyph sets cover different contents");
  if (x.empty()) throw Error(ErrorCode::kInvalidArgument, "lpips: empty glyph sets");
  const auto contents = x.contents();
  std::vector<double> values(contents.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < contents.size(); ++i) {
    values[i] = lpips(x.at(contents[i]), y.at(contents[i]), extractor, normalize);
  }
  double sum = 0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

SeriesSummary summarize_series(const std::vector<double>& series) {
  SeriesSummary s;
  for (std::size_t i = 1; i < series.size(); ++i) {
    ++s.deltas;
    if (series[i] >= series[i - 1]) {
      ++s.nondecreasing_deltas;
    } else {
      s.monotone = false;
    }
  }
  if (series.size() >= 2 && series.front() != 0.0) {
    s.relative_increase_pct = (series.back() - series.front()) / series.front() * 100.0;
  }
  return s;
}

DriftReport drift_report_from_rows(std::vector<DriftRow> rows) {
  DriftReport r;
  r.rows = std::move(rows);
  std::vector<double> f{0.0}, l{0.0};
  for (const auto& row : r.rows) {
    f.push_back(row.fid);
    l.push_back(row.lpips);
  }
  r.fid_summary = summarize_series(f);
  r.lpips_summary = summarize_series(l);
  r.fid_increase_pct = summarize_series({f.begin() + 1, f.end()}).relative_increase_pct;
  r.lpips_increase_pct = summarize_series({l.begin() + 1, l.end()}).relative_increase_pct;
  return r;
}

DriftReport drift_report(const glyph::FontStyle& original, const std::vector<glyph::FontStyle>& generations,
                         const FeatureExtractor& extractor) {
  const auto contents = original.contents();
  auto embed = [&](const glyph::FontStyle& s) {
    std::vector<const glyph::GlyphImage*> ptrs;
    for (const auto& c : contents) ptrs.push_back(&s.at(c));
    std::vector<std::vector<double>> rows;
    for (auto& f : extract_features(extractor, ptrs)) rows.push_back(std::move(f.embedding));
    return gaussian_stats(rows);
  };
  const GaussianStats base = embed(original);
  std::vector<DriftRow> rows;
  for (std::size_t i = 0; i < generations.size(); ++i) {
    if (generations[i].contents() != contents) {
      throw Error(ErrorCode::kInvalidArgument,
                  "drift_report: generation " + std::to_string(i + 1) + " does not cover the original's contents");
    }
    rows.push_back({static_cast<int>(i + 1), fid(base, embed(generations[i])),
                    lpips_mean(original, generations[i], extractor)});
  }
  return drift_report_from_rows(std::move(rows));
}

nlohmann::json DriftReport::to_json() const {
  nlohmann::json j;
  j["extractor"] = "frozen seed-fixed conv net; values comparable only within this project";
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) j["rows"].push_back({{"gen", r.generation}, {"fid", r.fid}, {"lpips", r.lpips}});
  auto summary = [](const SeriesSummary& s) {
    return nlohmann::json{{"monotone", s.monotone},
                          {"nondecreasing_deltas", s.nondecreasing_deltas},
                          {"deltas", s.deltas}};
  };
  j["fid"] = summary(fid_summary);
  j["fid"]["increase_pct"] = fid_increase_pct;
  j["lpips"] = summary(lpips_summary);
  j["lpips"]["increase_pct"] = lpips_increase_pct;
  return j;
}

std::string DriftReport::to_table() const {
  std::ostringstream os;
  os << "# extractor: frozen seed-fixed conv net (not Inception/VGG); compare trends only\n";
  os << "Generation      FID      LPIPS\n";
  os << "Original  " << fmt("%9.3f", 0.0) << fmt("  %9.4f", 0.0) << "\n";
  for (const auto& r : rows) {
    std::string label = "N=" + std::to_string(r.generation);
    label.resize(10, ' ');
    os << label << fmt("%9.3f", r.fid) << fmt("  %9.4f", r.lpips) << "\n";
  }
  os << "monotone: fid=" << (fid_summary.monotone ? "yes" : "no") << " lpips=" << (lpips_summary.monotone ? "yes" : "no")
     << "; non-decreasing deltas: fid " << fid_summary.nondecreasing_deltas << "/" << fid_summary.deltas << ", lpips "
     << lpips_summary.nondecreasing_deltas << "/" << lpips_summary.deltas << "\n";
  os << "increase last vs first generation: fid " << fmt("%.1f%%", fid_increase_pct) << ", lpips "
     << fmt("%.1f%%", lpips_increase_pct) << "\n";
  return os.str();
}

double sus_score(const SusResponse& r) {
  int sum = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] < 1 || r[i] > 5) {
      const std::string field = "U" + std::to_string(i + 1);
      throw Error(ErrorCode::kInvalidArgument, "SUS item " + field + " = " + std::to_string(r[i]) + " outside 1..5", field);
    }
    sum += i % 2 == 0 ? r[i] - 1 : 5 - r[i];
  }
  return 2.5 * sum;
}

SusResult sus_score(const std::vector<SusResponse>& responses) {
  SusResult out;
  for (const auto& r : responses) out.scores.push_back(sus_score(r));
  if (!out.scores.empty()) {
    double s = 0;
    for (double v : out.scores) s += v;
    out.mean = s / static_cast<double>(out.scores.size());
  }
  return out;
}

std::vector<SusResponse> parse_sus_csv(const std::string& text) {
  std::vector<SusResponse> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t,") == std::string::npos) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    auto is_int = [](const std::string& s) {
      const auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
      if (b == std::string::npos) return false;
      for (auto i = b; i <= e; ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i])) && !(i == b && s[i] == '-')) return false;
      return true;
    };
    const bool numeric = std::all_of(cells.begin(), cells.end(), is_int);
    if (!numeric && out.empty() && line_no == 1) continue;
    if (!numeric || cells.size() != 10) {
      throw Error(ErrorCode::kInvalidArgument,
                  "SUS CSV line " + std::to_string(line_no) + ": expected 10 integer columns", "line " + std::to_string(line_no));
    }
    SusResponse r{};
    for (std::size_t i = 0; i < 10; ++i) r[i] = std::stoi(cells[i]);
    sus_score(r);
    out.push_back(r);
  }
  return out;
}

std::vector<GradeBand> default_grade_bands() {
  return {{"A", 80.3}, {"B", 74.0}, {"C", 68.0}, {"D", 51.0}, {"F", 0.0}};
}

std::string sus_grade(double score, const std::vector<GradeBand>& bands) {
  if (!(score >= 0.0 && score <= 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "SUS score " + std::to_string(score) + " outside [0, 100]", "score");
  }
  if (bands.empty() || bands.back().lower > 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "grade bands must end with a band starting at 0", "bands");
  }
  for (std::size_t i = 1; i < bands.size(); ++i) {
    if (bands[i].lower >= bands[i - 1].lower) {
      throw Error(ErrorCode::kInvalidArgument, "grade bands must have descending lower bounds", "bands");
    }
  }
  for (const auto& b : bands) {
    if (score >= b.lower) return b.label;
  }
  return bands.back().label;
}

}  // namespace lfg::metrics
