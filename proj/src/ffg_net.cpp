// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfg/ffg_net.hpp"

#include <cmath>
#include <string>

#include "lfg/checkpoint.hpp"
#include "lfg/error.hpp"

namespace lfg::net {

namespace {

[[noreturn]] void arch_error(const std::string& field, const std::string& message) {
  throw Error(ErrorCode::kInvalidArgument, "arch." + field + ": " + message, field);
}

void require_positive(const std::vector<int>& widths, const std::string& field) {
  if (widths.empty()) arch_error(field, "must list at least one stage");
  for (int w : widths) {
    if (w < 1) arch_error(field, "widths must be >= 1");
  }
}

std::string layer(const std::string& block, std::size_t i) { return block + ".conv" + std::to_string(i + 1); }

template <typename Real>
Tensor<Real> fan_in_uniform(Shape shape, std::int64_t fan_in, double alpha, SeededRng& rng) {
  Tensor<Real> t(std::move(shape));
  const double bound = std::sqrt(6.0 / ((1.0 + alpha * alpha) * static_cast<double>(fan_in)));
  for (auto& v : t.values()) v = static_cast<Real>(rng.uniform(-bound, bound));
  return t;
}

template <typename Real>
void add_conv(ParamSet<Real>& set, const std::string& name, int in_ch, int out_ch, int kernel, double alpha,
              SeededRng& rng) {
  set.add(name + ".w", fan_in_uniform<Real>({out_ch, in_ch, kernel, kernel},
                                            static_cast<std::int64_t>(in_ch) * kernel * kernel, alpha, rng));
  set.add(name + ".b", Tensor<Real>(Shape{out_ch}));
}

template <typename Real>
Var<Real> conv_block(const ParamSet<Real>& set, const std::string& name, const Var<Real>& x, std::int64_t stride,
                     std::int64_t pad) {
  return ops::add_channel_bias(ops::conv2d(x, set.at(name + ".w"), stride, pad), set.at(name + ".b"));
}

template <typename Real>
Var<Real> linear(const ParamSet<Real>& set, const std::string& name, const Var<Real>& x) {
  return ops::add_channel_bias(ops::matmul(x, set.at(name + ".w")), set.at(name + ".b"));
}

template <typename Real>
Var<Real> strided_trunk(const ParamSet<Real>& set, const std::string& block, const std::vector<int>& widths,
                        const ArchConfig& arch, Var<Real> x, std::vector<Var<Real>>* features = nullptr) {
  for (std::size_t i = 0; i < widths.size(); ++i) {
    x = ops::leaky_relu(conv_block(set, layer(block, i), x, 2, arch.kernel / 2), arch.alpha);
    if (features) features->push_back(x);
  }
  return x;
}

void check_images(const ArchConfig& arch, const Shape& s, const char* what) {
  if (s.size() != 4 || s[1] != 1 || s[2] != arch.height || s[3] != arch.width) {
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + ": expected [N,1," + std::to_string(arch.height) +
                                               "," + std::to_string(arch.width) + "], got " + shape_str(s));
  }
}

template <typename Real>
Var<Real> pick(const Var<Real>& logits, std::span<const std::int64_t> labels, std::int64_t classes,
               const char* what) {
  const std::int64_t n = logits.dim(0);
  if (static_cast<std::int64_t>(labels.size()) != n) {
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + ": " + std::to_string(labels.size()) +
                                               " labels for a batch of " + std::to_string(n));
  }
  Tensor<Real> onehot({n, classes});
  for (std::int64_t r = 0; r < n; ++r) {
    if (labels[r] < 0 || labels[r] >= classes) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(what) + " " + std::to_string(labels[r]) + " outside [0, " + std::to_string(classes) + ")",
                  what);
    }
    onehot[r * classes + labels[r]] = Real(1);
  }
  return ops::row_sum(ops::mul(logits, Var<Real>::constant(std::move(onehot))));
}

}  // namespace

void ArchConfig::validate() const {
  if (height < 8 || width < 8) arch_error("height", "canvas must be at least 8x8");
  if (kernel < 1 || kernel % 2 == 0) arch_error("kernel", "must be odd and >= 1");
  require_positive(enc_widths, "enc_widths");
  require_positive(dec_widths, "dec_widths");
  require_positive(disc_widths, "disc_widths");
  const int stages = static_cast<int>(enc_widths.size());
  if (height % (1 << stages) != 0 || width % (1 << stages) != 0) {
    arch_error("enc_widths", std::to_string(stages) + " stride-2 stages do not divide the " +
                                 std::to_string(height) + "x" + std::to_string(width) + " canvas evenly");
  }
  if (static_cast<int>(dec_widths.size()) + 1 != stages) {
    arch_error("dec_widths", "needs " + std::to_string(stages - 1) + " entries to mirror the encoder");
  }
  if (height % (1 << disc_widths.size()) != 0 || width % (1 << disc_widths.size()) != 0) {
    arch_error("disc_widths", "stride-2 stages do not divide the canvas evenly");
  }
  if (cls_hidden < 1) arch_error("cls_hidden", "must be >= 1");
  if (slot_cardinalities.empty()) arch_error("slot_cardinalities", "must list at least one slot");
  for (int c : slot_cardinalities) {
    if (c < 1) arch_error("slot_cardinalities", "cardinalities must be >= 1");
  }
  if (style_classes < 1) arch_error("style_classes", "must be >= 1");
  if (content_classes < 1) arch_error("content_classes", "must be >= 1");
  if (!(alpha >= 0.0 && alpha < 1.0)) arch_error("alpha", "must lie in [0, 1)");
  if (refs < 1) arch_error("refs", "must be >= 1");
}

nlohmann::json ArchConfig::to_json() const {
  return {{"height", height},
          {"width", width},
          {"kernel", kernel},
          {"enc_widths", enc_widths},
          {"dec_widths", dec_widths},
          {"disc_widths", disc_widths},
          {"cls_hidden", cls_hidden},
          {"slot_cardinalities", slot_cardinalities},
          {"style_classes", style_classes},
          {"content_classes", content_classes},
          {"alpha", alpha},
          {"refs", refs}};
}

ArchConfig ArchConfig::from_json(const nlohmann::json& j) {
  ArchConfig a;
  try {
    a.height = j.value("height", a.height);
    a.width = j.value("width", a.width);
    a.kernel = j.value("kernel", a.kernel);
    a.enc_widths = j.value("enc_widths", a.enc_widths);
    a.dec_widths = j.value("dec_widths", a.dec_widths);
    a.disc_widths = j.value("disc_widths", a.disc_widths);
    a.cls_hidden = j.value("cls_hidden", a.cls_hidden);
    a.slot_cardinalities = j.value("slot_cardinalities", a.slot_cardinalities);
    a.style_classes = j.value("style_classes", a.style_classes);
    a.content_classes = j.value("content_classes", a.content_classes);
    a.alpha = j.value("alpha", a.alpha);
    a.refs = j.value("refs", a.refs);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("arch: ") + e.what(), "arch");
  }
  a.validate();
  return a;
}

ArchConfig ArchConfig::for_script(const glyph::ScriptSpec& spec) {
  ArchConfig a;
  a.height = spec.height;
  a.width = spec.width;
  a.slot_cardinalities.clear();
  for (const auto& s : spec.slots) a.slot_cardinalities.push_back(s.cardinality);
  a.content_classes = static_cast<int>(spec.content_count());
  return a;
}

template <typename Real>
Model<Real> init_model(const ArchConfig& arch, std::uint64_t seed) {
  arch.validate();
  Model<Real> m;
  m.arch = arch;
  SeededRng root(seed);
  const int k = arch.kernel;
  const double a = arch.alpha;

  std::uint64_t stream = 0;
  for (const char* block : {"enc_c", "enc_s"}) {
    SeededRng rng = root.fork(++stream);
    int in = 1;
    for (std::size_t i = 0; i < arch.enc_widths.size(); ++i) {
      add_conv(m.g, layer(block, i), in, arch.enc_widths[i], k, a, rng);
      in = arch.enc_widths[i];
    }
  }
  {
    SeededRng rng = root.fork(3);
    int in = 2 * arch.enc_widths.back();
    for (std::size_t i = 0; i < arch.dec_widths.size(); ++i) {
      add_conv(m.g, layer("dec", i), in, arch.dec_widths[i], k, a, rng);
      in = arch.dec_widths[i];
    }
    add_conv(m.g, layer("dec", arch.dec_widths.size()), in, 1, k, 0.0, rng);
  }
  {
    SeededRng rng = root.fork(4);
    int in = 1;
    for (std::size_t i = 0; i < arch.disc_widths.size(); ++i) {
      add_conv(m.d, layer("disc", i), in, arch.disc_widths[i], k, a, rng);
      in = arch.disc_widths[i];
    }
    m.d.add("disc.style.w", Tensor<Real>(Shape{in, arch.style_classes}));
    m.d.add("disc.style.b", Tensor<Real>(Shape{arch.style_classes}));
    m.d.add("disc.content.w", Tensor<Real>(Shape{in, arch.content_classes}));
    m.d.add("disc.content.b", Tensor<Real>(Shape{arch.content_classes}));
  }
  {
    SeededRng rng = root.fork(5);
    const auto features = arch.content_numel();
    for (std::size_t s = 0; s < arch.slot_cardinalities.size(); ++s) {
      const std::string p = "cls.slot" + std::to_string(s);
      m.cls.add(p + ".fc1.w", fan_in_uniform<Real>({features, arch.cls_hidden}, features, a, rng));
      m.cls.add(p + ".fc1.b", Tensor<Real>(Shape{arch.cls_hidden}));
      m.cls.add(p + ".fc2.w", fan_in_uniform<Real>({arch.cls_hidden, arch.slot_cardinalities[s]},
                                                   arch.cls_hidden, 0.0, rng));
      m.cls.add(p + ".fc2.b", Tensor<Real>(Shape{arch.slot_cardinalities[s]}));
    }
  }
  return m;
}

template <typename Real>
Model<Real> clone_model(const Model<Real>& model) {
  return {model.arch, model.g.clone(), model.d.clone(), model.cls.clone()};
}

template <typename Real>
Var<Real> encode_content(const Model<Real>& model, const Var<Real>& x) {
  check_images(model.arch, x.shape(), "encode_content");
  return strided_trunk(model.g, "enc_c", model.arch.enc_widths, model.arch, x);
}

template <typename Real>
Var<Real> style_trunk(const Model<Real>& model, const Var<Real>& x) {
  check_images(model.arch, x.shape(), "encode_style");
  return strided_trunk(model.g, "enc_s", model.arch.enc_widths, model.arch, x);
}

template <typename Real>
Var<Real> encode_style(const Model<Real>& model, const Var<Real>& refs, std::int64_t k) {
  if (k < 1 || refs.shape().empty() || refs.dim(0) < k || refs.dim(0) % k != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "encode_style: " + shape_str(refs.shape()) + " is not a whole number of " + std::to_string(k) +
                    "-reference groups");
  }
  return ops::group_mean(ops::mean_spatial(style_trunk(model, refs)), k);
}

template <typename Real>
Var<Real> decode(const Model<Real>& model, const Var<Real>& f_s, const Var<Real>& f_c) {
  const auto& arch = model.arch;
  if (f_c.shape().size() != 4 || f_c.shape() != arch.content_shape(f_c.dim(0))) {
    throw Error(ErrorCode::kShapeMismatch, "decode: content feature " + shape_str(f_c.shape()) + ", expected " +
                                               shape_str(arch.content_shape(f_c.shape().empty() ? 0 : f_c.dim(0))));
  }
  if (f_s.shape() != Shape{f_c.dim(0), arch.style_dim()}) {
    throw Error(ErrorCode::kShapeMismatch, "decode: style feature " + shape_str(f_s.shape()) + ", expected " +
                                               shape_str({f_c.dim(0), arch.style_dim()}));
  }
  Var<Real> h = ops::concat(ops::broadcast_spatial(f_s, f_c.dim(2), f_c.dim(3)), f_c, 1);
  const std::size_t stages = arch.dec_widths.size();
  for (std::size_t i = 0; i <= stages; ++i) {
    h = conv_block(model.g, layer("dec", i), ops::upsample2x(h), 1, arch.kernel / 2);
    h = i < stages ? ops::leaky_relu(h, arch.alpha) : ops::sigmoid(h);
  }
  return h;
}

template <typename Real>
Var<Real> generate(const Model<Real>& model, const Var<Real>& content_source, const Var<Real>& refs,
                   std::int64_t k) {
  const Var<Real> f_c = encode_content(model, content_source);
  if (refs.shape().empty() || refs.dim(0) != content_source.dim(0) * k) {
    throw Error(ErrorCode::kShapeMismatch, "generate: " + std::to_string(content_source.dim(0)) + " sources need " +
                                               std::to_string(content_source.dim(0) * k) + " references, got " +
                                               shape_str(refs.shape()));
  }
  const Var<Real> f_s = encode_style(model, refs, k);
  return decode(model, f_s, f_c);
}

template <typename Real>
DiscOutput<Real> discriminate(const Model<Real>& model, const Var<Real>& x,
                              std::span<const std::int64_t> style_labels,
                              std::span<const std::int64_t> content_labels) {
  const auto& arch = model.arch;
  check_images(arch, x.shape(), "discriminate");
  DiscOutput<Real> out;
  const Var<Real> h = strided_trunk(model.d, "disc", arch.disc_widths, arch, x, &out.features);
  const Var<Real> pooled = ops::mean_spatial(h);
  out.style_logit = pick(linear(model.d, "disc.style", pooled), style_labels, arch.style_classes, "style_label");
  out.content_logit =
      pick(linear(model.d, "disc.content", pooled), content_labels, arch.content_classes, "content_label");
  out.prob = ops::mul(ops::sigmoid(out.style_logit), ops::sigmoid(out.content_logit));
  return out;
}

template <typename Real>
std::vector<Var<Real>> classify_components(const Model<Real>& model, const Var<Real>& trunk_features) {
  const auto& arch = model.arch;
  if (trunk_features.shape().size() != 4 || trunk_features.shape() != arch.content_shape(trunk_features.dim(0))) {
    throw Error(ErrorCode::kShapeMismatch, "classify_components: features " + shape_str(trunk_features.shape()) +
                                               " do not match the style trunk output");
  }
  const Var<Real> flat = ops::reshape(trunk_features, {trunk_features.dim(0), arch.content_numel()});
  std::vector<Var<Real>> logits;
  for (std::size_t s = 0; s < arch.slot_cardinalities.size(); ++s) {
    const std::string p = "cls.slot" + std::to_string(s);
    logits.push_back(linear(model.cls, p + ".fc2", ops::leaky_relu(linear(model.cls, p + ".fc1", flat), arch.alpha)));
  }
  return logits;
}

template <typename Real>
Tensor<Real> stack_glyphs(std::span<const glyph::GlyphImage* const> glyphs, const ArchConfig& arch) {
  const auto n = static_cast<std::int64_t>(glyphs.size());
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "stack_glyphs: no glyphs");
  Tensor<Real> t({n, 1, arch.height, arch.width});
  const std::int64_t plane = static_cast<std::int64_t>(arch.height) * arch.width;
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& g = *glyphs[static_cast<std::size_t>(i)];
    if (g.height != arch.height || g.width != arch.width) {
      throw Error(ErrorCode::kShapeMismatch, "glyph " + g.content.key() + " is " + std::to_string(g.width) + "x" +
                                                 std::to_string(g.height) + ", model canvas is " +
                                                 std::to_string(arch.width) + "x" + std::to_string(arch.height));
    }
    for (std::int64_t p = 0; p < plane; ++p) t[i * plane + p] = static_cast<Real>(g.pixels[static_cast<std::size_t>(p)]);
  }
  return t;
}

template <typename Real>
glyph::GlyphImage to_glyph(const Tensor<Real>& batch, std::int64_t row, const glyph::ContentId& content,
                           const std::string& style) {
  glyph::GlyphImage g;
  g.height = static_cast<int>(batch.dim(2));
  g.width = static_cast<int>(batch.dim(3));
  g.content = content;
  g.style = style;
  const std::int64_t plane = batch.dim(2) * batch.dim(3);
  g.pixels.resize(static_cast<std::size_t>(plane));
  for (std::int64_t p = 0; p < plane; ++p) g.pixels[static_cast<std::size_t>(p)] = static_cast<float>(batch[row * plane + p]);
  return g;
}

template <typename Real>
glyph::GlyphImage generate_glyph(const Model<Real>& model, const glyph::GlyphImage& content_source,
                                 std::span<const glyph::GlyphImage* const> refs) {
  if (refs.empty()) throw Error(ErrorCode::kInvalidArgument, "generate: no style references");
  for (const auto* r : refs) {
    if (r->style != refs[0]->style) throw Error(ErrorCode::kInvalidArgument, "generate: references mix styles");
  }
  const glyph::GlyphImage* src[] = {&content_source};
  const auto x = Var<Real>::constant(stack_glyphs<Real>(src, model.arch));
  const auto r = Var<Real>::constant(stack_glyphs<Real>(refs, model.arch));
  const auto y = generate(model, x, r, static_cast<std::int64_t>(refs.size()));
  return to_glyph(y.value(), 0, content_source.content, refs[0]->style);
}

template <typename Real>
std::vector<std::vector<int>> predict_components(const Model<Real>& model,
                                                 std::span<const glyph::GlyphImage* const> glyphs) {
  const auto x = Var<Real>::constant(stack_glyphs<Real>(glyphs, model.arch));
  const auto logits = classify_components(model, style_trunk(model, x));
  std::vector<std::vector<int>> out(glyphs.size(), std::vector<int>(logits.size()));
  for (std::size_t s = 0; s < logits.size(); ++s) {
    const std::int64_t k = logits[s].dim(1);
    for (std::size_t i = 0; i < glyphs.size(); ++i) {
      const Real* row = logits[s].value().data() + static_cast<std::int64_t>(i) * k;
      out[i][s] = static_cast<int>(std::max_element(row, row + k) - row);
    }
  }
  return out;
}

template <typename Real>
void save_model(const std::filesystem::path& path, const Model<Real>& model, const nlohmann::json& meta) {
  std::vector<NamedTensor<Real>> tensors;
  append_params(tensors, model.g, "");
  append_params(tensors, model.d, "");
  append_params(tensors, model.cls, "");
  nlohmann::json m = meta;
  m["arch"] = model.arch.to_json();
  save_checkpoint(path, tensors, m);
}

template <typename Real>
Model<Real> load_model(const std::filesystem::path& path, nlohmann::json* meta) {
  nlohmann::json m;
  const auto tensors = load_checkpoint<Real>(path, &m);
  if (!m.contains("arch")) throw Error(ErrorCode::kCorrupt, "checkpoint has no arch record: " + path.string());
  Model<Real> model = init_model<Real>(ArchConfig::from_json(m["arch"]), 0);
  restore_params(model.g, tensors, "");
  restore_params(model.d, tensors, "");
  restore_params(model.cls, tensors, "");
  if (meta) *meta = std::move(m);
  return model;
}

#define LFG_INSTANTIATE(R)                                                                                    \
  template Model<R> init_model<R>(const ArchConfig&, std::uint64_t);                                        \
  template Model<R> clone_model<R>(const Model<R>&);                                                        \
  template Var<R> encode_content<R>(const Model<R>&, const Var<R>&);                                        \
  template Var<R> style_trunk<R>(const Model<R>&, const Var<R>&);                                           \
  template Var<R> encode_style<R>(const Model<R>&, const Var<R>&, std::int64_t);                            \
  template Var<R> decode<R>(const Model<R>&, const Var<R>&, const Var<R>&);                                 \
  template Var<R> generate<R>(const Model<R>&, const Var<R>&, const Var<R>&, std::int64_t);                 \
  template DiscOutput<R> discriminate<R>(const Model<R>&, const Var<R>&, std::span<const std::int64_t>,     \
                                         std::span<const std::int64_t>);                                     \
  template std::vector<Var<R>> classify_components<R>(const Model<R>&, const Var<R>&);                      \
  template Tensor<R> stack_glyphs<R>(std::span<const glyph::GlyphImage* const>, const ArchConfig&);         \
  template glyph::GlyphImage to_glyph<R>(const Tensor<R>&, std::int64_t, const glyph::ContentId&,           \
                                         const std::string&);                                               \
  template glyph::GlyphImage generate_glyph<R>(const Model<R>&, const glyph::GlyphImage&,                  \
                                               std::span<const glyph::GlyphImage* const>);                  \
  template std::vector<std::vector<int>> predict_components<R>(const Model<R>&,                             \
                                                               std::span<const glyph::GlyphImage* const>);  \
  template void save_model<R>(const std::filesystem::path&, const Model<R>&, const nlohmann::json&);        \
  template Model<R> load_model<R>(const std::filesystem::path&, nlohmann::json*);

LFG_INSTANTIATE(float)
LFG_INSTANTIATE(double)

}  // namespace lfg::net
