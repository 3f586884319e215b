// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <set>

#include "lfg/ffg_net.hpp"
#include "lfg/legacy.hpp"
#include "test_util.hpp"

using namespace lfg;
using D = Var<double>;

namespace {

// (in·k² + 1) · out weights and biases of one conv layer.
std::int64_t conv_params(std::int64_t in, std::int64_t out, std::int64_t k) { return (in * k * k + 1) * out; }

net::ArchConfig small_arch() {
  net::ArchConfig a;
  a.height = a.width = 16;
  a.enc_widths = {4, 8};
  a.dec_widths = {8};
  a.disc_widths = {4, 8};
  a.cls_hidden = 8;
  a.slot_cardinalities = {3, 2};
  a.content_classes = 6;
  a.refs = 3;
  return a;
}

bool same_params(const ParamSet<double>& a, const ParamSet<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].first != b[i].first || a[i].second.shape() != b[i].second.shape()) return false;
    const auto x = a[i].second.value().values(), y = b[i].second.value().values();
    if (std::memcmp(x.data(), y.data(), x.size_bytes()) != 0) return false;
  }
  return true;
}

double mean_l1(const glyph::FontStyle& a, const glyph::FontStyle& b) {
  double s = 0;
  std::int64_t n = 0;
  for (const auto& [c, g] : a) {
    const auto& h = b.at(c);
    for (std::size_t i = 0; i < g.pixels.size(); ++i, ++n) s += std::abs(g.pixels[i] - h.pixels[i]);
  }
  return s / static_cast<double>(n);
}

}  // namespace

TEST_CASE("parameter count follows the layer arithmetic") {
  const net::ArchConfig a = net::ArchConfig::for_script(glyph::ScriptSpec::desk_default());
  const auto m = net::init_model<double>(a, 1);
  // Two encoders 1→16→32→64, decoder 128→64→32→1, all 3×3.
  const std::int64_t enc = conv_params(1, 16, 3) + conv_params(16, 32, 3) + conv_params(32, 64, 3);
  const std::int64_t dec = conv_params(128, 64, 3) + conv_params(64, 32, 3) + conv_params(32, 1, 3);
  CHECK(m.g.total_numel() == 2 * enc + dec);
  CHECK(m.g.total_numel() == 139137);
  // Same trunk as one encoder plus style (1 class) and content (120 class) heads on 64 channels.
  CHECK(m.d.total_numel() == enc + (64 + 1) * 1 + (64 + 1) * 120);
  // Per slot: 1024 → 64 → cardinality.
  std::int64_t cls = 0;
  for (int c : {6, 5, 4}) cls += (1024 + 1) * 64 + (64 + 1) * c;
  CHECK(m.cls.total_numel() == cls);
}

TEST_CASE("parameter sets are disjoint and seeded") {
  const auto a = net::init_model<double>(small_arch(), 5);
  std::set<std::string> names;
  std::set<const void*> storage;
  for (const auto* set : {&a.g, &a.d, &a.cls}) {
    for (const auto& [name, v] : *set) {
      CHECK(names.insert(name).second);
      CHECK(storage.insert(v.node()).second);
    }
  }
  CHECK(same_params(a.g, net::init_model<double>(small_arch(), 5).g));
  CHECK(same_params(a.cls, net::init_model<double>(small_arch(), 5).cls));
  CHECK_FALSE(same_params(a.g, net::init_model<double>(small_arch(), 6).g));
  const auto c = net::clone_model(a);
  CHECK(same_params(a.d, c.d));
  CHECK(c.d[0].second.node() != a.d[0].second.node());
}

TEST_CASE("architecture validation") {
  auto a = small_arch();
  a.height = 18;
  CHECK_THROWS_AS(a.validate(), Error);
  a = small_arch();
  a.dec_widths = {8, 8};
  CHECK_THROWS_AS(a.validate(), Error);
  a = small_arch();
  a.kernel = 2;
  CHECK_THROWS_AS(a.validate(), Error);
  a = small_arch();
  a.refs = 0;
  CHECK_THROWS_AS(a.validate(), Error);
  CHECK(net::ArchConfig::from_json(small_arch().to_json()).to_json() == small_arch().to_json());
}

TEST_CASE("encoders") {
  const auto m = net::init_model<double>(small_arch(), 2);
  const D zero(Tensor<double>({2, 1, 16, 16}));
  const D fc = net::encode_content(m, zero);
  CHECK(fc.shape() == Shape{2, 8, 4, 4});
  for (double v : fc.value().values()) CHECK(v == 0.0);
  CHECK_THROWS_AS(net::encode_content(m, D(Tensor<double>({2, 1, 8, 16}))), Error);

  const auto img = test::random_tensor<double>({1, 1, 16, 16}, 3, 0, 1);
  Tensor<double> three({3, 1, 16, 16});
  for (int r = 0; r < 3; ++r) std::copy(img.values().begin(), img.values().end(), three.values().begin() + r * 256);
  const auto one = net::encode_style(m, D(img), 1).value();
  const auto tri = net::encode_style(m, D(three), 3).value();
  REQUIRE(one.shape() == Shape{1, 8});
  for (std::int64_t i = 0; i < 8; ++i) CHECK(tri[i] == doctest::Approx(one[i]).epsilon(1e-14));

  const auto refs = test::random_tensor<double>({3, 1, 16, 16}, 4, 0, 1);
  Tensor<double> perm(refs.shape());
  for (int r = 0; r < 3; ++r) {
    const int from = (r + 1) % 3;
    std::copy(refs.values().begin() + from * 256, refs.values().begin() + (from + 1) * 256,
              perm.values().begin() + r * 256);
  }
  const auto fa = net::encode_style(m, D(refs), 3).value();
  const auto fb = net::encode_style(m, D(perm), 3).value();
  for (std::int64_t i = 0; i < 8; ++i) CHECK(std::abs(fa[i] - fb[i]) < 1e-14);
  CHECK_THROWS_AS(net::encode_style(m, D(refs), 2), Error);
}

TEST_CASE("decoder") {
  auto m = net::init_model<double>(small_arch(), 2);
  const D fs(test::random_tensor<double>({2, 8}, 5));
  const D fc(test::random_tensor<double>({2, 8, 4, 4}, 6));
  const auto y = net::decode(m, fs, fc).value();
  CHECK(y.shape() == Shape{2, 1, 16, 16});
  for (double v : y.values()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  const auto y2 = net::decode(m, fs, fc).value();
  CHECK(std::memcmp(y2.values().data(), y.values().data(), y.values().size_bytes()) == 0);
  CHECK_THROWS_AS(net::decode(m, D(test::random_tensor<double>({2, 7}, 5)), fc), Error);
  CHECK_THROWS_AS(net::decode(m, fs, D(test::random_tensor<double>({2, 8, 2, 2}, 6))), Error);

  for (const char* name : {"dec.conv2.w", "dec.conv2.b"}) {
    for (auto& v : m.g.at(name).mutable_value().values()) v = 0.0;
  }
  const auto flat = net::decode(m, fs, fc);
  for (double v : flat.value().values()) CHECK(v == 0.5);
}

TEST_CASE("generate is the composition of its parts") {
  const auto m = net::init_model<double>(small_arch(), 9);
  const D src(test::random_tensor<double>({2, 1, 16, 16}, 7, 0, 1));
  const D refs(test::random_tensor<double>({6, 1, 16, 16}, 8, 0, 1));
  const auto g = net::generate(m, src, refs, 3).value();
  const auto manual = net::decode(m, net::encode_style(m, refs, 3), net::encode_content(m, src)).value();
  REQUIRE(g.shape() == manual.shape());
  CHECK(std::memcmp(g.values().data(), manual.values().data(), g.values().size_bytes()) == 0);
}

TEST_CASE("discriminator") {
  auto m = net::init_model<double>(small_arch(), 2);
  const D x(test::random_tensor<double>({3, 1, 16, 16}, 9, 0, 1));
  const std::vector<std::int64_t> st{0, 0, 0}, ct{0, 5, 2};
  const auto out = net::discriminate(m, x, st, ct);
  CHECK(out.features.size() == 2);
  CHECK(out.prob.shape() == Shape{3});
  for (double p : out.prob.value().values()) CHECK(p == 0.25);

  for (const char* head : {"disc.style.w", "disc.content.w"}) {
    m.d.at(head).mutable_value() = test::random_tensor<double>(m.d.at(head).shape(), 10, -1, 1);
  }
  const auto trained = net::discriminate(m, x, st, ct);
  for (double p : trained.prob.value().values()) {
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
  const std::vector<std::int64_t> bad_c{0, 6, 0}, bad_s{1, 0, 0};
  CHECK_THROWS_AS(net::discriminate(m, x, st, bad_c), Error);
  CHECK_THROWS_AS(net::discriminate(m, x, bad_s, ct), Error);
}

TEST_CASE("component classifier") {
  auto m = net::init_model<double>(small_arch(), 2);
  const D x(test::random_tensor<double>({2, 1, 16, 16}, 11, 0, 1));
  const auto logits = net::classify_components(m, net::style_trunk(m, x));
  REQUIRE(logits.size() == 2);
  CHECK(logits[0].shape() == Shape{2, 3});
  CHECK(logits[1].shape() == Shape{2, 2});
  CHECK_THROWS_AS(net::classify_components(m, D(Tensor<double>({2, 8, 2, 2}))), Error);

  for (int card : {3, 2, 6}) {
    const std::vector<std::int64_t> labels{0, card - 1};
    const D uniform(Tensor<double>({2, card}));
    CHECK(ops::softmax_cross_entropy(uniform, labels).item() == doctest::Approx(std::log(card)).epsilon(1e-14));
  }
}

TEST_CASE("save and load") {
  test::TempDir dir("net");
  const auto m = net::init_model<double>(small_arch(), 12);
  net::save_model(dir.path() / "m.lfgc", m, {{"note", "x"}});
  nlohmann::json meta;
  const auto r = net::load_model<double>(dir.path() / "m.lfgc", &meta);
  CHECK(meta["note"] == "x");
  CHECK(r.arch.to_json() == m.arch.to_json());
  CHECK(same_params(r.g, m.g));
  CHECK(same_params(r.d, m.d));
  CHECK(same_params(r.cls, m.cls));
  CHECK_THROWS_AS(net::load_model<double>(dir.path() / "missing.lfgc"), Error);
}

TEST_CASE("short training improves teacher-forced reconstruction") {
  const auto spec = glyph::ScriptSpec::desk_default();
  auto contents = glyph::enumerate_contents(spec);
  contents.resize(24);
  const auto styles = glyph::desk_styles();
  const auto source = glyph::synthesize_style(spec, styles[0], contents);
  const auto target = glyph::synthesize_style(spec, styles[1], contents);
  auto model = net::init_model<float>(net::ArchConfig::for_script(spec), 1);

  const double before = mean_l1(legacy::regenerate_training_set(model, source, target), target);
  legacy::TrainConfig cfg;
  cfg.steps = 150;
  cfg.batch = 8;
  const auto result = legacy::train_generation(model, source, target, spec, cfg);
  CHECK(result.history.size() == 150);
  const double after = mean_l1(legacy::regenerate_training_set(model, source, target), target);
  CAPTURE(before);
  CAPTURE(after);
  CHECK(after < 0.5 * before);

  // Trained encoders separate contents and styles.
  const auto& a = source.at(contents[0]);
  const auto& b = source.at(contents[5]);
  const std::vector<const glyph::GlyphImage*> pair{&a, &b};
  const auto fc = net::encode_content(model, Var<float>(net::stack_glyphs<float>(pair, model.arch))).value();
  double dist = 0;
  const auto half = fc.numel() / 2;
  for (std::int64_t i = 0; i < half; ++i) dist += std::abs(fc[i] - fc[half + i]);
  CHECK(dist > 0);
  const std::vector<const glyph::GlyphImage*> refs{&a, &target.at(contents[0])};
  const auto fs = net::encode_style(model, Var<float>(net::stack_glyphs<float>(refs, model.arch)), 1).value();
  dist = 0;
  const auto dim = fs.numel() / 2;
  for (std::int64_t i = 0; i < dim; ++i) dist += std::abs(fs[i] - fs[dim + i]);
  CHECK(dist > 0);
}
