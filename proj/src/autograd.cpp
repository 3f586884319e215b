// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfg/autograd.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "lfg/kernels.hpp"

namespace lfg {

template <typename Real>
Var<Real>::Var(Tensor<Real> value, bool requires_grad) : node_(std::make_shared<Node<Real>>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
  node_->op = "leaf";
}

template <typename Real>
const Tensor<Real>& Var<Real>::grad() const {
  if (node_->grad.shape() != node_->value.shape()) {
    node_->grad = Tensor<Real>(node_->value.shape());
  }
  return node_->grad;
}

template <typename Real>
Tensor<Real>& Var<Real>::mutable_grad() {
  grad();
  return node_->grad;
}

template <typename Real>
void Var<Real>::zero_grad() {
  node_->grad = Tensor<Real>(node_->value.shape());
}

template <typename Real>
Var<Real>& ParamSet<Real>::add(const std::string& name, Tensor<Real> init) {
  if (index_.count(name)) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate parameter name '" + name + "'", name);
  }
  index_[name] = entries_.size();
  entries_.emplace_back(name, Var<Real>::leaf(std::move(init)));
  return entries_.back().second;
}

template <typename Real>
Var<Real>& ParamSet<Real>::at(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    throw Error(ErrorCode::kNotFound, "no parameter named '" + std::string(name) + "'", std::string(name));
  }
  return entries_[it->second].second;
}

template <typename Real>
const Var<Real>& ParamSet<Real>::at(std::string_view name) const {
  return const_cast<ParamSet*>(this)->at(name);
}

template <typename Real>
std::int64_t ParamSet<Real>::total_numel() const {
  std::int64_t n = 0;
  for (const auto& [name, v] : entries_) n += v.numel();
  return n;
}

template <typename Real>
void ParamSet<Real>::zero_grad() {
  for (auto& [name, v] : entries_) v.zero_grad();
}

template <typename Real>
ParamSet<Real> ParamSet<Real>::clone() const {
  ParamSet out;
  for (const auto& [name, v] : entries_) out.add(name, v.value());
  return out;
}

namespace {

template <typename Real>
using NodePtr = std::shared_ptr<Node<Real>>;

template <typename Real>
Var<Real> make_result(Tensor<Real> value, std::string op, std::vector<Var<Real>> inputs,
                      std::function<void(Node<Real>&)> fn) {
  auto node = std::make_shared<Node<Real>>();
  node->value = std::move(value);
  node->op = std::move(op);
  bool tracked = false;
  for (const auto& in : inputs) tracked = tracked || in.requires_grad();
  if (tracked) {
    node->requires_grad = true;
    for (auto& in : inputs) node->inputs.push_back(in.node_ptr());
    node->backward_fn = std::move(fn);
  }
  return Var<Real>(std::move(node));
}

template <typename Real>
Node<Real>* needs(Node<Real>& self, std::size_t i) {
  Node<Real>* in = self.inputs[i].get();
  return in->needed ? in : nullptr;
}

[[noreturn]] void shape_error(std::string_view op, const Shape& a, const Shape& b) {
  throw Error(ErrorCode::kShapeMismatch,
              std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

void require_rank(std::string_view op, const Shape& s, std::size_t rank) {
  if (s.size() != rank) {
    throw Error(ErrorCode::kShapeMismatch, std::string(op) + ": expected rank " + std::to_string(rank) +
                                               ", got shape " + shape_str(s));
  }
}

template <typename Real, typename F, typename D>
Var<Real> unary(const Var<Real>& x, std::string op, F forward, D derivative) {
  const auto& xv = x.value();
  Tensor<Real> y(xv.shape());
  for (std::int64_t i = 0; i < xv.numel(); ++i) y[i] = forward(xv[i]);
  return make_result<Real>(std::move(y), std::move(op), {x}, [derivative](Node<Real>& self) {
    if (auto* in = needs(self, 0)) {
      const auto& xv = in->value;
      for (std::int64_t i = 0; i < xv.numel(); ++i) {
        in->grad[i] += self.grad[i] * derivative(xv[i], self.value[i]);
      }
    }
  });
}

}  // namespace

namespace {

template <typename Real>
void run_backward(const Var<Real>& output, ParamSet<Real>* params) {
  if (!output.defined() || output.numel() != 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "backward: output must be a scalar, got shape " +
                    (output.defined() ? shape_str(output.shape()) : std::string("<undefined>")));
  }
  if (!output.on_tape()) {
    throw Error(ErrorCode::kInvalidArgument, "backward: output is detached (not produced on the tape)");
  }

  std::unordered_set<Node<Real>*> wanted;
  if (params) {
    for (auto& [name, v] : *params) {
      v.zero_grad();
      wanted.insert(v.node());
    }
  }

  // Post-order DFS: inputs precede their consumers.
  std::vector<Node<Real>*> order;
  std::unordered_set<Node<Real>*> seen;
  std::vector<std::pair<Node<Real>*, std::size_t>> stack{{output.node(), 0}};
  seen.insert(output.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<Real>* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node<Real>* node : order) {
    if (!node->on_tape()) {
      node->needed = params ? wanted.count(node) > 0 : node->requires_grad;
    } else {
      node->needed = false;
      for (auto& in : node->inputs) node->needed = node->needed || in->needed;
    }
    if (node->needed) node->grad = Tensor<Real>(node->value.shape());
  }

  output.node()->grad[0] = Real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<Real>* node = *it;
    if (node->on_tape() && node->needed) node->backward_fn(*node);
  }

  for (Node<Real>* node : order) {
    node->needed = false;
    if (node->on_tape()) {
      node->backward_fn = nullptr;
      node->inputs.clear();
      node->grad = Tensor<Real>();
    }
  }
}

}  // namespace

template <typename Real>
void backward(const Var<Real>& output) {
  run_backward<Real>(output, nullptr);
}

template <typename Real>
void backward(const Var<Real>& output, ParamSet<Real>& params) {
  run_backward<Real>(output, &params);
}

namespace ops {

template <typename Real>
Var<Real> matmul(const Var<Real>& a, const Var<Real>& b) {
  require_rank("matmul", a.shape(), 2);
  require_rank("matmul", b.shape(), 2);
  const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) shape_error("matmul", a.shape(), b.shape());
  Tensor<Real> y({m, n});
  kernels::matmul(a.value().data(), b.value().data(), y.data(), m, k, n);
  return make_result<Real>(std::move(y), "matmul", {a, b}, [m, k, n](Node<Real>& self) {
    if (auto* in = needs(self, 0)) {
      Tensor<Real> g({m, k});
      kernels::matmul_nt(self.grad.data(), self.inputs[1]->value.data(), g.data(), m, n, k);
      for (std::int64_t i = 0; i < g.numel(); ++i) in->grad[i] += g[i];
    }
    if (auto* in = needs(self, 1)) {
      Tensor<Real> g({k, n});
      kernels::matmul_tn(self.inputs[0]->value.data(), self.grad.data(), g.data(), m, k, n);
      for (std::int64_t i = 0; i < g.numel(); ++i) in->grad[i] += g[i];
    }
  });
}

template <typename Real>
Var<Real> conv2d(const Var<Real>& x, const Var<Real>& w, std::int64_t stride, std::int64_t pad) {
  require_rank("conv2d", x.shape(), 4);
  require_rank("conv2d", w.shape(), 4);
  if (w.dim(1) != x.dim(1) || w.dim(2) != w.dim(3)) shape_error("conv2d", x.shape(), w.shape());
  if (stride < 1 || pad < 0) {
    throw Error(ErrorCode::kInvalidArgument, "conv2d: stride must be >= 1 and pad >= 0");
  }
  kernels::Conv2dGeom g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(0), w.dim(2), stride, pad};
  if (g.in_h + 2 * pad < g.kernel || g.in_w + 2 * pad < g.kernel) shape_error("conv2d", x.shape(), w.shape());
  Tensor<Real> y({g.batch, g.out_ch, g.out_h(), g.out_w()});
  kernels::conv2d_forward(g, x.value().data(), w.value().data(), y.data());
  return make_result<Real>(std::move(y), "conv2d", {x, w}, [g](Node<Real>& self) {
    if (auto* in = needs(self, 0)) {
      Tensor<Real> dx(in->value.shape());
      kernels::conv2d_backward_input(g, self.grad.data(), self.inputs[1]->value.data(), dx.data());
      for (std::int64_t i = 0; i < dx.numel(); ++i) in->grad[i] += dx[i];
    }
    if (auto* in = needs(self, 1)) {
      Tensor<Real> dw(in->value.shape());
      kernels::conv2d_backward_weight(g, self.inputs[0]->value.data(), self.grad.data(), dw.data());
      for (std::int64_t i = 0; i < dw.numel(); ++i) in->grad[i] += dw[i];
    }
  });
}

template <typename Real>
Var<Real> add(const Var<Real>& a, const Var<Real>& b) {
  if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  Tensor<Real> y(a.shape());
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = a.value()[i] + b.value()[i];
  return make_result<Real>(std::move(y), "add", {a, b}, [](Node<Real>& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (auto* in = needs(self, k)) {
        for (std::int64_t i = 0; i < self.grad.numel(); ++i) in->grad[i] += self.grad[i];
      }
    }
  });
}

template <typename Real>
Var<Real> sub(const Var<Real>& a, const Var<Real>& b) {
  if (a.shape() != b.shape()) shape_error("sub", a.shape(), b.shape());
  Tensor<Real> y(a.shape());
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = a.value()[i] - b.value()[i];
  return make_result<Real>(std::move(y), "sub", {a, b}, [](Node<Real>& self) {
    if (auto* in = needs(self, 0)) {
      for (std::int64_t i = 0; i < self.grad.numel(); ++i) in->grad[i] += self.grad[i];
    }
    if (auto* in = needs(self, 1)) {
      for (std::int64_t i = 0; i < self.grad.numel(); ++i) in->grad[i] -= self.grad[i];
    }
  });
}

template <typename Real>
Var<Real> mul(const Var<Real>& a, const Var<Real>& b) {
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  Tensor<Real> y(a.shape());
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = a.value()[i] * b.value()[i];
  return make_result<Real>(std::move(y), "mul", {a, b}, [](Node<Real>& self) {
    const auto& av = self.inputs[0]->value;
    const auto& bv = self.inputs[1]->value;
    if (auto* in = needs(self, 0)) {
      for (std::int64_t i = 0; i < self.grad.numel(); ++i) in->grad[i] += self.grad[i] * bv[i];
    }
    if (auto* in = needs(self, 1)) {
      for (std::int64_t i = 0; i < self.grad.numel(); ++i) in->grad[i] += self.grad[i] * av[i];
    }
  });
}

template <typename Real>
Var<Real> scale(const Var<Real>& x, double factor) {
  const Real f = static_cast<Real>(factor);
  return unary<Real>(x, "scale", [f](Real v) { return f * v; }, [f](Real, Real) { return f; });
}

template <typename Real>
Var<Real> add_scalar(const Var<Real>& x, double c) {
  const Real cv = static_cast<Real>(c);
  return unary<Real>(x, "add_scalar", [cv](Real v) { return v + cv; }, [](Real, Real) { return Real(1); });
}

template <typename Real>
Var<Real> leaky_relu(const Var<Real>& x, double alpha) {
  const Real a = static_cast<Real>(alpha);
  // Derivative at exactly 0 is alpha.
  return unary<Real>(
      x, "leaky_relu", [a](Real v) { return v > 0 ? v : a * v; },
      [a](Real v, Real) { return v > 0 ? Real(1) : a; });
}

template <typename Real>
Var<Real> sigmoid(const Var<Real>& x) {
  return unary<Real>(
      x, "sigmoid",
      [](Real v) {
        if (v >= 0) return Real(1) / (Real(1) + std::exp(-v));
        const Real e = std::exp(v);
        return e / (Real(1) + e);
      },
      [](Real, Real y) { return y * (Real(1) - y); });
}

template <typename Real>
Var<Real> tanh(const Var<Real>& x) {
  return unary<Real>(
      x, "tanh", [](Real v) { return std::tanh(v); }, [](Real, Real y) { return Real(1) - y * y; });
}

template <typename Real>
Var<Real> log(const Var<Real>& x) {
  for (Real v : x.value().values()) {
    if (!(v > 0)) {
      throw Error(ErrorCode::kDomain, "log: non-positive input " + std::to_string(static_cast<double>(v)));
    }
  }
  return unary<Real>(
      x, "log", [](Real v) { return std::log(v); }, [](Real v, Real) { return Real(1) / v; });
}

template <typename Real>
Var<Real> exp(const Var<Real>& x) {
  const double limit = std::log(static_cast<double>(std::numeric_limits<Real>::max()));
  for (Real v : x.value().values()) {
    if (!(static_cast<double>(v) < limit)) {
      throw Error(ErrorCode::kDomain, "exp: input " + std::to_string(static_cast<double>(v)) + " overflows");
    }
  }
  return unary<Real>(
      x, "exp", [](Real v) { return std::exp(v); }, [](Real, Real y) { return y; });
}

template <typename Real>
Var<Real> abs(const Var<Real>& x) {
  // Derivative at exactly 0 is 0.
  return unary<Real>(
      x, "abs", [](Real v) { return std::abs(v); },
      [](Real v, Real) { return v > 0 ? Real(1) : (v < 0 ? Real(-1) : Real(0)); });
}

template <typename Real>
Var<Real> clamp(const Var<Real>& x, double lo, double hi) {
  const Real l = static_cast<Real>(lo), h = static_cast<Real>(hi);
  return unary<Real>(
      x, "clamp", [l, h](Real v) { return std::clamp(v, l, h); },
      [l, h](Real v, Real) { return (v >= l && v <= h) ? Real(1) : Real(0); });
}

template <typename Real>
Var<Real> sum(const Var<Real>& x) {
  Real acc = 0;
  for (Real v : x.value().values()) acc += v;
  return make_result<Real>(Tensor<Real>::scalar(acc), "sum", {x}, [](Node<Real>& self) {
    if (auto* in = needs(self, 0)) {
      const Real g = self.grad[0];
      for (std::int64_t i = 0; i < in->grad.numel(); ++i) in->grad[i] += g;
    }
  });
}

template <typename Real>
Var<Real> mean(const Var<Real>& x) {
  Real acc = 0;
  for (Real v : x.value().values()) acc += v;
  const Real n = static_cast<Real>(x.numel());
  return make_result<Real>(Tensor<Real>::scalar(acc / n), "mean", {x}, [n](Node<Real>& self) {
    if (auto* in = needs(self, 0)) {
      const Real g = self.grad[0] / n;
      for (std::int64_t i = 0; i < in->grad.numel(); ++i) in->grad[i] += g;
    }
  });
}

template <typename Real>
Var<Real> concat(const Var<Real>& a, const Var<Real>& b, std::size_t axis) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != sb.size() || axis >= sa.size()) shape_error("concat", sa, sb);
  for (std::size_t d = 0; d < sa.size(); ++d) {
    if (d != axis && sa[d] != sb[d]) shape_error("concat", sa, sb);
  }
  std::int64_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= sa[d];
  for (std::size_t d = axis + 1; d < sa.size(); ++d) inner *= sa[d];
  const std::int64_t ca = sa[axis] * inner, cb = sb[axis] * inner;
  Shape out_shape = sa;
  out_shape[axis] += sb[axis];
  Tensor<Real> y(out_shape);
  for (std::int64_t o = 0; o < outer; ++o) {
    std::copy_n(a.value().data() + o * ca, ca, y.data() + o * (ca + cb));
    std::copy_n(b.value().data() + o * cb, cb, y.data() + o * (ca + cb) + ca);
  }
  return make_result<Real>(std::move(y), "concat", {a, b}, [outer, ca, cb](Node<Real>& self) {
    if (auto* in = needs(self, 0)) {
      for (std::int64_t o = 0; o < outer; ++o)
        for (std::int64_t i = 0; i < ca; ++i) in->grad[o * ca + i] += self.grad[o * (ca + cb) + i];
    }
    if (auto* in = needs(self, 1)) {
      for (std::int64_t o = 0; o < outer; ++o)
        for (std::int64_t i = 0; i < cb; ++i) in->grad[o * cb + i] += self.grad[o * (ca + cb) + ca + i];
    }
  });
}

template <typename Real>
Var<Real> reshape(const Var<Real>& x, Shape shape) {
  Tensor<Real> y = x.value().reshaped(std::move(shape));
  return make_result<Real>(std::move(y), "reshape", {x}, [](Node<Real>& self) {
    if (auto* in = needs(self, 0)) {
      for (std::int64_t i = 0; i < in->grad.numel(); ++i) in->grad[i] += self.grad[i];
    }
  });
}

template <typename Real>
Var<Real> flatten(const Var<Real>& x) {
  if (x.shape().empty()) throw Error(ErrorCode::kShapeMismatch, "flatten: scalar input");
  return reshape(x, Shape{x.dim(0), x.numel() / x.dim(0)});
}

template <typename Real>
Var<Real> upsample2x(const Var<Real>& x) {
  require_rank("upsample2x", x.shape(), 4);
  const std::int64_t nc = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor<Real> y({x.dim(0), x.dim(1), 2 * h, 2 * w});
  const Real* src = x.value().data();
  Real* dst = y.data();
  for (std::int64_t p = 0; p < nc; ++p) {
    for (std::int64_t yy = 0; yy < 2 * h; ++yy) {
      for (std::int64_t xx = 0; xx < 2 * w; ++xx) {
        dst[(p * 2 * h + yy) * 2 * w + xx] = src[(p * h + yy / 2) * w + xx / 2];
      }
    }
  }
  return make_result<Real>(std::move(y), "upsample2x", {x}, [nc, h, w](Node<Real>& self) {
    if (auto* in = needs(self, 0)) {
      for (std::int64_t p = 0; p < nc; ++p) {
        for (std::int64_t yy = 0; yy < 2 * h; ++yy) {
          for (std::int64_t xx = 0; xx < 2 * w; ++xx) {
            in->grad[(p * h + yy / 2) * w + xx / 2] += self.grad[(p * 2 * h + yy) * 2 * w + xx];
          }
        }
      }
    }
  });
}

template <typename Real>
Var<Real> softmax_cross_entropy(const Var<Real>& logits, std::span<const std::int64_t> labels) {
  require_rank("softmax_cross_entropy", logits.shape(), 2);
  const std::int64_t n = logits.dim(0), k = logits.dim(1);
  if (static_cast<std::int64_t>(labels.size()) != n) {
    throw Error(ErrorCode::kShapeMismatch, "softmax_cross_entropy: " + std::to_string(labels.size()) +
                                               " labels for logits " + shape_str(logits.shape()));
  }
  const auto& lv = logits.value();
  auto probs = std::make_shared<std::vector<Real>>(static_cast<std::size_t>(n * k));
  std::vector<std::int64_t> lab(labels.begin(), labels.end());
  double total = 0;
  for (std::int64_t r = 0; r < n; ++r) {
    if (lab[r] < 0 || lab[r] >= k) {
      throw Error(ErrorCode::kInvalidArgument, "softmax_cross_entropy: label " + std::to_string(lab[r]) +
                                                   " outside [0," + std::to_string(k) + ")");
    }
    const Real* row = lv.data() + r * k;
    Real mx = *std::max_element(row, row + k);
    Real z = 0;
    for (std::int64_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    const Real lse = mx + std::log(z);
    for (std::int64_t j = 0; j < k; ++j) (*probs)[r * k + j] = std::exp(row[j] - lse);
    total += static_cast<double>(lse - row[lab[r]]);
  }
  const Real loss = static_cast<Real>(total / static_cast<double>(n));
  return make_result<Real>(Tensor<Real>::scalar(loss), "softmax_cross_entropy", {logits},
                           [probs, lab, n, k](Node<Real>& self) {
                             if (auto* in = needs(self, 0)) {
                               const Real g = self.grad[0] / static_cast<Real>(n);
                               for (std::int64_t r = 0; r < n; ++r) {
                                 for (std::int64_t j = 0; j < k; ++j) {
                                   Real d = (*probs)[r * k + j] - (j == lab[r] ? Real(1) : Real(0));
                                   in->grad[r * k + j] += g * d;
                                 }
                               }
                             }
                           });
}

template <typename Real>
Var<Real> add_channel_bias(const Var<Real>& x, const Var<Real>& bias) {
  if (x.shape().size() < 2 || bias.shape().size() != 1 || bias.dim(0) != x.dim(1)) {
    shape_error("add_channel_bias", x.shape(), bias.shape());
  }
  const std::int64_t n = x.dim(0), c = x.dim(1), inner = x.numel() / (n * c);
  Tensor<Real> y = x.value();
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t ch = 0; ch < c; ++ch) {
      Real* p = y.data() + (b * c + ch) * inner;
      const Real bv = bias.value()[ch];
      for (std::int64_t i = 0; i < inner; ++i) p[i] += bv;
    }
  return make_result<Real>(std::move(y), "add_channel_bias", {x, bias}, [n, c, inner](Node<Real>& self) {
    if (auto* in = needs(self, 0)) {
      for (std::int64_t i = 0; i < in->grad.numel(); ++i) in->grad[i] += self.grad[i];
    }
    if (auto* in = needs(self, 1)) {
      for (std::int64_t ch = 0; ch < c; ++ch) {
        Real acc = 0;
        for (std::int64_t b = 0; b < n; ++b) {
          const Real* p = self.grad.data() + (b * c + ch) * inner;
          for (std::int64_t i = 0; i < inner; ++i) acc += p[i];
        }
        in->grad[ch] += acc;
      }
    }
  });
}

template <typename Real>
Var<Real> row_sum(const Var<Real>& x) {
  require_rank("row_sum", x.shape(), 2);
  const std::int64_t n = x.dim(0), f = x.dim(1);
  Tensor<Real> y({n});
  for (std::int64_t r = 0; r < n; ++r) {
    Real acc = 0;
    for (std::int64_t j = 0; j < f; ++j) acc += x.value()[r * f + j];
    y[r] = acc;
  }
  return make_result<Real>(std::move(y), "row_sum", {x}, [n, f](Node<Real>& self) {
    if (auto* in = needs(self, 0)) {
      for (std::int64_t r = 0; r < n; ++r)
        for (std::int64_t j = 0; j < f; ++j) in->grad[r * f + j] += self.grad[r];
    }
  });
}

template <typename Real>
Var<Real> mean_spatial(const Var<Real>& x) {
  require_rank("mean_spatial", x.shape(), 4);
  const std::int64_t nc = x.dim(0) * x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor<Real> y({x.dim(0), x.dim(1)});
  for (std::int64_t p = 0; p < nc; ++p) {
    Real acc = 0;
    for (std::int64_t i = 0; i < hw; ++i) acc += x.value()[p * hw + i];
    y[p] = acc / static_cast<Real>(hw);
  }
  return make_result<Real>(std::move(y), "mean_spatial", {x}, [nc, hw](Node<Real>& self) {
    if (auto* in = needs(self, 0)) {
      for (std::int64_t p = 0; p < nc; ++p) {
        const Real g = self.grad[p] / static_cast<Real>(hw);
        for (std::int64_t i = 0; i < hw; ++i) in->grad[p * hw + i] += g;
      }
    }
  });
}

template <typename Real>
Var<Real> broadcast_spatial(const Var<Real>& v, std::int64_t h, std::int64_t w) {
  require_rank("broadcast_spatial", v.shape(), 2);
  const std::int64_t nc = v.numel(), hw = h * w;
  Tensor<Real> y({v.dim(0), v.dim(1), h, w});
  for (std::int64_t p = 0; p < nc; ++p) std::fill_n(y.data() + p * hw, hw, v.value()[p]);
  return make_result<Real>(std::move(y), "broadcast_spatial", {v}, [nc, hw](Node<Real>& self) {
    if (auto* in = needs(self, 0)) {
      for (std::int64_t p = 0; p < nc; ++p) {
        Real acc = 0;
        for (std::int64_t i = 0; i < hw; ++i) acc += self.grad[p * hw + i];
        in->grad[p] += acc;
      }
    }
  });
}

template <typename Real>
Var<Real> group_mean(const Var<Real>& x, std::int64_t group) {
  if (x.shape().empty() || group < 1 || x.dim(0) % group != 0) {
    throw Error(ErrorCode::kShapeMismatch,
                "group_mean: leading extent of " + shape_str(x.shape()) + " not divisible by " +
                    std::to_string(group));
  }
  const std::int64_t groups = x.dim(0) / group, inner = x.numel() / x.dim(0);
  Shape out_shape = x.shape();
  out_shape[0] = groups;
  Tensor<Real> y(out_shape);
  for (std::int64_t gi = 0; gi < groups; ++gi) {
    for (std::int64_t i = 0; i < inner; ++i) {
      Real acc = 0;
      for (std::int64_t m = 0; m < group; ++m) acc += x.value()[(gi * group + m) * inner + i];
      y[gi * inner + i] = acc / static_cast<Real>(group);
    }
  }
  return make_result<Real>(std::move(y), "group_mean", {x}, [groups, group, inner](Node<Real>& self) {
    if (auto* in = needs(self, 0)) {
      for (std::int64_t gi = 0; gi < groups; ++gi)
        for (std::int64_t m = 0; m < group; ++m)
          for (std::int64_t i = 0; i < inner; ++i)
            in->grad[(gi * group + m) * inner + i] += self.grad[gi * inner + i] / static_cast<Real>(group);
    }
  });
}

template <typename Real>
Var<Real> select_rows(const Var<Real>& x, std::span<const std::int64_t> rows) {
  if (x.shape().empty()) throw Error(ErrorCode::kShapeMismatch, "select_rows: scalar input");
  const std::int64_t inner = x.numel() / x.dim(0);
  std::vector<std::int64_t> idx(rows.begin(), rows.end());
  Shape out_shape = x.shape();
  out_shape[0] = static_cast<std::int64_t>(idx.size());
  Tensor<Real> y(out_shape);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= x.dim(0)) {
      throw Error(ErrorCode::kInvalidArgument, "select_rows: row " + std::to_string(idx[r]) + " out of range");
    }
    std::copy_n(x.value().data() + idx[r] * inner, inner, y.data() + static_cast<std::int64_t>(r) * inner);
  }
  return make_result<Real>(std::move(y), "select_rows", {x}, [idx, inner](Node<Real>& self) {
    if (auto* in = needs(self, 0)) {
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::int64_t i = 0; i < inner; ++i)
          in->grad[idx[r] * inner + i] += self.grad[static_cast<std::int64_t>(r) * inner + i];
    }
  });
}

}  // namespace ops

namespace {
constexpr std::array<std::string_view, 18> kPrimitiveNames = {
    "matmul", "conv2d", "add", "sub", "mul", "scale", "leaky_relu", "sigmoid", "tanh",
    "log", "exp", "mean", "sum", "abs", "concat", "flatten", "upsample2x", "softmax_cross_entropy"};
}  // namespace

std::span<const std::string_view> primitive_names() { return kPrimitiveNames; }

template <typename Real>
Var<Real> apply_primitive(std::string_view id, std::span<const Var<Real>> in, const PrimitiveAttrs& at) {
  auto arity = [&](std::size_t n) {
    if (in.size() != n) {
      throw Error(ErrorCode::kInvalidArgument, std::string(id) + " expects " + std::to_string(n) +
                                                   " inputs, got " + std::to_string(in.size()));
    }
  };
  if (id == "matmul") { arity(2); return ops::matmul(in[0], in[1]); }
  if (id == "conv2d") { arity(2); return ops::conv2d(in[0], in[1], at.stride, at.pad); }
  if (id == "add") { arity(2); return ops::add(in[0], in[1]); }
  if (id == "sub") { arity(2); return ops::sub(in[0], in[1]); }
  if (id == "mul") { arity(2); return ops::mul(in[0], in[1]); }
  if (id == "scale") { arity(1); return ops::scale(in[0], at.factor); }
  if (id == "leaky_relu") { arity(1); return ops::leaky_relu(in[0], at.alpha); }
  if (id == "sigmoid") { arity(1); return ops::sigmoid(in[0]); }
  if (id == "tanh") { arity(1); return ops::tanh(in[0]); }
  if (id == "log") { arity(1); return ops::log(in[0]); }
  if (id == "exp") { arity(1); return ops::exp(in[0]); }
  if (id == "mean") { arity(1); return ops::mean(in[0]); }
  if (id == "sum") { arity(1); return ops::sum(in[0]); }
  if (id == "abs") { arity(1); return ops::abs(in[0]); }
  if (id == "concat") { arity(2); return ops::concat(in[0], in[1], at.axis); }
  if (id == "flatten") { arity(1); return ops::flatten(in[0]); }
  if (id == "upsample2x") { arity(1); return ops::upsample2x(in[0]); }
  if (id == "softmax_cross_entropy") { arity(1); return ops::softmax_cross_entropy<Real>(in[0], at.labels); }
  throw Error(ErrorCode::kInvalidArgument, "unknown primitive '" + std::string(id) + "'");
}

#define LFG_INSTANTIATE_AUTOGRAD(T)                                                               \
  template class Var<T>;                                                                          \
  template class ParamSet<T>;                                                                     \
  template void backward<T>(const Var<T>&);                                                       \
  template void backward<T>(const Var<T>&, ParamSet<T>&);                                         \
  template Var<T> apply_primitive<T>(std::string_view, std::span<const Var<T>>, const PrimitiveAttrs&); \
  namespace ops {                                                                                 \
  template Var<T> matmul<T>(const Var<T>&, const Var<T>&);                                        \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, std::int64_t, std::int64_t);            \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                                           \
  template Var<T> sub<T>(const Var<T>&, const Var<T>&);                                           \
  template Var<T> mul<T>(const Var<T>&, const Var<T>&);                                           \
  template Var<T> scale<T>(const Var<T>&, double);                                                \
  template Var<T> add_scalar<T>(const Var<T>&, double);                                           \
  template Var<T> leaky_relu<T>(const Var<T>&, double);                                           \
  template Var<T> sigmoid<T>(const Var<T>&);                                                      \
  template Var<T> tanh<T>(const Var<T>&);                                                         \
  template Var<T> log<T>(const Var<T>&);                                                          \
  template Var<T> exp<T>(const Var<T>&);                                                          \
  template Var<T> abs<T>(const Var<T>&);                                                          \
  template Var<T> clamp<T>(const Var<T>&, double, double);                                        \
  template Var<T> mean<T>(const Var<T>&);                                                         \
  template Var<T> sum<T>(const Var<T>&);                                                          \
  template Var<T> concat<T>(const Var<T>&, const Var<T>&, std::size_t);                           \
  template Var<T> reshape<T>(const Var<T>&, Shape);                                               \
  template Var<T> flatten<T>(const Var<T>&);                                                      \
  template Var<T> upsample2x<T>(const Var<T>&);                                                   \
  template Var<T> softmax_cross_entropy<T>(const Var<T>&, std::span<const std::int64_t>);         \
  template Var<T> add_channel_bias<T>(const Var<T>&, const Var<T>&);                              \
  template Var<T> row_sum<T>(const Var<T>&);                                                      \
  template Var<T> mean_spatial<T>(const Var<T>&);                                                 \
  template Var<T> broadcast_spatial<T>(const Var<T>&, std::int64_t, std::int64_t);                \
  template Var<T> group_mean<T>(const Var<T>&, std::int64_t);                                     \
  template Var<T> select_rows<T>(const Var<T>&, std::span<const std::int64_t>);                   \
  }

LFG_INSTANTIATE_AUTOGRAD(float)
LFG_INSTANTIATE_AUTOGRAD(double)

#undef LFG_INSTANTIATE_AUTOGRAD

}  // namespace lfg
