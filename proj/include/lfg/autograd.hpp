// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode differentiation over Tensor values.
//
// Every op returns a new Var. When any input requires a gradient the result is
// linked to its inputs (the tape); backward() walks that graph once, writes
// gradients into the leaves, and then releases the graph.

#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lfg/tensor.hpp"

namespace lfg {

template <typename Real>
struct Node {
  Tensor<Real> value;
  Tensor<Real> grad;
  bool requires_grad = false;
  bool needed = false;
  std::string op;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  bool on_tape() const { return static_cast<bool>(backward_fn); }
};

template <typename Real>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<Real> value, bool requires_grad = false);
  explicit Var(std::shared_ptr<Node<Real>> node) : node_(std::move(node)) {}

  static Var constant(Tensor<Real> value) { return Var(std::move(value), false); }
  static Var leaf(Tensor<Real> value) { return Var(std::move(value), true); }

  bool defined() const { return static_cast<bool>(node_); }
  const Tensor<Real>& value() const { return node_->value; }
  Tensor<Real>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::int64_t dim(std::size_t axis) const { return node_->value.dim(axis); }
  std::int64_t numel() const { return node_->value.numel(); }
  Real item() const { return node_->value.item(); }

  bool requires_grad() const { return node_->requires_grad; }
  bool on_tape() const { return node_->on_tape(); }
  // Gradient from the last backward pass; zero-filled when never reached.
  const Tensor<Real>& grad() const;
  Tensor<Real>& mutable_grad();
  void zero_grad();

  // Same value, no history, no gradient.
  Var detach() const { return Var(node_->value, false); }

  Node<Real>* node() const { return node_.get(); }
  const std::shared_ptr<Node<Real>>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node<Real>> node_;
};

// Ordered, uniquely named set of trainable leaves.
template <typename Real>
class ParamSet {
 public:
  Var<Real>& add(const std::string& name, Tensor<Real> init);
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(std::string_view name) const { return index_.count(std::string(name)) > 0; }
  Var<Real>& at(std::string_view name);
  const Var<Real>& at(std::string_view name) const;
  std::int64_t total_numel() const;
  void zero_grad();

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  const std::pair<std::string, Var<Real>>& operator[](std::size_t i) const { return entries_[i]; }
  std::pair<std::string, Var<Real>>& operator[](std::size_t i) { return entries_[i]; }

  // Deep copy of values; the copy shares nothing with this set.
  ParamSet clone() const;

 private:
  std::deque<std::pair<std::string, Var<Real>>> entries_;  // references stay valid across add()
  std::map<std::string, std::size_t> index_;
};

// Writes d(output)/d(leaf) into every reachable leaf and releases the graph.
// With `params`, every member is zeroed first and only members receive
// gradients, so unreachable parameters end with an all-zero gradient.
template <typename Real>
void backward(const Var<Real>& output);
template <typename Real>
void backward(const Var<Real>& output, ParamSet<Real>& params);

namespace ops {

template <typename Real>
Var<Real> matmul(const Var<Real>& a, const Var<Real>& b);
template <typename Real>
Var<Real> conv2d(const Var<Real>& x, const Var<Real>& w, std::int64_t stride, std::int64_t pad);
template <typename Real>
Var<Real> add(const Var<Real>& a, const Var<Real>& b);
template <typename Real>
Var<Real> sub(const Var<Real>& a, const Var<Real>& b);
template <typename Real>
Var<Real> mul(const Var<Real>& a, const Var<Real>& b);
template <typename Real>
Var<Real> scale(const Var<Real>& x, double factor);
template <typename Real>
Var<Real> add_scalar(const Var<Real>& x, double c);
template <typename Real>
Var<Real> leaky_relu(const Var<Real>& x, double alpha);
template <typename Real>
Var<Real> sigmoid(const Var<Real>& x);
template <typename Real>
Var<Real> tanh(const Var<Real>& x);
template <typename Real>
Var<Real> log(const Var<Real>& x);
template <typename Real>
Var<Real> exp(const Var<Real>& x);
template <typename Real>
Var<Real> abs(const Var<Real>& x);
template <typename Real>
Var<Real> clamp(const Var<Real>& x, double lo, double hi);
template <typename Real>
Var<Real> mean(const Var<Real>& x);
template <typename Real>
Var<Real> sum(const Var<Real>& x);
template <typename Real>
Var<Real> concat(const Var<Real>& a, const Var<Real>& b, std::size_t axis);
template <typename Real>
Var<Real> reshape(const Var<Real>& x, Shape shape);
template <typename Real>
Var<Real> flatten(const Var<Real>& x);
template <typename Real>
Var<Real> upsample2x(const Var<Real>& x);
// Mean over the batch of per-row softmax cross-entropy; logits [N,K].
template <typename Real>
Var<Real> softmax_cross_entropy(const Var<Real>& logits, std::span<const std::int64_t> labels);

// Broadcasting helpers used by the layers.
template <typename Real>
Var<Real> add_channel_bias(const Var<Real>& x, const Var<Real>& bias);  // [N,C,...] + [C]
template <typename Real>
Var<Real> row_sum(const Var<Real>& x);                                   // [N,F] -> [N]
template <typename Real>
Var<Real> mean_spatial(const Var<Real>& x);                              // [N,C,H,W] -> [N,C]
template <typename Real>
Var<Real> broadcast_spatial(const Var<Real>& v, std::int64_t h, std::int64_t w);  // [N,C] -> [N,C,H,W]
template <typename Real>
Var<Real> group_mean(const Var<Real>& x, std::int64_t group);            // [N*g,...] -> [N,...]
template <typename Real>
Var<Real> select_rows(const Var<Real>& x, std::span<const std::int64_t> rows);

}  // namespace ops

// Generic entry point keyed by primitive name; used by the gradient-check
// suite to sweep every primitive uniformly.
struct PrimitiveAttrs {
  std::int64_t stride = 1;
  std::int64_t pad = 0;
  double alpha = 0.2;
  double factor = 1.0;
  std::size_t axis = 1;
  std::vector<std::int64_t> labels;
};

std::span<const std::string_view> primitive_names();

template <typename Real>
Var<Real> apply_primitive(std::string_view id, std::span<const Var<Real>> inputs,
                          const PrimitiveAttrs& attrs = {});

template <typename Real>
Var<Real> operator+(const Var<Real>& a, const Var<Real>& b) { return ops::add(a, b); }
template <typename Real>
Var<Real> operator-(const Var<Real>& a, const Var<Real>& b) { return ops::sub(a, b); }
template <typename Real>
Var<Real> operator*(const Var<Real>& a, const Var<Real>& b) { return ops::mul(a, b); }
template <typename Real>
Var<Real> operator*(double s, const Var<Real>& x) { return ops::scale(x, s); }

}  // namespace lfg
