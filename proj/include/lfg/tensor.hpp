// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major value tensors and the deterministic RNG used everywhere.

#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lfg/error.hpp"

namespace lfg {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

enum class DType { kF32, kF64 };

template <typename Real>
constexpr DType dtype_of();
template <>
constexpr DType dtype_of<float>() { return DType::kF32; }
template <>
constexpr DType dtype_of<double>() { return DType::kF64; }

std::string_view dtype_name(DType dtype);

template <typename Real>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = Real(0));
  Tensor(Shape shape, std::vector<Real> values);

  static Tensor scalar(Real v) { return Tensor(Shape{}, std::vector<Real>{v}); }

  const Shape& shape() const { return shape_; }
  std::int64_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t rank() const { return shape_.size(); }
  std::int64_t numel() const { return static_cast<std::int64_t>(values_.size()); }

  std::span<Real> values() { return values_; }
  std::span<const Real> values() const { return values_; }
  Real* data() { return values_.data(); }
  const Real* data() const { return values_.data(); }

  Real& operator[](std::int64_t i) { return values_[static_cast<std::size_t>(i)]; }
  Real operator[](std::int64_t i) const { return values_[static_cast<std::size_t>(i)]; }

  Real item() const;
  bool all_finite() const;

  // Same values, new extents; product must match.
  Tensor reshaped(Shape shape) const;

  template <typename Other>
  Tensor<Other> cast() const {
    std::vector<Other> out(values_.begin(), values_.end());
    return Tensor<Other>(shape_, std::move(out));
  }

 private:
  Shape shape_;
  std::vector<Real> values_;
};

// splitmix64-seeded xoshiro256**. Distributions are implemented here rather
// than through <random> so that draw sequences are identical on every
// standard library.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // Child stream; independent of how many draws the parent has made.
  SeededRng fork(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace lfg
