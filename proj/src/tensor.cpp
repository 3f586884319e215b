// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfg/tensor.hpp"

#include <cmath>
#include <sstream>

namespace lfg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kDomain: return "domain_error";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kCorrupt: return "corrupt";
  }
  return "unknown";
}

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto e : shape) {
    if (e <= 0) {
      throw Error(ErrorCode::kShapeMismatch, "non-positive extent in shape " + shape_str(shape));
    }
    n *= e;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::string_view dtype_name(DType dtype) { return dtype == DType::kF32 ? "f32" : "f64"; }

template <typename Real>
Tensor<Real>::Tensor(Shape shape, Real fill)
    : shape_(std::move(shape)), values_(static_cast<std::size_t>(shape_numel(shape_)), fill) {}

template <typename Real>
Tensor<Real>::Tensor(Shape shape, std::vector<Real> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (static_cast<std::int64_t>(values_.size()) != shape_numel(shape_)) {
    throw Error(ErrorCode::kShapeMismatch,
                "value count " + std::to_string(values_.size()) + " does not match shape " +
                    shape_str(shape_));
  }
}

template <typename Real>
Real Tensor<Real>::item() const {
  if (values_.size() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "item() on tensor of shape " + shape_str(shape_));
  }
  return values_[0];
}

template <typename Real>
bool Tensor<Real>::all_finite() const {
  for (Real v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <typename Real>
Tensor<Real> Tensor<Real>::reshaped(Shape shape) const {
  if (shape_numel(shape) != numel()) {
    throw Error(ErrorCode::kShapeMismatch,
                "cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  }
  return Tensor(std::move(shape), values_);
}

template class Tensor<float>;
template class Tensor<double>;

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  std::uint64_t state = a ^ (b * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL);
  return splitmix64(state);
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t state = seed;
  for (auto& s : s_) s = splitmix64(state);
}

std::uint64_t SeededRng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double SeededRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t SeededRng::below(std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "below(0)");
  // Rejection sampling keeps the result unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double SeededRng::normal() {
  // Box-Muller, one value per call.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

SeededRng SeededRng::fork(std::uint64_t stream) const { return SeededRng(hash_combine(seed_, stream)); }

}  // namespace lfg
