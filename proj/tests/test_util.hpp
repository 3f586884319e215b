// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "lfg/tensor.hpp"

namespace lfg::test {

inline std::filesystem::path data_dir() { return LFG_TEST_DATA_DIR; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("lfg-" + tag + "-" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

template <typename Real>
Tensor<Real> random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  SeededRng rng(seed);
  Tensor<Real> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<Real>(rng.uniform(lo, hi));
  return t;
}

}  // namespace lfg::test
