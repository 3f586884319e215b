// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lfg::png {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  bool operator==(const GrayImage&) const = default;
};

// 8-bit grayscale PNG, default compression, no ancillary chunks; the same
// image always encodes to the same bytes.
std::string encode(const GrayImage& image);
// Accepts any PNG libpng can read and converts it to 8-bit gray.
GrayImage decode(const std::string& bytes, const std::string& name = "<memory>");

GrayImage read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const GrayImage& image);

}  // namespace lfg::png
