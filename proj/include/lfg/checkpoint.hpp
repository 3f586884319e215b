// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0
//
// Parameter checkpoint file ("LFGC1"):
//
//   bytes 0..4   ASCII "LFGC1"
//   bytes 5..8   u32 little-endian manifest length L
//   next L bytes UTF-8 JSON manifest:
//                {"tensors": [{"name", "shape", "dtype", "offset"}, ...], "meta": {...}}
//   remainder    raw little-endian value blobs in manifest order; "offset" is
//                relative to the first blob byte.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lfg/autograd.hpp"

namespace lfg {

template <typename Real>
struct NamedTensor {
  std::string name;
  Tensor<Real> value;
};

template <typename Real>
std::string encode_checkpoint(const std::vector<NamedTensor<Real>>& tensors,
                              const nlohmann::json& meta = nlohmann::json::object());

template <typename Real>
std::vector<NamedTensor<Real>> decode_checkpoint(const std::string& bytes, nlohmann::json* meta = nullptr);

template <typename Real>
void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor<Real>>& tensors,
                     const nlohmann::json& meta = nlohmann::json::object());

template <typename Real>
std::vector<NamedTensor<Real>> load_checkpoint(const std::filesystem::path& path,
                                               nlohmann::json* meta = nullptr);

// Collects a ParamSet's values under `prefix` + name.
template <typename Real>
void append_params(std::vector<NamedTensor<Real>>& out, const ParamSet<Real>& params,
                   const std::string& prefix);

// Copies matching tensors (by prefixed name and shape) back into `params`;
// every member of `params` must be present.
template <typename Real>
void restore_params(ParamSet<Real>& params, const std::vector<NamedTensor<Real>>& tensors,
                    const std::string& prefix);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temp file, flushes, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace lfg
