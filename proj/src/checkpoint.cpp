// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfg/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <unistd.h>

namespace lfg {

namespace {

constexpr char kMagic[] = "LFGC1";
constexpr std::size_t kMagicLen = 5;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string(), path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  std::FILE* f = std::fopen(tmp.c_str(), "wb");
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + tmp.string(), path.string());
  const bool ok = std::fwrite(bytes.data(), 1, bytes.size(), f) == bytes.size() && std::fflush(f) == 0 &&
                  ::fsync(::fileno(f)) == 0;
  std::fclose(f);
  if (!ok) throw Error(ErrorCode::kIo, "short write to " + tmp.string(), path.string());
  std::filesystem::rename(tmp, path);
}

template <typename Real>
std::string encode_checkpoint(const std::vector<NamedTensor<Real>>& tensors, const nlohmann::json& meta) {
  nlohmann::json manifest;
  manifest["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& t : tensors) {
    manifest["tensors"].push_back({{"name", t.name},
                                   {"shape", t.value.shape()},
                                   {"dtype", std::string(dtype_name(dtype_of<Real>()))},
                                   {"offset", offset}});
    offset += static_cast<std::uint64_t>(t.value.numel()) * sizeof(Real);
  }
  manifest["meta"] = meta;
  const std::string text = manifest.dump();
  const auto len = static_cast<std::uint32_t>(text.size());

  std::string out;
  out.reserve(kMagicLen + 4 + text.size() + offset);
  out.append(kMagic, kMagicLen);
  char len_bytes[4];
  std::memcpy(len_bytes, &len, 4);
  out.append(len_bytes, 4);
  out.append(text);
  for (const auto& t : tensors) {
    out.append(reinterpret_cast<const char*>(t.value.data()), static_cast<std::size_t>(t.value.numel()) * sizeof(Real));
  }
  return out;
}

template <typename Real>
std::vector<NamedTensor<Real>> decode_checkpoint(const std::string& bytes, nlohmann::json* meta) {
  if (bytes.size() < kMagicLen + 4 || bytes.compare(0, kMagicLen, kMagic) != 0) {
    throw Error(ErrorCode::kCorrupt, "checkpoint: bad magic");
  }
  std::uint32_t len = 0;
  std::memcpy(&len, bytes.data() + kMagicLen, 4);
  const std::size_t blob_start = kMagicLen + 4 + len;
  if (blob_start > bytes.size()) throw Error(ErrorCode::kCorrupt, "checkpoint: truncated manifest");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(kMagicLen + 4, len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorrupt, std::string("checkpoint: manifest is not JSON: ") + e.what());
  }
  if (meta) *meta = manifest.value("meta", nlohmann::json::object());

  std::vector<NamedTensor<Real>> out;
  const std::string want = std::string(dtype_name(dtype_of<Real>()));
  for (const auto& entry : manifest.at("tensors")) {
    const std::string name = entry.at("name");
    if (entry.at("dtype") != want) {
      throw Error(ErrorCode::kCorrupt, "checkpoint: tensor '" + name + "' has dtype " +
                                           entry.at("dtype").get<std::string>() + ", expected " + want, name);
    }
    Shape shape = entry.at("shape").get<Shape>();
    const auto offset = entry.at("offset").get<std::uint64_t>();
    const std::int64_t n = shape_numel(shape);
    const std::size_t nbytes = static_cast<std::size_t>(n) * sizeof(Real);
    if (blob_start + offset + nbytes > bytes.size()) {
      throw Error(ErrorCode::kCorrupt, "checkpoint: blob for '" + name + "' runs past end of file", name);
    }
    std::vector<Real> values(static_cast<std::size_t>(n));
    std::memcpy(values.data(), bytes.data() + blob_start + offset, nbytes);
    out.push_back({name, Tensor<Real>(std::move(shape), std::move(values))});
  }
  return out;
}

template <typename Real>
void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor<Real>>& tensors,
                     const nlohmann::json& meta) {
  write_file_atomic(path, encode_checkpoint(tensors, meta));
}

template <typename Real>
std::vector<NamedTensor<Real>> load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta) {
  return decode_checkpoint<Real>(read_file(path), meta);
}

template <typename Real>
void append_params(std::vector<NamedTensor<Real>>& out, const ParamSet<Real>& params, const std::string& prefix) {
  for (const auto& [name, v] : params) out.push_back({prefix + name, v.value()});
}

template <typename Real>
void restore_params(ParamSet<Real>& params, const std::vector<NamedTensor<Real>>& tensors,
                    const std::string& prefix) {
  std::map<std::string, const Tensor<Real>*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t.value;
  for (auto& [name, v] : params) {
    auto it = by_name.find(prefix + name);
    if (it == by_name.end()) {
      throw Error(ErrorCode::kCorrupt, "checkpoint: missing tensor '" + prefix + name + "'", prefix + name);
    }
    if (it->second->shape() != v.shape()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "checkpoint: tensor '" + prefix + name + "' has shape " + shape_str(it->second->shape()) +
                      ", model expects " + shape_str(v.shape()),
                  prefix + name);
    }
    v.mutable_value() = *it->second;
  }
}

#define LFG_INSTANTIATE_CKPT(T)                                                                          \
  template std::string encode_checkpoint<T>(const std::vector<NamedTensor<T>>&, const nlohmann::json&);  \
  template std::vector<NamedTensor<T>> decode_checkpoint<T>(const std::string&, nlohmann::json*);        \
  template void save_checkpoint<T>(const std::filesystem::path&, const std::vector<NamedTensor<T>>&,     \
                                   const nlohmann::json&);                                               \
  template std::vector<NamedTensor<T>> load_checkpoint<T>(const std::filesystem::path&, nlohmann::json*); \
  template void append_params<T>(std::vector<NamedTensor<T>>&, const ParamSet<T>&, const std::string&);  \
  template void restore_params<T>(ParamSet<T>&, const std::vector<NamedTensor<T>>&, const std::string&);

LFG_INSTANTIATE_CKPT(float)
LFG_INSTANTIATE_CKPT(double)

#undef LFG_INSTANTIATE_CKPT

}  // namespace lfg
