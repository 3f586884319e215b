// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#include "lfg/zip.hpp"

#include <cstdint>

#include <zlib.h>

#include "lfg/error.hpp"

namespace lfg::zip {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01

void put16(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put32(std::string& out, std::uint32_t v) {
  put16(out, v & 0xffff);
  put16(out, v >> 16);
}

std::uint32_t get16(const std::string& s, std::size_t at) {
  if (at + 2 > s.size()) throw Error(ErrorCode::kCorrupt, "zip: truncated archive");
  return static_cast<std::uint8_t>(s[at]) | (static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[at + 1])) << 8);
}

std::uint32_t get32(const std::string& s, std::size_t at) { return get16(s, at) | (get16(s, at + 2) << 16); }

std::uint32_t crc_of(const std::string& bytes) {
  return static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

}  // namespace

std::string write(const std::vector<Entry>& entries) {
  std::string out;
  std::string central;
  for (const auto& [name, bytes] : entries) {
    if (name.empty() || name.size() > 0xffff) throw Error(ErrorCode::kInvalidArgument, "zip: bad entry name");
    if (bytes.size() >= 0xffffffffu || out.size() >= 0xffffffffu) {
      throw Error(ErrorCode::kInvalidArgument, "zip: archive exceeds 4 GiB");
    }
    const std::uint32_t crc = crc_of(bytes);
    const auto size = static_cast<std::uint32_t>(bytes.size());
    const auto offset = static_cast<std::uint32_t>(out.size());

    put32(out, kLocalSig);
    put16(out, 20);  // version needed
    put16(out, 0);   // flags
    put16(out, 0);   // stored
    put16(out, 0);
    put16(out, kDosDate);
    put32(out, crc);
    put32(out, size);
    put32(out, size);
    put16(out, static_cast<std::uint32_t>(name.size()));
    put16(out, 0);
    out += name;
    out += bytes;

    put32(central, kCentralSig);
    put16(central, 20);  // made by
    put16(central, 20);
    put16(central, 0);
    put16(central, 0);
    put16(central, 0);
    put16(central, kDosDate);
    put32(central, crc);
    put32(central, size);
    put32(central, size);
    put16(central, static_cast<std::uint32_t>(name.size()));
    put16(central, 0);  // extra
    put16(central, 0);  // comment
    put16(central, 0);  // disk
    put16(central, 0);  // internal attrs
    put32(central, 0);  // external attrs
    put32(central, offset);
    central += name;
  }
  const auto central_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, kEndSig);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint32_t>(entries.size()));
  put16(out, static_cast<std::uint32_t>(entries.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, central_offset);
  put16(out, 0);
  return out;
}

std::vector<Entry> read(const std::string& archive) {
  if (archive.size() < 22) throw Error(ErrorCode::kCorrupt, "zip: archive too short");
  std::size_t end = archive.size() - 22;
  while (get32(archive, end) != kEndSig) {
    if (end == 0) throw Error(ErrorCode::kCorrupt, "zip: no end-of-central-directory record");
    --end;
  }
  const std::uint32_t count = get16(archive, end + 10);
  std::size_t at = get32(archive, end + 16);
  std::vector<Entry> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    if (get32(archive, at) != kCentralSig) throw Error(ErrorCode::kCorrupt, "zip: bad central directory entry");
    if (get16(archive, at + 10) != 0) throw Error(ErrorCode::kCorrupt, "zip: compressed entries are not supported");
    const std::uint32_t crc = get32(archive, at + 16);
    const std::uint32_t size = get32(archive, at + 20);
    const std::uint32_t name_len = get16(archive, at + 28);
    const std::uint32_t extra_len = get16(archive, at + 30);
    const std::uint32_t comment_len = get16(archive, at + 32);
    const std::uint32_t local = get32(archive, at + 42);
    if (at + 46 + name_len > archive.size()) throw Error(ErrorCode::kCorrupt, "zip: truncated name");
    std::string name = archive.substr(at + 46, name_len);
    at += 46 + name_len + extra_len + comment_len;

    if (get32(archive, local) != kLocalSig) throw Error(ErrorCode::kCorrupt, "zip: bad local header for " + name);
    const std::size_t data = local + 30 + get16(archive, local + 26) + get16(archive, local + 28);
    if (data + size > archive.size()) throw Error(ErrorCode::kCorrupt, "zip: truncated data for " + name);
    std::string bytes = archive.substr(data, size);
    if (crc_of(bytes) != crc) throw Error(ErrorCode::kCorrupt, "zip: crc mismatch for " + name);
    entries.emplace_back(std::move(name), std::move(bytes));
  }
  return entries;
}

}  // namespace lfg::zip
