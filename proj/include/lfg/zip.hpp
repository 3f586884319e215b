// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal ZIP archives with stored (uncompressed) entries. Timestamps are
// fixed at 1980-01-01 so equal inputs give equal bytes.

#pragma once

#include <string>
#include <utility>
#include <vector>

namespace lfg::zip {

using Entry = std::pair<std::string, std::string>;  // name, bytes

std::string write(const std::vector<Entry>& entries);
// Reads archives produced by write(); compressed entries are rejected.
std::vector<Entry> read(const std::string& archive);

}  // namespace lfg::zip
