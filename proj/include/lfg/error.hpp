// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lfg {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kDomain,
  kNonFinite,
  kNotFound,
  kConflict,
  kIo,
  kCorrupt,
};

std::string_view to_string(ErrorCode code);

// Single exception type used across the library. `field` names the offending
// config field, parameter, or file when one applies.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

}  // namespace lfg
