// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace edgetrain {

enum class ErrorCode {
  ShapeMismatch,
  InvalidLayer,
  MissingIndices,
  StaleState,
  LabelOutOfRange,
  OutOfRange,
  RegionMismatch,
  RegionOverflow,
  InvalidPlan,
  PlanMismatch,
  EmptyTrace,
  Infeasible,
  ConfigError,
  InvariantViolation,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace edgetrain
