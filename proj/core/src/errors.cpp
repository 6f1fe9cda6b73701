// Copyright 2026 The edgetrain Authors
// SPDX-License-Identifier: Apache-2.0

#include "edgetrain/errors.hpp"

namespace edgetrain {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidLayer: return "InvalidLayer";
    case ErrorCode::MissingIndices: return "MissingIndices";
    case ErrorCode::StaleState: return "StaleState";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::RegionMismatch: return "RegionMismatch";
    case ErrorCode::RegionOverflow: return "RegionOverflow";
    case ErrorCode::InvalidPlan: return "InvalidPlan";
    case ErrorCode::PlanMismatch: return "PlanMismatch";
    case ErrorCode::EmptyTrace: return "EmptyTrace";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace edgetrain
