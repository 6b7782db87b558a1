// SPDX-License-Identifier: Apache-2.0

#include "climbsense/error.hpp"

namespace climbsense {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyRecording: return "EmptyRecording";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MissingState: return "MissingState";
    case ErrorCode::DegenerateTruth: return "DegenerateTruth";
    case ErrorCode::InsufficientOverlap: return "InsufficientOverlap";
    case ErrorCode::InvalidPlan: return "InvalidPlan";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace climbsense
