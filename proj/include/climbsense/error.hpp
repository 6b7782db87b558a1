// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace climbsense {

enum class ErrorCode {
  EmptyRecording,
  InvalidParams,
  DegenerateSample,
  TooFewSamples,
  LengthMismatch,
  MissingState,
  DegenerateTruth,
  InsufficientOverlap,
  InvalidPlan,
  InvalidInput,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Library error. Every failure path in climbsense throws this type; the
/// code identifies the failure class, the message carries context (file,
/// line, sensor) where available.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace climbsense
