/*
 * Copyright 2026 The attnoie Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace attnoie {

enum class ErrorCode {
  kInvalidArgument,
  kFormat,
  kInvariant,
  // attention file
  kBadMagic,
  kVersionMismatch,
  kMissingRecord,
  kTruncatedRecord,
  kEmptyTensor,
  kLayerUnavailable,
  kMapGap,
  kMapOverlap,
  // search / scoring
  kIndexOutOfRange,
  kMissingHead,
  kRegimeFieldMissing,
  kZeroJoint,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kFormat: return "FormatError";
    case ErrorCode::kInvariant: return "InvariantViolation";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kMissingRecord: return "MissingRecord";
    case ErrorCode::kTruncatedRecord: return "TruncatedRecord";
    case ErrorCode::kEmptyTensor: return "EmptyTensor";
    case ErrorCode::kLayerUnavailable: return "LayerUnavailable";
    case ErrorCode::kMapGap: return "MapGap";
    case ErrorCode::kMapOverlap: return "MapOverlap";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kMissingHead: return "MissingHead";
    case ErrorCode::kRegimeFieldMissing: return "RegimeFieldMissing";
    case ErrorCode::kZeroJoint: return "ZeroJoint";
  }
  return "Unknown";
}

// All library failures are reported through this one exception type; the
// code is what callers (and the CLI exit-status mapping) dispatch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace attnoie
