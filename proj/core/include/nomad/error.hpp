// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nomad {

enum class ErrorCode {
  kInvalidArgument,
  kMultiRoundRecord,
  kEmptyPrompt,
  kEmptyResponse,
  kIoFailure,
  kSchemaViolation,
  kEndpointUnreachable,
  kRateLimited,
  kEndpointProtocol,
  kDimensionMismatch,
  kSideMismatch,
  kEmptyReference,
  kEmptyScores,
  kEmptyMatrix,
  kCorruptHeader,
  kSourceTooSmall,
  kDuplicateId,
  kInvalidConfig,
};

std::string_view to_string(ErrorCode code);

// Coarse classification used by the CLI to pick an exit code.
enum class ErrorCategory { kUsage, kData, kEndpoint };

ErrorCategory category_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  // Message without the leading error-code name.
  const std::string& detail() const noexcept { return detail_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace nomad
