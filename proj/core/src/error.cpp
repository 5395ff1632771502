// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#include "nomad/error.hpp"

namespace nomad {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMultiRoundRecord: return "MultiRoundRecord";
    case ErrorCode::kEmptyPrompt: return "EmptyPrompt";
    case ErrorCode::kEmptyResponse: return "EmptyResponse";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kEndpointUnreachable: return "EndpointUnreachable";
    case ErrorCode::kRateLimited: return "RateLimited";
    case ErrorCode::kEndpointProtocol: return "EndpointProtocol";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kSideMismatch: return "SideMismatch";
    case ErrorCode::kEmptyReference: return "EmptyReference";
    case ErrorCode::kEmptyScores: return "EmptyScores";
    case ErrorCode::kEmptyMatrix: return "EmptyMatrix";
    case ErrorCode::kCorruptHeader: return "CorruptHeader";
    case ErrorCode::kSourceTooSmall: return "SourceTooSmall";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidConfig:
      return ErrorCategory::kUsage;
    case ErrorCode::kEndpointUnreachable:
    case ErrorCode::kRateLimited:
    case ErrorCode::kEndpointProtocol:
      return ErrorCategory::kEndpoint;
    default:
      return ErrorCategory::kData;
  }
}

}  // namespace nomad
