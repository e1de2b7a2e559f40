// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "cipherdenoise/error.hpp"

namespace cipherdenoise {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kKeygenFailure: return "keygen-failure";
    case ErrorCode::kDomainError: return "domain-error";
    case ErrorCode::kMalformedCiphertext: return "malformed-ciphertext";
    case ErrorCode::kKeyMismatch: return "key-mismatch";
    case ErrorCode::kEncodeOverflow: return "encode-overflow";
    case ErrorCode::kOverflowBudget: return "overflow-budget-error";
    case ErrorCode::kShapeMismatch: return "shape-mismatch";
    case ErrorCode::kScaleMismatch: return "scale-mismatch";
    case ErrorCode::kProtocolOrder: return "protocol-order-violation";
    case ErrorCode::kProtocolError: return "protocol-error";
    case ErrorCode::kParseError: return "parse-error";
    case ErrorCode::kIoError: return "io-error";
    case ErrorCode::kTrainingError: return "training-error";
  }
  return "unknown-error";
}

}  // namespace cipherdenoise
