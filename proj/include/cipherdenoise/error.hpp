// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cipherdenoise {

enum class ErrorCode {
  kKeygenFailure,
  kDomainError,
  kMalformedCiphertext,
  kKeyMismatch,
  kEncodeOverflow,
  kOverflowBudget,
  kShapeMismatch,
  kScaleMismatch,
  kProtocolOrder,
  kProtocolError,
  kParseError,
  kIoError,
  kTrainingError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cipherdenoise
