// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <ostream>
#include <string>
#include <vector>

namespace cipherdenoise::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitVerification = 2,
  kExitIo = 3,
  kExitProtocol = 4,
};

/// Runs one command line (without the program name). `stop`, if given, ends
/// a running `serve`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::atomic<bool>* stop = nullptr);

}  // namespace cipherdenoise::cli
