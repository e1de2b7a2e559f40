// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

// Accept loop running one ServerSession per connection.

#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <string>

#include "cipherdenoise/protocol.hpp"
#include "cipherdenoise/random.hpp"
#include "cipherdenoise/server.hpp"
#include "cipherdenoise/transport.hpp"

namespace cipherdenoise {

struct SessionLog {
  std::size_t index = 0;
  std::string session_id;  // hex
  SessionPhase phase = SessionPhase::kAwaitHello;
  CommStats stats;
  std::string error;
};

std::string format_session_log(const SessionLog& log);

/// Runs a session over one connection until it finishes or the peer hangs up.
SessionLog serve_connection(const Server& server, Connection& connection,
                            RandomSource rng);

struct ServeOptions {
  std::size_t max_sessions = 0;  // stop after this many; 0 = no limit
  const std::atomic<bool>* stop = nullptr;
  std::function<void(const SessionLog&)> on_session_end;
  std::function<void(std::uint16_t port)> on_listening;
};

/// Serves concurrent sessions, one thread each, until stopped. Session i
/// draws randomness from rng.derive(i).
void run_server(const Server& server, Listener& listener, const ServeOptions& options,
                const RandomSource& rng);

}  // namespace cipherdenoise
