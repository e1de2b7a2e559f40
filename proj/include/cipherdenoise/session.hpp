// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

// Drives a client and server session against each other, either in-process
// through the byte-level frame codec or over a TCP connection.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cipherdenoise/client.hpp"
#include "cipherdenoise/protocol.hpp"
#include "cipherdenoise/server.hpp"
#include "cipherdenoise/transport.hpp"
#include "cipherdenoise/wire.hpp"

namespace cipherdenoise {

enum class Direction : std::uint8_t { kClientToServer, kServerToClient };

struct TranscriptEntry {
  Direction direction = Direction::kClientToServer;
  std::vector<std::uint8_t> bytes;  // the encoded frame

  bool operator==(const TranscriptEntry&) const = default;
};

using Transcript = std::vector<TranscriptEntry>;

/// Frames of one tag, decoded from a transcript.
std::vector<Frame> frames_with_tag(const Transcript& transcript, MessageTag tag);

struct SessionResult {
  bool ok = false;
  IntTensor output;
  CommStats client_stats;
  CommStats server_stats;
  Transcript transcript;
  std::optional<ErrorPayload> error;
};

/// Pumps frames between the two endpoints until both finish.
SessionResult run_loopback(ClientSession& client, ServerSession& server,
                           bool record_transcript = true);

/// Client half over TCP.
SessionResult run_remote(ClientSession& client, Connection& connection,
                         bool record_transcript = false);

struct SessionSeeds {
  std::uint64_t client = 1;
  std::uint64_t server = 2;
};

struct SessionHooks {
  ClientSession::ActObserver on_act;
  ServerSession::LayerObserver on_layer;
};

SessionResult run_session(const Server& server, const PaillierKeypair& keys,
                          const IntTensor& image, Framework framework,
                          SessionSeeds seeds = {}, const SessionHooks& hooks = {});

/// Linear framework: one upload, one download. Throws if the session fails.
SessionResult run_linear_session(const Server& server, const PaillierKeypair& keys,
                                 const IntTensor& image, SessionSeeds seeds = {});

/// Interactive framework: one activation exchange per activation layer.
SessionResult run_nonlinear_session(const Server& server, const PaillierKeypair& keys,
                                    const IntTensor& image, SessionSeeds seeds = {},
                                    const SessionHooks& hooks = {});

}  // namespace cipherdenoise
