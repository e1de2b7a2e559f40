// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "cipherdenoise/session.hpp"

#include <deque>
#include <string>

#include "cipherdenoise/error.hpp"

namespace cipherdenoise {

std::vector<Frame> frames_with_tag(const Transcript& transcript, MessageTag tag) {
  std::vector<Frame> out;
  for (const auto& entry : transcript) {
    Frame f = decode_frame(entry.bytes);
    if (f.tag == tag) out.push_back(std::move(f));
  }
  return out;
}

namespace {

// One direction of the in-process pipe: frames are encoded to bytes and
// re-parsed by a stream decoder, as a socket would see them.
class Pipe {
 public:
  Pipe(Direction direction, Transcript* transcript)
      : direction_(direction), transcript_(transcript) {}

  void push(const Frame& frame) {
    auto bytes = encode_frame(frame);
    decoder_.feed(bytes);
    if (transcript_ != nullptr) transcript_->push_back({direction_, std::move(bytes)});
  }
  std::optional<Frame> pop() { return decoder_.next(); }

 private:
  Direction direction_;
  Transcript* transcript_;
  FrameDecoder decoder_;
};

SessionResult collect(const ClientSession& client) {
  SessionResult result;
  result.client_stats = client.stats();
  result.ok = client.phase() == ClientPhase::kDone;
  if (result.ok) result.output = client.output();
  result.error = client.error();
  return result;
}

}  // namespace

SessionResult run_loopback(ClientSession& client, ServerSession& server,
                           bool record_transcript) {
  Transcript transcript;
  Transcript* log = record_transcript ? &transcript : nullptr;
  Pipe up(Direction::kClientToServer, log);
  Pipe down(Direction::kServerToClient, log);
  up.push(client.hello());
  bool progressed = true;
  while (progressed) {
    progressed = false;
    while (auto frame = up.pop()) {
      progressed = true;
      if (server.finished()) continue;
      for (const Frame& reply : server.handle(*frame)) down.push(reply);
    }
    while (auto frame = down.pop()) {
      progressed = true;
      for (const Frame& reply : client.handle(*frame)) up.push(reply);
    }
  }
  SessionResult result = collect(client);
  result.server_stats = server.stats();
  if (!result.error && server.error()) result.error = server.error();
  result.transcript = std::move(transcript);
  return result;
}

SessionResult run_remote(ClientSession& client, Connection& connection,
                         bool record_transcript) {
  Transcript transcript;
  auto send = [&](const Frame& frame) {
    if (record_transcript) {
      transcript.push_back({Direction::kClientToServer, encode_frame(frame)});
    }
    connection.send(frame);
  };
  send(client.hello());
  while (!client.finished()) {
    auto frame = connection.receive();
    if (!frame) {
      throw Error(ErrorCode::kProtocolError,
                  "server closed the connection during the session");
    }
    if (record_transcript) {
      transcript.push_back({Direction::kServerToClient, encode_frame(*frame)});
    }
    for (const Frame& reply : client.handle(*frame)) send(reply);
  }
  SessionResult result = collect(client);
  result.transcript = std::move(transcript);
  return result;
}

SessionResult run_session(const Server& server, const PaillierKeypair& keys,
                          const IntTensor& image, Framework framework, SessionSeeds seeds,
                          const SessionHooks& hooks) {
  ClientOptions options;
  options.framework = framework;
  options.model_name = server.spec().name;
  ClientSession client(keys, image, options, RandomSource(seeds.client));
  ServerSession session = server.open_session(RandomSource(seeds.server));
  if (hooks.on_act) client.set_act_observer(hooks.on_act);
  if (hooks.on_layer) session.set_layer_observer(hooks.on_layer);
  return run_loopback(client, session);
}

namespace {

SessionResult require_ok(SessionResult result) {
  if (!result.ok) {
    const std::string reason = result.error ? result.error->message : "no result";
    throw Error(ErrorCode::kProtocolError, "session failed: " + reason);
  }
  return result;
}

}  // namespace

SessionResult run_linear_session(const Server& server, const PaillierKeypair& keys,
                                 const IntTensor& image, SessionSeeds seeds) {
  return require_ok(run_session(server, keys, image, Framework::kLinear, seeds));
}

SessionResult run_nonlinear_session(const Server& server, const PaillierKeypair& keys,
                                    const IntTensor& image, SessionSeeds seeds,
                                    const SessionHooks& hooks) {
  return require_ok(run_session(server, keys, image, Framework::kNonlinear, seeds, hooks));
}

}  // namespace cipherdenoise
