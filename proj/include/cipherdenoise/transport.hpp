// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

// Blocking TCP stream carrying wire frames.

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "cipherdenoise/wire.hpp"

namespace cipherdenoise {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// Parses "host:port" (or ":port").
Endpoint parse_endpoint(const std::string& text);

class Connection {
 public:
  Connection() = default;
  explicit Connection(int fd) : fd_(fd) {}
  Connection(Connection&& other) noexcept;
  Connection& operator=(Connection&& other) noexcept;
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;
  ~Connection();

  bool open() const { return fd_ >= 0; }
  void send(const Frame& frame);
  /// Blocks for the next frame; nullopt on orderly close between frames.
  std::optional<Frame> receive();
  void set_timeout_ms(int ms);
  void close();

 private:
  int fd_ = -1;
  FrameDecoder decoder_;
};

Connection connect_tcp(const Endpoint& endpoint);

class Listener {
 public:
  explicit Listener(const Endpoint& endpoint);
  Listener(Listener&& other) noexcept;
  Listener& operator=(Listener&&) = delete;
  Listener(const Listener&) = delete;
  ~Listener();

  std::uint16_t port() const { return port_; }
  /// Waits up to timeout_ms; nullopt on timeout.
  std::optional<Connection> accept(int timeout_ms);

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace cipherdenoise
