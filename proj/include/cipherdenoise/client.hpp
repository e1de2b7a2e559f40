// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

// Data owner's side of a session: encrypts the image, answers activation
// requests with sign bits, decrypts the result.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cipherdenoise/ciphertensor.hpp"
#include "cipherdenoise/paillier_private.hpp"
#include "cipherdenoise/protocol.hpp"
#include "cipherdenoise/random.hpp"
#include "cipherdenoise/tensor.hpp"
#include "cipherdenoise/wire.hpp"

namespace cipherdenoise {

/// S_u[k] = 1 iff the decrypted, center-lifted value is >= 0.
SignMatrix sign_matrix(const IntTensor& values);

/// Decrypts C_per and returns its sign matrix.
SignMatrix client_act(const PaillierPublicKey& pk, const PaillierPrivateKey& sk,
                      const CipherTensor& perturbed);

struct ClientOptions {
  Framework framework = Framework::kNonlinear;
  std::string model_name;  // empty accepts whatever the server hosts
};

enum class ClientPhase {
  kIdle,
  kAwaitAck,
  kRunning,
  kDone,
  kFailed,
};

std::string_view to_string(ClientPhase phase);

class ClientSession {
 public:
  /// Receives each decrypted ACT payload; the only mid-session plaintext a
  /// client ever sees.
  using ActObserver = std::function<void(std::uint16_t layer, const IntTensor& values)>;

  /// `image` must already be quantized; its scale sets frac_bits.
  ClientSession(PaillierKeypair keys, IntTensor image, ClientOptions options,
                RandomSource rng);

  Frame hello();
  /// Returns the frames to send in reply (empty once finished).
  std::vector<Frame> handle(const Frame& frame);

  ClientPhase phase() const { return phase_; }
  bool finished() const {
    return phase_ == ClientPhase::kDone || phase_ == ClientPhase::kFailed;
  }
  const std::optional<ErrorPayload>& error() const { return error_; }
  const CommStats& stats() const { return stats_; }
  const SessionId& session_id() const { return id_; }
  const PaillierPublicKey& public_key() const { return keys_.public_key; }

  /// Center-lifted integers of the decrypted RESULT.
  const IntTensor& output() const;
  RealTensor decoded_output() const;

  void set_act_observer(ActObserver observer) { observer_ = std::move(observer); }

 private:
  Frame make_frame(MessageTag tag, std::vector<std::uint8_t> payload);
  std::vector<Frame> fail(ErrorCode code, const std::string& message);

  PaillierKeypair keys_;
  IntTensor image_;
  ClientOptions options_;
  RandomSource rng_;
  ClientPhase phase_ = ClientPhase::kIdle;
  SessionId id_{};
  std::optional<IntTensor> output_;
  std::optional<ErrorPayload> error_;
  CommStats stats_;
  ActObserver observer_;
};

}  // namespace cipherdenoise
