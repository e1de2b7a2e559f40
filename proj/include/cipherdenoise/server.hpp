// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

// Model owner's side of a session. Holds the client's public key only.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "cipherdenoise/budget.hpp"
#include "cipherdenoise/ciphertensor.hpp"
#include "cipherdenoise/model.hpp"
#include "cipherdenoise/paillier.hpp"
#include "cipherdenoise/protocol.hpp"
#include "cipherdenoise/random.hpp"
#include "cipherdenoise/wire.hpp"

namespace cipherdenoise {

enum class PerturbationMode {
  kRandom,  // fresh M per activation per session
  kFixed,   // one M per activation layer, reused across sessions
  kNone,    // M = 1; clean-feature counterfactual for the attack experiment
};

struct ServerConfig {
  std::uint64_t perturbation_bound = kDefaultPerturbationBound;
  PerturbationMode perturbation = PerturbationMode::kRandom;
  std::uint64_t fixed_perturbation_seed = 0;
  std::size_t min_key_bits = 0;
  double input_bound = 1.0;
};

enum class SessionPhase {
  kAwaitHello,
  kAwaitImage,
  kAwaitActivation,
  kDone,
  kAborted,
};

std::string_view to_string(SessionPhase phase);

class ServerSession;

class Server {
 public:
  explicit Server(ModelSpec model, ServerConfig config = {});

  const ModelSpec& spec() const { return shared_->spec; }
  const QuantizedModel& model() const { return shared_->model; }
  const ServerConfig& config() const { return shared_->config; }

  ServerSession open_session(RandomSource rng) const;

 private:
  struct Shared {
    ModelSpec spec;
    QuantizedModel model;
    ServerConfig config;
    std::vector<bool> keep_output;  // outputs later used as residual sources
  };
  std::shared_ptr<const Shared> shared_;

  friend class ServerSession;
};

class ServerSession {
 public:
  using LayerObserver = std::function<void(std::size_t layer, const CipherTensor&)>;

  /// Processes one inbound frame; returns the frames to send back. Errors
  /// become a single ERROR frame and abort the session.
  std::vector<Frame> handle(const Frame& frame);

  SessionPhase phase() const { return phase_; }
  bool finished() const {
    return phase_ == SessionPhase::kDone || phase_ == SessionPhase::kAborted;
  }
  const SessionId& id() const { return id_; }
  const CommStats& stats() const { return stats_; }
  const std::optional<ErrorPayload>& error() const { return error_; }
  const std::optional<PaillierPublicKey>& public_key() const { return pk_; }

  /// Sees every layer output as ciphertext, in order.
  void set_layer_observer(LayerObserver observer) { observer_ = std::move(observer); }

 private:
  friend class Server;
  ServerSession(std::shared_ptr<const Server::Shared> shared, RandomSource rng);

  std::vector<Frame> on_hello(const Frame& frame);
  std::vector<Frame> on_image(const Frame& frame);
  std::vector<Frame> on_activation(const Frame& frame);
  std::vector<Frame> advance();
  void finish_layer(CipherTensor out);
  PerturbanceMatrix next_perturbation(const Shape& shape);
  Frame make_frame(MessageTag tag, std::vector<std::uint8_t> payload);
  Frame fail(WireError code, const std::string& message);

  std::shared_ptr<const Server::Shared> shared_;
  RandomSource rng_;
  SessionPhase phase_ = SessionPhase::kAwaitHello;
  SessionId id_{};
  std::optional<PaillierPublicKey> pk_;
  std::size_t layer_ = 0;
  CipherTensor input_;
  CipherTensor current_;
  std::vector<std::optional<CipherTensor>> outputs_;
  std::optional<PerturbanceMatrix> pending_;
  CommStats stats_;
  std::optional<ErrorPayload> error_;
  LayerObserver observer_;
};

}  // namespace cipherdenoise
