// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "cipherdenoise/server.hpp"

#include <cmath>
#include <string>

#include "cipherdenoise/error.hpp"

namespace cipherdenoise {

std::string_view to_string(SessionPhase phase) {
  switch (phase) {
    case SessionPhase::kAwaitHello: return "await-hello";
    case SessionPhase::kAwaitImage: return "await-image";
    case SessionPhase::kAwaitActivation: return "await-activation";
    case SessionPhase::kDone: return "done";
    case SessionPhase::kAborted: return "aborted";
  }
  return "unknown";
}

Server::Server(ModelSpec model, ServerConfig config) {
  auto shared = std::make_shared<Shared>();
  shared->model = quantize_model(model);
  shared->spec = std::move(model);
  shared->config = config;
  if (config.perturbation_bound == 0) {
    throw Error(ErrorCode::kDomainError, "perturbation bound must be positive");
  }
  shared->keep_output.assign(shared->spec.layers.size(), false);
  for (const auto& layer : shared->spec.layers) {
    if (layer.kind == LayerKind::kResidualAdd && layer.source >= 0) {
      shared->keep_output[static_cast<std::size_t>(layer.source)] = true;
    }
  }
  shared_ = std::move(shared);
}

ServerSession Server::open_session(RandomSource rng) const {
  return ServerSession(shared_, std::move(rng));
}

ServerSession::ServerSession(std::shared_ptr<const Server::Shared> shared,
                             RandomSource rng)
    : shared_(std::move(shared)), rng_(std::move(rng)) {}

Frame ServerSession::make_frame(MessageTag tag, std::vector<std::uint8_t> payload) {
  stats_.download_wire_bytes += kFrameHeaderBytes + payload.size();
  return Frame{tag, id_, std::move(payload)};
}

Frame ServerSession::fail(WireError code, const std::string& message) {
  phase_ = SessionPhase::kAborted;
  error_ = ErrorPayload{static_cast<std::uint16_t>(code), message};
  pending_.reset();
  return make_frame(MessageTag::kError, encode_error(*error_));
}

std::vector<Frame> ServerSession::handle(const Frame& frame) {
  if (finished()) {
    // A finished session answers nothing but ERROR.
    return {Frame{MessageTag::kError, id_,
                  encode_error({static_cast<std::uint16_t>(WireError::kProtocolOrder),
                                "session already " + std::string(to_string(phase_))})}};
  }
  stats_.upload_wire_bytes += kFrameHeaderBytes + frame.payload.size();
  try {
    if (phase_ != SessionPhase::kAwaitHello && frame.session_id != id_) {
      throw Error(ErrorCode::kProtocolOrder, "unknown session id");
    }
    if (frame.tag == MessageTag::kError) {
      const ErrorPayload e = decode_error(frame.payload);
      phase_ = SessionPhase::kAborted;
      error_ = e;
      return {};
    }
    switch (phase_) {
      case SessionPhase::kAwaitHello:
        if (frame.tag == MessageTag::kHello) return on_hello(frame);
        break;
      case SessionPhase::kAwaitImage:
        if (frame.tag == MessageTag::kEncImage) return on_image(frame);
        break;
      case SessionPhase::kAwaitActivation:
        if (frame.tag == MessageTag::kActResponse) return on_activation(frame);
        break;
      default:
        break;
    }
    throw Error(ErrorCode::kProtocolOrder, std::string(to_string(frame.tag)) +
                                               " not expected while " +
                                               std::string(to_string(phase_)));
  } catch (const Error& e) {
    return {fail(wire_error_for(e.code()), e.what())};
  } catch (const std::exception& e) {
    return {fail(WireError::kInternal, e.what())};
  }
}

std::vector<Frame> ServerSession::on_hello(const Frame& frame) {
  const HelloPayload hello = decode_hello(frame.payload);
  const auto& spec = shared_->spec;
  const auto& config = shared_->config;
  if (hello.version != kProtocolVersion) {
    throw Error(ErrorCode::kProtocolError,
                "unsupported protocol version " + std::to_string(hello.version));
  }
  if (!hello.model_name.empty() && hello.model_name != spec.name) {
    throw Error(ErrorCode::kProtocolError, "server hosts model '" + spec.name +
                                               "', not '" + hello.model_name + "'");
  }
  if (hello.frac_bits != spec.frac_bits_input) {
    throw Error(ErrorCode::kScaleMismatch,
                "model expects frac_bits " + std::to_string(spec.frac_bits_input));
  }
  PaillierPublicKey pk(hello.n, hello.g);
  if (pk.bits() < config.min_key_bits) {
    throw Error(ErrorCode::kOverflowBudget,
                "key has " + std::to_string(pk.bits()) + " bits; server requires " +
                    std::to_string(config.min_key_bits));
  }
  if (hello.framework == Framework::kLinear && !spec.linear()) {
    phase_ = SessionPhase::kAborted;
    error_ = ErrorPayload{static_cast<std::uint16_t>(WireError::kRefused),
                          "model '" + spec.name +
                              "' has activations; linear framework unavailable"};
    return {make_frame(MessageTag::kError, encode_error(*error_))};
  }
  BudgetOptions budget;
  budget.input_bound = config.input_bound;
  budget.perturbation_bits = static_cast<int>(
      std::ceil(std::log2(static_cast<double>(config.perturbation_bound))));
  overflow_budget(spec, FixedPointParams{spec.frac_bits_input, pk.n()}, budget);

  rng_.fill(id_);
  pk_ = std::move(pk);
  phase_ = SessionPhase::kAwaitImage;
  HelloAckPayload ack;
  ack.linear = spec.linear();
  ack.activation_count = static_cast<std::uint16_t>(spec.activation_count());
  ack.input_shape = spec.input_shape;
  return {make_frame(MessageTag::kHelloAck, encode_hello_ack(ack))};
}

std::vector<Frame> ServerSession::on_image(const Frame& frame) {
  const auto& model = shared_->model;
  CipherTensor image = deserialize_cipher_tensor(frame.payload, *pk_);
  if (image.shape != model.input_shape) {
    throw Error(ErrorCode::kShapeMismatch, "image shape " + image.shape.str() +
                                               " differs from model input " +
                                               model.input_shape.str());
  }
  if (image.scale != ScaleTag{model.frac_bits_input}) {
    throw Error(ErrorCode::kScaleMismatch, "image not encoded at the model's frac_bits");
  }
  stats_.upload_bytes += frame.payload.size();
  stats_.enc_image_bytes += frame.payload.size();
  input_ = image;
  current_ = std::move(image);
  outputs_.assign(model.layers.size(), std::nullopt);
  layer_ = 0;
  return advance();
}

PerturbanceMatrix ServerSession::next_perturbation(const Shape& shape) {
  const auto& config = shared_->config;
  switch (config.perturbation) {
    case PerturbationMode::kNone:
      return perturbation_from_values(shape, std::vector<std::int64_t>(shape.size(), 1));
    case PerturbationMode::kFixed: {
      RandomSource fixed = RandomSource(config.fixed_perturbation_seed).derive(layer_);
      return sample_perturbation(shape, config.perturbation_bound, fixed);
    }
    case PerturbationMode::kRandom:
      break;
  }
  return sample_perturbation(shape, config.perturbation_bound, rng_);
}

void ServerSession::finish_layer(CipherTensor out) {
  const auto& layer = shared_->model.layers[layer_];
  if (layer.bias.size() > 0) out = bias_add_enc(*pk_, out, layer.bias);
  if (observer_) observer_(layer_, out);
  if (shared_->keep_output[layer_]) outputs_[layer_] = out;
  current_ = std::move(out);
  ++layer_;
}

std::vector<Frame> ServerSession::advance() {
  const auto& model = shared_->model;
  const PaillierPublicKey& pk = *pk_;
  while (layer_ < model.layers.size()) {
    const QuantizedLayer& layer = model.layers[layer_];
    switch (layer.kind) {
      case LayerKind::kConv:
        finish_layer(conv2d_enc(pk, current_, layer.kernel, layer.conv, rng_));
        break;
      case LayerKind::kConvTranspose:
        finish_layer(conv2d_transpose_enc(pk, current_, layer.kernel, layer.conv));
        break;
      case LayerKind::kLinear:
        finish_layer(linear_enc(pk, current_, layer.matrix));
        break;
      case LayerKind::kResidualAdd: {
        const CipherTensor& src =
            layer.source < 0 ? input_ : *outputs_[static_cast<std::size_t>(layer.source)];
        finish_layer(add_enc(pk, align_scale(pk, current_, layer.out_scale),
                             align_scale(pk, src, layer.out_scale)));
        break;
      }
      case LayerKind::kRelu:
      case LayerKind::kLeakyRelu: {
        pending_ = next_perturbation(current_.shape);
        const CipherTensor perturbed = server_perturb(pk, current_, *pending_);
        auto payload = encode_act_request(static_cast<std::uint16_t>(layer_), perturbed, pk);
        stats_.download_bytes += payload.size() - 2;
        stats_.act_request_bytes += payload.size() - 2;
        phase_ = SessionPhase::kAwaitActivation;
        return {make_frame(MessageTag::kActRequest, std::move(payload))};
      }
    }
  }
  CipherTensor result = rerandomize_tensor(pk, current_, rng_);
  auto payload = serialize(result, pk);
  stats_.download_bytes += payload.size();
  stats_.result_bytes += payload.size();
  phase_ = SessionPhase::kDone;
  return {make_frame(MessageTag::kResult, std::move(payload))};
}

std::vector<Frame> ServerSession::on_activation(const Frame& frame) {
  const ActResponsePayload response = decode_act_response(frame.payload, current_.size());
  if (response.layer != layer_) {
    throw Error(ErrorCode::kProtocolOrder,
                "activation for layer " + std::to_string(response.layer) +
                    ", expected " + std::to_string(layer_));
  }
  stats_.upload_bytes += frame.payload.size() - 3;
  stats_.act_response_bytes += frame.payload.size() - 3;
  ++stats_.act_round_trips;
  const QuantizedLayer& layer = shared_->model.layers[layer_];
  const SignMatrix client{current_.shape, response.bits};
  const PerturbanceMatrix m = std::move(*pending_);
  pending_.reset();
  if (layer.kind == LayerKind::kRelu) {
    finish_layer(server_combine_and_activate(*pk_, current_, client, m, rng_));
  } else {
    finish_layer(server_activate_leaky(*pk_, current_, combine_signs(client, m),
                                       layer.alpha, layer.alpha_bits, rng_));
  }
  return advance();
}

}  // namespace cipherdenoise
