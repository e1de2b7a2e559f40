// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "cipherdenoise/client.hpp"

#include <string>

#include "cipherdenoise/decrypt_tensor.hpp"
#include "cipherdenoise/error.hpp"

namespace cipherdenoise {

std::string_view to_string(ClientPhase phase) {
  switch (phase) {
    case ClientPhase::kIdle: return "idle";
    case ClientPhase::kAwaitAck: return "await-ack";
    case ClientPhase::kRunning: return "running";
    case ClientPhase::kDone: return "done";
    case ClientPhase::kFailed: return "failed";
  }
  return "unknown";
}

SignMatrix sign_matrix(const IntTensor& values) {
  SignMatrix s{values.shape, std::vector<std::uint8_t>(values.data.size())};
  for (std::size_t k = 0; k < values.data.size(); ++k) {
    s.bits[k] = values.data[k] >= 0 ? 1 : 0;
  }
  return s;
}

SignMatrix client_act(const PaillierPublicKey& pk, const PaillierPrivateKey& sk,
                      const CipherTensor& perturbed) {
  return sign_matrix(decrypt_tensor(pk, sk, perturbed));
}

ClientSession::ClientSession(PaillierKeypair keys, IntTensor image, ClientOptions options,
                             RandomSource rng)
    : keys_(std::move(keys)),
      image_(std::move(image)),
      options_(std::move(options)),
      rng_(std::move(rng)) {
  if (image_.data.size() != image_.shape.size()) {
    throw Error(ErrorCode::kShapeMismatch, "image data does not match its shape");
  }
}

Frame ClientSession::make_frame(MessageTag tag, std::vector<std::uint8_t> payload) {
  stats_.upload_wire_bytes += kFrameHeaderBytes + payload.size();
  return Frame{tag, id_, std::move(payload)};
}

std::vector<Frame> ClientSession::fail(ErrorCode code, const std::string& message) {
  phase_ = ClientPhase::kFailed;
  error_ = ErrorPayload{static_cast<std::uint16_t>(wire_error_for(code)), message};
  return {make_frame(MessageTag::kError, encode_error(*error_))};
}

Frame ClientSession::hello() {
  if (phase_ != ClientPhase::kIdle) {
    throw Error(ErrorCode::kProtocolOrder, "HELLO already sent");
  }
  HelloPayload h;
  h.model_name = options_.model_name;
  h.frac_bits = static_cast<std::uint16_t>(image_.scale.total_frac_bits);
  h.n = keys_.public_key.n();
  h.g = keys_.public_key.g();
  h.framework = options_.framework;
  phase_ = ClientPhase::kAwaitAck;
  return make_frame(MessageTag::kHello, encode_hello(h));
}

std::vector<Frame> ClientSession::handle(const Frame& frame) {
  if (finished()) return {};
  stats_.download_wire_bytes += kFrameHeaderBytes + frame.payload.size();
  const PaillierPublicKey& pk = keys_.public_key;
  try {
    if (frame.tag == MessageTag::kError) {
      error_ = decode_error(frame.payload);
      phase_ = ClientPhase::kFailed;
      return {};
    }
    if (phase_ == ClientPhase::kAwaitAck && frame.tag == MessageTag::kHelloAck) {
      const HelloAckPayload ack = decode_hello_ack(frame.payload);
      if (ack.input_shape != image_.shape) {
        throw Error(ErrorCode::kShapeMismatch, "server expects input " +
                                                   ack.input_shape.str() + ", image is " +
                                                   image_.shape.str());
      }
      if (options_.framework == Framework::kLinear && !ack.linear) {
        throw Error(ErrorCode::kProtocolError, "server model is not linear");
      }
      id_ = frame.session_id;
      phase_ = ClientPhase::kRunning;
      auto payload = serialize(encrypt_tensor(pk, image_, rng_), pk);
      stats_.upload_bytes += payload.size();
      stats_.enc_image_bytes += payload.size();
      return {make_frame(MessageTag::kEncImage, std::move(payload))};
    }
    if (phase_ == ClientPhase::kRunning && frame.session_id != id_) {
      throw Error(ErrorCode::kProtocolOrder, "frame for a different session");
    }
    if (phase_ == ClientPhase::kRunning && frame.tag == MessageTag::kActRequest) {
      if (options_.framework == Framework::kLinear) {
        throw Error(ErrorCode::kProtocolOrder, "activation request in a linear session");
      }
      auto [layer, perturbed] = decode_act_request(frame.payload, pk);
      stats_.download_bytes += frame.payload.size() - 2;
      stats_.act_request_bytes += frame.payload.size() - 2;
      const IntTensor values = decrypt_tensor(pk, keys_.private_key, perturbed);
      if (observer_) observer_(layer, values);
      auto payload = encode_act_response({layer, sign_matrix(values).bits});
      stats_.upload_bytes += payload.size() - 3;
      stats_.act_response_bytes += payload.size() - 3;
      ++stats_.act_round_trips;
      return {make_frame(MessageTag::kActResponse, std::move(payload))};
    }
    if (phase_ == ClientPhase::kRunning && frame.tag == MessageTag::kResult) {
      const CipherTensor result = deserialize_cipher_tensor(frame.payload, pk);
      stats_.download_bytes += frame.payload.size();
      stats_.result_bytes += frame.payload.size();
      output_ = decrypt_tensor(pk, keys_.private_key, result);
      phase_ = ClientPhase::kDone;
      return {};
    }
    throw Error(ErrorCode::kProtocolOrder,
                std::string(to_string(frame.tag)) + " not expected by client");
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  }
}

const IntTensor& ClientSession::output() const {
  if (!output_) throw Error(ErrorCode::kProtocolOrder, "session produced no result");
  return *output_;
}

RealTensor ClientSession::decoded_output() const { return dequantize_tensor(output()); }

}  // namespace cipherdenoise
