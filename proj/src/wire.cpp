// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "cipherdenoise/wire.hpp"

#include <algorithm>

#include "cipherdenoise/bytes.hpp"

namespace cipherdenoise {
namespace {

void put_bigint(ByteWriter& w, const BigInt& v) {
  const auto bytes = to_bytes(v);
  w.u32(static_cast<std::uint32_t>(bytes.size()));
  w.raw(bytes);
}

BigInt get_bigint(ByteReader& r) {
  const std::uint32_t len = r.u32();
  return from_bytes(r.take(len));
}

}  // namespace

std::string_view to_string(MessageTag tag) {
  switch (tag) {
    case MessageTag::kHello: return "HELLO";
    case MessageTag::kHelloAck: return "HELLO_ACK";
    case MessageTag::kEncImage: return "ENC_IMAGE";
    case MessageTag::kActRequest: return "ACT_REQUEST";
    case MessageTag::kActResponse: return "ACT_RESPONSE";
    case MessageTag::kResult: return "RESULT";
    case MessageTag::kError: return "ERROR";
  }
  return "UNKNOWN";
}

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
  const std::size_t body = 1 + frame.session_id.size() + frame.payload.size();
  if (body > kMaxFrameBytes) {
    throw Error(ErrorCode::kProtocolError, "frame exceeds maximum size");
  }
  ByteWriter w;
  w.buffer().reserve(4 + body);
  w.u32(static_cast<std::uint32_t>(body));
  w.u8(static_cast<std::uint8_t>(frame.tag));
  w.raw(frame.session_id);
  w.raw(frame.payload);
  return w.take();
}

namespace {

Frame parse_body(std::span<const std::uint8_t> body) {
  ByteReader r(body);
  const std::uint8_t tag = r.u8();
  if (tag < static_cast<std::uint8_t>(MessageTag::kHello) ||
      tag > static_cast<std::uint8_t>(MessageTag::kError)) {
    throw Error(ErrorCode::kProtocolError, "unknown message tag " + std::to_string(tag));
  }
  Frame frame;
  frame.tag = static_cast<MessageTag>(tag);
  const auto sid = r.take(16);
  std::copy(sid.begin(), sid.end(), frame.session_id.begin());
  const auto rest = r.rest();
  frame.payload.assign(rest.begin(), rest.end());
  return frame;
}

std::uint32_t read_length(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes.first(4));
  const std::uint32_t len = r.u32();
  if (len < 17 || len > kMaxFrameBytes) {
    throw Error(ErrorCode::kProtocolError, "invalid frame length " + std::to_string(len));
  }
  return len;
}

}  // namespace

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameHeaderBytes) {
    throw Error(ErrorCode::kProtocolError, "frame shorter than its header");
  }
  const std::uint32_t len = read_length(bytes);
  if (bytes.size() != 4 + static_cast<std::size_t>(len)) {
    throw Error(ErrorCode::kProtocolError, "frame length prefix does not match");
  }
  return parse_body(bytes.subspan(4));
}

void FrameDecoder::feed(std::span<const std::uint8_t> bytes) {
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<Frame> FrameDecoder::next() {
  if (buffer_.size() < 4) return std::nullopt;
  const std::uint32_t len = read_length(buffer_);
  if (buffer_.size() < 4 + static_cast<std::size_t>(len)) return std::nullopt;
  Frame frame = parse_body(std::span(buffer_).subspan(4, len));
  buffer_.erase(buffer_.begin(), buffer_.begin() + 4 + len);
  return frame;
}

std::vector<std::uint8_t> encode_hello(const HelloPayload& hello) {
  ByteWriter w;
  w.u16(hello.version);
  if (hello.model_name.size() > 0xffff) {
    throw Error(ErrorCode::kProtocolError, "model name too long");
  }
  w.u16(static_cast<std::uint16_t>(hello.model_name.size()));
  w.raw(std::string_view(hello.model_name));
  w.u16(hello.frac_bits);
  put_bigint(w, hello.n);
  put_bigint(w, hello.g);
  w.u8(static_cast<std::uint8_t>(hello.framework));
  return w.take();
}

HelloPayload decode_hello(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  HelloPayload h;
  h.version = r.u16();
  h.model_name = r.text(r.u16());
  h.frac_bits = r.u16();
  h.n = get_bigint(r);
  h.g = get_bigint(r);
  const std::uint8_t fw = r.u8();
  if (fw > 1) throw Error(ErrorCode::kParseError, "unknown framework request");
  h.framework = static_cast<Framework>(fw);
  r.expect_end();
  return h;
}

std::vector<std::uint8_t> encode_hello_ack(const HelloAckPayload& ack) {
  ByteWriter w;
  w.u8(ack.linear ? 1 : 0);
  w.u16(ack.activation_count);
  w.u32(static_cast<std::uint32_t>(ack.input_shape.channels));
  w.u32(static_cast<std::uint32_t>(ack.input_shape.height));
  w.u32(static_cast<std::uint32_t>(ack.input_shape.width));
  return w.take();
}

HelloAckPayload decode_hello_ack(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  HelloAckPayload a;
  a.linear = r.u8() != 0;
  a.activation_count = r.u16();
  a.input_shape.channels = r.u32();
  a.input_shape.height = r.u32();
  a.input_shape.width = r.u32();
  r.expect_end();
  return a;
}

std::vector<std::uint8_t> encode_act_request(std::uint16_t layer,
                                             const CipherTensor& features,
                                             const PaillierPublicKey& pk) {
  ByteWriter w;
  w.u16(layer);
  auto out = w.take();
  out.reserve(out.size() + serialized_size(features.shape, pk));
  serialize_into(features, pk, out);
  return out;
}

std::pair<std::uint16_t, CipherTensor> decode_act_request(
    std::span<const std::uint8_t> payload, const PaillierPublicKey& pk) {
  ByteReader r(payload);
  const std::uint16_t layer = r.u16();
  return {layer, deserialize_cipher_tensor(r.rest(), pk)};
}

std::vector<std::uint8_t> encode_act_response(const ActResponsePayload& response) {
  const std::size_t count = response.bits.size();
  const std::size_t packed = (count + 7) / 8;
  ByteWriter w;
  w.u16(response.layer);
  w.u8(static_cast<std::uint8_t>(packed * 8 - count));
  auto out = w.take();
  out.resize(out.size() + packed, 0);
  std::uint8_t* body = out.data() + 3;
  for (std::size_t i = 0; i < count; ++i) {
    if (response.bits[i] > 1) {
      throw Error(ErrorCode::kDomainError, "sign matrix entries must be 0 or 1");
    }
    if (response.bits[i] != 0) body[i / 8] |= static_cast<std::uint8_t>(0x80U >> (i % 8));
  }
  return out;
}

ActResponsePayload decode_act_response(std::span<const std::uint8_t> payload,
                                       std::size_t expected_elements) {
  ByteReader r(payload);
  ActResponsePayload resp;
  resp.layer = r.u16();
  const std::uint8_t pad = r.u8();
  const auto body = r.rest();
  if (body.size() != (expected_elements + 7) / 8 ||
      pad != body.size() * 8 - expected_elements) {
    throw Error(ErrorCode::kParseError,
                "sign matrix carries " + std::to_string(body.size() * 8 - pad) +
                    " bits, expected " + std::to_string(expected_elements));
  }
  resp.bits.resize(expected_elements);
  for (std::size_t i = 0; i < expected_elements; ++i) {
    resp.bits[i] = (body[i / 8] >> (7 - i % 8)) & 1U;
  }
  for (std::size_t i = expected_elements; i < body.size() * 8; ++i) {
    if ((body[i / 8] >> (7 - i % 8)) & 1U) {
      throw Error(ErrorCode::kParseError, "nonzero padding bits in sign matrix");
    }
  }
  return resp;
}

std::vector<std::uint8_t> encode_error(const ErrorPayload& error) {
  ByteWriter w;
  w.u16(error.code);
  w.raw(std::string_view(error.message));
  return w.take();
}

ErrorPayload decode_error(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  ErrorPayload e;
  e.code = r.u16();
  e.message = r.text(r.remaining());
  return e;
}

WireError wire_error_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kProtocolOrder: return WireError::kProtocolOrder;
    case ErrorCode::kParseError:
    case ErrorCode::kProtocolError:
    case ErrorCode::kMalformedCiphertext:
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kScaleMismatch: return WireError::kMalformed;
    case ErrorCode::kOverflowBudget: return WireError::kBudget;
    case ErrorCode::kKeyMismatch: return WireError::kKeyMismatch;
    default: return WireError::kInternal;
  }
}

}  // namespace cipherdenoise
