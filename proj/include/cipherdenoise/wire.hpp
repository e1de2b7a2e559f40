// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

// Framed wire format shared by the TCP and in-process transports.
//
// Frame: u32 big-endian length of everything after it, u8 tag, 16-byte
// session id, payload. All payload integers are big-endian.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cipherdenoise/bigint.hpp"
#include "cipherdenoise/ciphertensor.hpp"
#include "cipherdenoise/error.hpp"
#include "cipherdenoise/paillier.hpp"
#include "cipherdenoise/tensor.hpp"

namespace cipherdenoise {

inline constexpr std::uint16_t kProtocolVersion = 1;
inline constexpr std::size_t kFrameHeaderBytes = 4 + 1 + 16;
inline constexpr std::uint32_t kMaxFrameBytes = 1U << 30;

enum class MessageTag : std::uint8_t {
  kHello = 1,
  kHelloAck = 2,
  kEncImage = 3,
  kActRequest = 4,
  kActResponse = 5,
  kResult = 6,
  kError = 7,
};

std::string_view to_string(MessageTag tag);

using SessionId = std::array<std::uint8_t, 16>;

struct Frame {
  MessageTag tag = MessageTag::kError;
  SessionId session_id{};
  std::vector<std::uint8_t> payload;

  bool operator==(const Frame&) const = default;
};

std::vector<std::uint8_t> encode_frame(const Frame& frame);
/// Decodes exactly one frame spanning all of `bytes`.
Frame decode_frame(std::span<const std::uint8_t> bytes);

/// Incremental stream decoder: feed arbitrary chunks, pop whole frames.
class FrameDecoder {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  std::optional<Frame> next();
  std::size_t buffered() const { return buffer_.size(); }

 private:
  std::vector<std::uint8_t> buffer_;
};

enum class Framework : std::uint8_t {
  kNonlinear = 0,  // interactive activations allowed
  kLinear = 1,     // client demands the two-exchange linear framework
};

struct HelloPayload {
  std::uint16_t version = kProtocolVersion;
  std::string model_name;
  std::uint16_t frac_bits = 0;
  BigInt n;
  BigInt g;
  Framework framework = Framework::kNonlinear;
};

struct HelloAckPayload {
  bool linear = false;
  std::uint16_t activation_count = 0;
  Shape input_shape;
};

struct ActResponsePayload {
  std::uint16_t layer = 0;
  std::vector<std::uint8_t> bits;  // one 0/1 entry per element
};

// Error codes carried in ERROR frames.
enum class WireError : std::uint16_t {
  kProtocolOrder = 1,
  kMalformed = 2,
  kRefused = 3,
  kBudget = 4,
  kKeyMismatch = 5,
  kInternal = 6,
};

struct ErrorPayload {
  std::uint16_t code = 0;
  std::string message;
};

std::vector<std::uint8_t> encode_hello(const HelloPayload& hello);
HelloPayload decode_hello(std::span<const std::uint8_t> payload);

std::vector<std::uint8_t> encode_hello_ack(const HelloAckPayload& ack);
HelloAckPayload decode_hello_ack(std::span<const std::uint8_t> payload);

std::vector<std::uint8_t> encode_act_request(std::uint16_t layer,
                                             const CipherTensor& features,
                                             const PaillierPublicKey& pk);
std::pair<std::uint16_t, CipherTensor> decode_act_request(
    std::span<const std::uint8_t> payload, const PaillierPublicKey& pk);

/// u16 layer, u8 padding-bit count, then bits packed MSB-first row-major.
std::vector<std::uint8_t> encode_act_response(const ActResponsePayload& response);
ActResponsePayload decode_act_response(std::span<const std::uint8_t> payload,
                                       std::size_t expected_elements);
inline std::size_t act_response_size(std::size_t elements) {
  return (elements + 7) / 8 + 3;
}

std::vector<std::uint8_t> encode_error(const ErrorPayload& error);
ErrorPayload decode_error(std::span<const std::uint8_t> payload);

WireError wire_error_for(ErrorCode code);

}  // namespace cipherdenoise
