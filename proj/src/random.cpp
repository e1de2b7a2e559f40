// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "cipherdenoise/random.hpp"

#include <sodium.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "cipherdenoise/error.hpp"

namespace cipherdenoise {
namespace {

void ensure_sodium() {
  static const bool ready = [] { return sodium_init() >= 0; }();
  if (!ready) throw Error(ErrorCode::kDomainError, "libsodium failed to initialize");
}

RandomSource::Key hash_key(std::span<const std::uint8_t> material) {
  ensure_sodium();
  RandomSource::Key key{};
  crypto_hash_sha256(key.data(), material.data(), material.size());
  return key;
}

}  // namespace

RandomSource::RandomSource(std::uint64_t seed) {
  static constexpr std::string_view kDomain = "cipherdenoise/seed";
  std::vector<std::uint8_t> material(kDomain.begin(), kDomain.end());
  for (int i = 0; i < 8; ++i) {
    material.push_back(static_cast<std::uint8_t>(seed >> (8 * i)));
  }
  key_ = hash_key(material);
}

RandomSource::RandomSource(const Key& key) : key_(key) { ensure_sodium(); }

RandomSource RandomSource::from_entropy() {
  ensure_sodium();
  Key key{};
  randombytes_buf(key.data(), key.size());
  return RandomSource(key);
}

RandomSource RandomSource::derive(std::string_view label) const {
  std::vector<std::uint8_t> material(key_.begin(), key_.end());
  material.insert(material.end(), label.begin(), label.end());
  return RandomSource(hash_key(material));
}

RandomSource RandomSource::derive(std::uint64_t index) const {
  std::string label = "#";
  for (int i = 0; i < 8; ++i) label.push_back(static_cast<char>(index >> (8 * i)));
  return derive(label);
}

void RandomSource::refill() {
  static constexpr std::array<std::uint8_t, 64> kZeros{};
  static constexpr std::array<std::uint8_t, crypto_stream_chacha20_NONCEBYTES>
      kNonce{};
  crypto_stream_chacha20_xor_ic(block_.data(), kZeros.data(), kZeros.size(),
                                kNonce.data(), counter_++, key_.data());
  used_ = 0;
}

void RandomSource::fill(std::span<std::uint8_t> out) {
  for (auto& byte : out) {
    if (used_ == block_.size()) refill();
    byte = block_[used_++];
  }
}

std::uint64_t RandomSource::next_u64() {
  std::array<std::uint8_t, 8> buf{};
  fill(buf);
  std::uint64_t v = 0;
  for (auto b : buf) v = (v << 8) | b;
  return v;
}

std::uint64_t RandomSource::uniform(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::kDomainError, "uniform bound must be positive");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  for (;;) {
    const std::uint64_t v = next_u64();
    if (v < limit) return v % bound;
  }
}

double RandomSource::uniform_real() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomSource::normal() {
  double u1 = uniform_real();
  while (u1 <= 0.0) u1 = uniform_real();
  const double u2 = uniform_real();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

BigInt RandomSource::random_bits(std::size_t bits) {
  std::vector<std::uint8_t> buf((bits + 7) / 8);
  fill(buf);
  if (bits % 8 != 0 && !buf.empty()) {
    buf.front() &= static_cast<std::uint8_t>((1u << (bits % 8)) - 1);
  }
  return from_bytes(buf);
}

BigInt RandomSource::uniform_below(const BigInt& bound) {
  if (sgn(bound) <= 0) {
    throw Error(ErrorCode::kDomainError, "uniform_below bound must be positive");
  }
  const std::size_t bits = bit_length(bound);
  for (;;) {
    BigInt v = random_bits(bits);
    if (v < bound) return v;
  }
}

}  // namespace cipherdenoise
