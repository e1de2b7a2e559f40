// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "cipherdenoise/bigint.hpp"

namespace cipherdenoise {

/// Seedable cryptographic random stream (ChaCha20 keystream).
///
/// Two sources built from the same seed produce identical output, which is
/// what the determinism harness relies on. `from_entropy()` draws the key from
/// the operating system.
class RandomSource {
 public:
  using Key = std::array<std::uint8_t, 32>;

  explicit RandomSource(std::uint64_t seed);
  explicit RandomSource(const Key& key);

  static RandomSource from_entropy();

  /// Independent child stream keyed by (this key, label). Does not advance
  /// this stream.
  RandomSource derive(std::string_view label) const;
  RandomSource derive(std::uint64_t index) const;

  void fill(std::span<std::uint8_t> out);
  std::uint64_t next_u64();

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t uniform(std::uint64_t bound);
  /// Uniform real in [0, 1).
  double uniform_real();
  /// Standard normal deviate (Box-Muller).
  double normal();

  /// Uniform big integer in [0, bound).
  BigInt uniform_below(const BigInt& bound);
  /// Uniform big integer with exactly `bits` random bits (top bit may be 0).
  BigInt random_bits(std::size_t bits);

 private:
  void refill();

  Key key_{};
  std::uint64_t counter_ = 0;
  std::array<std::uint8_t, 64> block_{};
  std::size_t used_ = 64;
};

}  // namespace cipherdenoise
