// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cipherdenoise {

using BigInt = mpz_class;

// Minimal big-endian magnitude bytes; zero encodes as an empty vector.
std::vector<std::uint8_t> to_bytes(const BigInt& value);

// Big-endian, left-padded with zeros to exactly `width` bytes. Throws if the
// value does not fit.
std::vector<std::uint8_t> to_bytes_fixed(const BigInt& value, std::size_t width);
void write_bytes_fixed(const BigInt& value, std::span<std::uint8_t> out);

BigInt from_bytes(std::span<const std::uint8_t> bytes);

std::string to_hex(const BigInt& value);
BigInt from_hex(std::string_view hex);
std::string bytes_to_hex(std::span<const std::uint8_t> bytes);

std::size_t bit_length(const BigInt& value);
std::size_t byte_length(const BigInt& value);

inline BigInt from_int64(std::int64_t v) {
  BigInt out;
  // mpz_set_si takes a long, which is 64-bit on the supported targets.
  mpz_set_si(out.get_mpz_t(), static_cast<long>(v));
  return out;
}

}  // namespace cipherdenoise
