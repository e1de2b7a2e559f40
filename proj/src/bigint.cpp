// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "cipherdenoise/bigint.hpp"

#include <algorithm>
#include <cctype>

#include "cipherdenoise/error.hpp"

namespace cipherdenoise {

std::vector<std::uint8_t> to_bytes(const BigInt& value) {
  std::vector<std::uint8_t> out(byte_length(value));
  if (!out.empty()) {
    std::size_t written = 0;
    mpz_export(out.data(), &written, 1, 1, 1, 0, value.get_mpz_t());
    out.resize(written);
  }
  return out;
}

void write_bytes_fixed(const BigInt& value, std::span<std::uint8_t> out) {
  if (sgn(value) < 0) {
    throw Error(ErrorCode::kDomainError, "cannot serialize a negative integer");
  }
  const std::size_t len = byte_length(value);
  if (len > out.size()) {
    throw Error(ErrorCode::kDomainError, "integer wider than its field");
  }
  std::fill(out.begin(), out.end(), std::uint8_t{0});
  if (len > 0) {
    std::size_t written = 0;
    mpz_export(out.data() + (out.size() - len), &written, 1, 1, 1, 0,
               value.get_mpz_t());
  }
}

std::vector<std::uint8_t> to_bytes_fixed(const BigInt& value,
                                         std::size_t width) {
  std::vector<std::uint8_t> out(width);
  write_bytes_fixed(value, out);
  return out;
}

BigInt from_bytes(std::span<const std::uint8_t> bytes) {
  BigInt out;
  if (!bytes.empty()) {
    mpz_import(out.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  }
  return out;
}

std::string to_hex(const BigInt& value) { return value.get_str(16); }

BigInt from_hex(std::string_view hex) {
  if (hex.empty() ||
      !std::all_of(hex.begin(), hex.end(), [](unsigned char ch) {
        return std::isdigit(ch) || (ch >= 'a' && ch <= 'f');
      })) {
    throw Error(ErrorCode::kParseError,
                "expected lowercase hexadecimal, got '" + std::string(hex) + "'");
  }
  return BigInt(std::string(hex), 16);
}

std::string bytes_to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

std::size_t bit_length(const BigInt& value) {
  if (sgn(value) == 0) return 0;
  return mpz_sizeinbase(value.get_mpz_t(), 2);
}

std::size_t byte_length(const BigInt& value) {
  return (bit_length(value) + 7) / 8;
}

}  // namespace cipherdenoise
