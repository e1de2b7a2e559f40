// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

// Public-key half of the Paillier cryptosystem: everything a party holding
// only (n, g) may do. Decryption and key generation live in
// paillier_private.hpp so that server code cannot reach them.

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "cipherdenoise/bigint.hpp"
#include "cipherdenoise/random.hpp"

namespace cipherdenoise {

class PaillierPublicKey {
 public:
  /// g defaults to n + 1.
  explicit PaillierPublicKey(BigInt n);
  PaillierPublicKey(BigInt n, BigInt g);

  const BigInt& n() const { return n_; }
  const BigInt& n_squared() const { return n_sq_; }
  const BigInt& g() const { return g_; }
  std::size_t bits() const { return bit_length(n_); }
  /// Byte width of one serialized ciphertext (bytes of n^2).
  std::size_t ciphertext_bytes() const { return byte_length(n_sq_); }

  /// SHA-256 of BE(n) || BE(g), lowercase hex.
  const std::string& fingerprint() const { return fingerprint_; }

  bool operator==(const PaillierPublicKey& other) const {
    return n_ == other.n_ && g_ == other.g_;
  }

 private:
  BigInt n_;
  BigInt n_sq_;
  BigInt g_;
  bool g_is_n_plus_one_ = true;
  std::string fingerprint_;

  friend BigInt generator_power(const PaillierPublicKey&, const BigInt&);
};

struct Ciphertext {
  BigInt value;

  bool operator==(const Ciphertext&) const = default;
};

/// g^m mod n^2, using the 1 + m*n shortcut when g = n + 1.
BigInt generator_power(const PaillierPublicKey& pk, const BigInt& m);

/// Fresh r in [1, n) with gcd(r, n) = 1.
BigInt sample_unit(const PaillierPublicKey& pk, RandomSource& rng);

Ciphertext encrypt(const PaillierPublicKey& pk, const BigInt& m,
                   RandomSource& rng);
/// Encryption with caller-supplied r (0 < r < n, gcd(r, n) = 1).
Ciphertext encrypt_with_nonce(const PaillierPublicKey& pk, const BigInt& m,
                              const BigInt& r);

/// Homomorphic addition: a * b mod n^2.
Ciphertext add_cipher(const PaillierPublicKey& pk, const Ciphertext& a,
                      const Ciphertext& b);

/// Homomorphic plaintext-scalar multiplication: c^a mod n^2. Negative a
/// raises the modular inverse of c to |a|.
Ciphertext scalar_mul(const PaillierPublicKey& pk, const Ciphertext& c,
                      const BigInt& a);

/// c * r'^n mod n^2 for fresh r'.
Ciphertext rerandomize(const PaillierPublicKey& pk, const Ciphertext& c,
                       RandomSource& rng);
Ciphertext rerandomize_with_nonce(const PaillierPublicKey& pk,
                                  const Ciphertext& c, const BigInt& r);

/// Throws kKeyMismatch if the value is out of [1, n^2), kMalformedCiphertext
/// if it shares a factor with n.
void validate_ciphertext(const PaillierPublicKey& pk, const Ciphertext& c);

void save_public_key(const std::filesystem::path& path,
                     const PaillierPublicKey& pk);
PaillierPublicKey load_public_key(const std::filesystem::path& path);
std::string public_key_to_text(const PaillierPublicKey& pk);
PaillierPublicKey public_key_from_text(const std::string& text);

}  // namespace cipherdenoise
