// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "cipherdenoise/bigint.hpp"
#include "cipherdenoise/paillier.hpp"
#include "cipherdenoise/random.hpp"

namespace cipherdenoise {

struct PaillierPrivateKey {
  BigInt lambda;  // lcm(p-1, q-1)
  BigInt mu;      // L(g^lambda mod n^2)^-1 mod n
  BigInt p;
  BigInt q;
};

struct PaillierKeypair {
  PaillierPublicKey public_key;
  PaillierPrivateKey private_key;
};

inline constexpr std::size_t kDefaultKeyBits = 2048;
inline constexpr std::size_t kMinKeyBits = 16;
inline constexpr int kMillerRabinRounds = 64;
inline constexpr int kPrimeSearchRetries = 10000;

/// Miller-Rabin with `rounds` random bases after trial division.
bool is_probable_prime(const BigInt& candidate, RandomSource& rng,
                       int rounds = kMillerRabinRounds);

/// Random prime with exactly `bits` bits and the top two bits set.
BigInt generate_prime(std::size_t bits, RandomSource& rng);

PaillierKeypair keygen(std::size_t bit_length, RandomSource& rng);

/// Builds a keypair from caller-chosen primes (test keys). Throws
/// kKeygenFailure if p == q, either is not prime, or
/// gcd(pq, (p-1)(q-1)) != 1.
PaillierKeypair keypair_from_primes(const BigInt& p, const BigInt& q);

/// L(u) = (u - 1) / n.
BigInt paillier_l(const BigInt& u, const BigInt& n);

BigInt decrypt(const PaillierPublicKey& pk, const PaillierPrivateKey& sk,
               const Ciphertext& c);
/// Same result as decrypt(), computed mod p^2 and q^2 then recombined.
BigInt decrypt_crt(const PaillierPublicKey& pk, const PaillierPrivateKey& sk,
                   const Ciphertext& c);

// CRT decryption with the per-key constants computed once.
class CrtDecryptor {
 public:
  CrtDecryptor(const PaillierPublicKey& pk, const PaillierPrivateKey& sk);

  BigInt operator()(const Ciphertext& c) const;

 private:
  const PaillierPublicKey* pk_;
  BigInt p_, q_, p_sq_, q_sq_;
  BigInt p_minus_1_, q_minus_1_;
  BigInt hp_, hq_;
  BigInt q_inv_p_;  // q^-1 mod p
};

void save_private_key(const std::filesystem::path& path,
                      const PaillierKeypair& keys);
PaillierKeypair load_private_key(const std::filesystem::path& path);
std::string private_key_to_text(const PaillierKeypair& keys);
PaillierKeypair private_key_from_text(const std::string& text);

}  // namespace cipherdenoise
