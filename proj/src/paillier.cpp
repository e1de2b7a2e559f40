// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "cipherdenoise/paillier.hpp"

#include <sodium.h>

#include <array>
#include <utility>

#include "cipherdenoise/error.hpp"
#include "io_util.hpp"
#include "json.hpp"

namespace cipherdenoise {
namespace {

constexpr const char* kKeyFileVersion = "1";

std::string compute_fingerprint(const BigInt& n, const BigInt& g) {
  if (sodium_init() < 0) {
    throw Error(ErrorCode::kDomainError, "libsodium failed to initialize");
  }
  std::vector<std::uint8_t> material = to_bytes(n);
  const auto g_bytes = to_bytes(g);
  material.insert(material.end(), g_bytes.begin(), g_bytes.end());
  std::array<std::uint8_t, crypto_hash_sha256_BYTES> digest{};
  crypto_hash_sha256(digest.data(), material.data(), material.size());
  return bytes_to_hex(digest);
}

BigInt pow_mod(const BigInt& base, const BigInt& exponent, const BigInt& mod) {
  BigInt out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exponent.get_mpz_t(),
           mod.get_mpz_t());
  return out;
}

}  // namespace

PaillierPublicKey::PaillierPublicKey(BigInt n) : PaillierPublicKey(n, n + 1) {}

PaillierPublicKey::PaillierPublicKey(BigInt n, BigInt g)
    : n_(std::move(n)), g_(std::move(g)) {
  if (n_ < 15) {
    throw Error(ErrorCode::kDomainError, "public modulus must be at least 15");
  }
  n_sq_ = n_ * n_;
  if (g_ <= 0 || g_ >= n_sq_) {
    throw Error(ErrorCode::kDomainError, "generator outside Z_{n^2}");
  }
  g_is_n_plus_one_ = (g_ == n_ + 1);
  fingerprint_ = compute_fingerprint(n_, g_);
}

BigInt generator_power(const PaillierPublicKey& pk, const BigInt& m) {
  if (pk.g_is_n_plus_one_) {
    // (1 + n)^m = 1 + m n (mod n^2)
    BigInt m_mod = m % pk.n();
    if (m_mod < 0) m_mod += pk.n();
    BigInt out = 1 + m_mod * pk.n();
    return out;
  }
  return pow_mod(pk.g(), m, pk.n_squared());
}

BigInt sample_unit(const PaillierPublicKey& pk, RandomSource& rng) {
  for (;;) {
    BigInt r = rng.uniform_below(pk.n());
    if (r == 0) continue;
    BigInt g;
    mpz_gcd(g.get_mpz_t(), r.get_mpz_t(), pk.n().get_mpz_t());
    if (g == 1) return r;
  }
}

Ciphertext encrypt_with_nonce(const PaillierPublicKey& pk, const BigInt& m,
                              const BigInt& r) {
  if (m < 0 || m >= pk.n()) {
    throw Error(ErrorCode::kDomainError, "plaintext outside [0, n)");
  }
  if (r <= 0 || r >= pk.n()) {
    throw Error(ErrorCode::kDomainError, "nonce outside (0, n)");
  }
  BigInt c = generator_power(pk, m) * pow_mod(r, pk.n(), pk.n_squared());
  c %= pk.n_squared();
  return Ciphertext{std::move(c)};
}

Ciphertext encrypt(const PaillierPublicKey& pk, const BigInt& m,
                   RandomSource& rng) {
  if (m < 0 || m >= pk.n()) {
    throw Error(ErrorCode::kDomainError, "plaintext outside [0, n)");
  }
  return encrypt_with_nonce(pk, m, sample_unit(pk, rng));
}

void validate_ciphertext(const PaillierPublicKey& pk, const Ciphertext& c) {
  if (c.value <= 0 || c.value >= pk.n_squared()) {
    throw Error(ErrorCode::kKeyMismatch, "ciphertext outside (0, n^2)");
  }
  BigInt g;
  mpz_gcd(g.get_mpz_t(), c.value.get_mpz_t(), pk.n().get_mpz_t());
  if (g != 1) {
    throw Error(ErrorCode::kMalformedCiphertext, "ciphertext not a unit mod n");
  }
}

Ciphertext add_cipher(const PaillierPublicKey& pk, const Ciphertext& a,
                      const Ciphertext& b) {
  if (a.value <= 0 || a.value >= pk.n_squared() || b.value <= 0 ||
      b.value >= pk.n_squared()) {
    throw Error(ErrorCode::kKeyMismatch, "operand not under this public key");
  }
  BigInt out = a.value * b.value;
  out %= pk.n_squared();
  return Ciphertext{std::move(out)};
}

Ciphertext scalar_mul(const PaillierPublicKey& pk, const Ciphertext& c,
                      const BigInt& a) {
  if (c.value <= 0 || c.value >= pk.n_squared()) {
    throw Error(ErrorCode::kKeyMismatch, "operand not under this public key");
  }
  if (a == 0) return Ciphertext{BigInt(1)};
  BigInt base = c.value;
  BigInt exponent = a;
  if (a < 0) {
    if (mpz_invert(base.get_mpz_t(), c.value.get_mpz_t(),
                   pk.n_squared().get_mpz_t()) == 0) {
      throw Error(ErrorCode::kMalformedCiphertext,
                  "ciphertext not invertible mod n^2");
    }
    exponent = -a;
  }
  return Ciphertext{pow_mod(base, exponent, pk.n_squared())};
}

Ciphertext rerandomize_with_nonce(const PaillierPublicKey& pk,
                                  const Ciphertext& c, const BigInt& r) {
  BigInt out = c.value * pow_mod(r, pk.n(), pk.n_squared());
  out %= pk.n_squared();
  return Ciphertext{std::move(out)};
}

Ciphertext rerandomize(const PaillierPublicKey& pk, const Ciphertext& c,
                       RandomSource& rng) {
  return rerandomize_with_nonce(pk, c, sample_unit(pk, rng));
}

std::string public_key_to_text(const PaillierPublicKey& pk) {
  nlohmann::ordered_json doc;
  doc["version"] = kKeyFileVersion;
  doc["n"] = to_hex(pk.n());
  doc["g"] = to_hex(pk.g());
  return doc.dump(2) + "\n";
}

PaillierPublicKey public_key_from_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
    if (doc.at("version").get<std::string>() != kKeyFileVersion) {
      throw Error(ErrorCode::kParseError, "unsupported key file version");
    }
    return PaillierPublicKey(from_hex(doc.at("n").get<std::string>()),
                             from_hex(doc.at("g").get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("key file: ") + e.what());
  }
}

void save_public_key(const std::filesystem::path& path,
                     const PaillierPublicKey& pk) {
  detail::write_text(path, public_key_to_text(pk));
}

PaillierPublicKey load_public_key(const std::filesystem::path& path) {
  return public_key_from_text(detail::read_text(path));
}

}  // namespace cipherdenoise
