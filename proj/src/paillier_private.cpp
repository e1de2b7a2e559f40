// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "cipherdenoise/paillier_private.hpp"

#include <array>
#include <utility>

#include "cipherdenoise/error.hpp"
#include "io_util.hpp"
#include "json.hpp"

namespace cipherdenoise {
namespace {

constexpr const char* kKeyFileVersion = "1";

constexpr std::array<unsigned, 54> kSmallPrimes = {
    2,   3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,  43,
    47,  53,  59,  61,  67,  71,  73,  79,  83,  89,  97,  101, 103, 107,
    109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181,
    191, 193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251};

BigInt pow_mod(const BigInt& base, const BigInt& exponent, const BigInt& mod) {
  BigInt out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exponent.get_mpz_t(),
           mod.get_mpz_t());
  return out;
}

BigInt invert(const BigInt& value, const BigInt& mod) {
  BigInt out;
  if (mpz_invert(out.get_mpz_t(), value.get_mpz_t(), mod.get_mpz_t()) == 0) {
    throw Error(ErrorCode::kKeygenFailure, "value not invertible");
  }
  return out;
}

}  // namespace

bool is_probable_prime(const BigInt& candidate, RandomSource& rng, int rounds) {
  if (candidate < 2) return false;
  for (unsigned p : kSmallPrimes) {
    if (candidate == p) return true;
    if (mpz_divisible_ui_p(candidate.get_mpz_t(), p) != 0) return false;
  }
  // candidate > 251 here, so [2, candidate - 2] is non-empty.
  const BigInt n_minus_1 = candidate - 1;
  BigInt d = n_minus_1;
  std::size_t s = 0;
  while (mpz_even_p(d.get_mpz_t()) != 0) {
    d >>= 1;
    ++s;
  }
  for (int round = 0; round < rounds; ++round) {
    const BigInt base = rng.uniform_below(candidate - 3) + 2;
    BigInt x = pow_mod(base, d, candidate);
    if (x == 1 || x == n_minus_1) continue;
    bool witness = true;
    for (std::size_t i = 1; i < s; ++i) {
      x = (x * x) % candidate;
      if (x == n_minus_1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

BigInt generate_prime(std::size_t bits, RandomSource& rng) {
  if (bits < 3) {
    throw Error(ErrorCode::kKeygenFailure, "prime size below 3 bits");
  }
  for (int attempt = 0; attempt < kPrimeSearchRetries; ++attempt) {
    BigInt candidate = rng.random_bits(bits);
    mpz_setbit(candidate.get_mpz_t(), bits - 1);
    mpz_setbit(candidate.get_mpz_t(), bits - 2);
    mpz_setbit(candidate.get_mpz_t(), 0);
    if (is_probable_prime(candidate, rng)) return candidate;
  }
  throw Error(ErrorCode::kKeygenFailure,
              "no prime found after " + std::to_string(kPrimeSearchRetries) +
                  " candidates");
}

PaillierKeypair keypair_from_primes(const BigInt& p, const BigInt& q) {
  if (p == q) throw Error(ErrorCode::kKeygenFailure, "p and q must differ");
  RandomSource check_rng(0);
  if (!is_probable_prime(p, check_rng) || !is_probable_prime(q, check_rng)) {
    throw Error(ErrorCode::kKeygenFailure, "p and q must both be prime");
  }
  const BigInt n = p * q;
  const BigInt p1 = p - 1;
  const BigInt q1 = q - 1;
  BigInt phi_gcd;
  const BigInt phi = p1 * q1;
  mpz_gcd(phi_gcd.get_mpz_t(), n.get_mpz_t(), phi.get_mpz_t());
  if (phi_gcd != 1) {
    throw Error(ErrorCode::kKeygenFailure, "gcd(pq, (p-1)(q-1)) != 1");
  }
  BigInt lambda;
  mpz_lcm(lambda.get_mpz_t(), p1.get_mpz_t(), q1.get_mpz_t());

  PaillierPublicKey pk(n);
  const BigInt l_value = paillier_l(pow_mod(pk.g(), lambda, pk.n_squared()), n);
  PaillierPrivateKey sk{lambda, invert(l_value, n), p, q};
  return PaillierKeypair{std::move(pk), std::move(sk)};
}

PaillierKeypair keygen(std::size_t bit_length, RandomSource& rng) {
  if (bit_length < kMinKeyBits) {
    throw Error(ErrorCode::kDomainError,
                "key size must be at least " + std::to_string(kMinKeyBits) +
                    " bits");
  }
  const std::size_t p_bits = (bit_length + 1) / 2;
  const std::size_t q_bits = bit_length / 2;
  for (int attempt = 0; attempt < kPrimeSearchRetries; ++attempt) {
    BigInt p = generate_prime(p_bits, rng);
    BigInt q = generate_prime(q_bits, rng);
    if (p == q) continue;
    const BigInt phi = (p - 1) * (q - 1);
    const BigInt n = p * q;
    BigInt g;
    mpz_gcd(g.get_mpz_t(), n.get_mpz_t(), phi.get_mpz_t());
    if (g != 1 || cipherdenoise::bit_length(n) != bit_length) continue;
    return keypair_from_primes(p, q);
  }
  throw Error(ErrorCode::kKeygenFailure, "could not find a valid prime pair");
}

BigInt paillier_l(const BigInt& u, const BigInt& n) {
  BigInt out = u - 1;
  mpz_divexact(out.get_mpz_t(), out.get_mpz_t(), n.get_mpz_t());
  return out;
}

BigInt decrypt(const PaillierPublicKey& pk, const PaillierPrivateKey& sk,
               const Ciphertext& c) {
  validate_ciphertext(pk, c);
  BigInt m = paillier_l(pow_mod(c.value, sk.lambda, pk.n_squared()), pk.n()) *
             sk.mu;
  m %= pk.n();
  return m;
}

CrtDecryptor::CrtDecryptor(const PaillierPublicKey& pk,
                           const PaillierPrivateKey& sk)
    : pk_(&pk),
      p_(sk.p),
      q_(sk.q),
      p_sq_(sk.p * sk.p),
      q_sq_(sk.q * sk.q),
      p_minus_1_(sk.p - 1),
      q_minus_1_(sk.q - 1) {
  hp_ = invert(paillier_l(pow_mod(pk.g() % p_sq_, p_minus_1_, p_sq_), p_), p_);
  hq_ = invert(paillier_l(pow_mod(pk.g() % q_sq_, q_minus_1_, q_sq_), q_), q_);
  q_inv_p_ = invert(q_, p_);
}

BigInt CrtDecryptor::operator()(const Ciphertext& c) const {
  validate_ciphertext(*pk_, c);
  BigInt mp = paillier_l(pow_mod(c.value % p_sq_, p_minus_1_, p_sq_), p_) * hp_;
  mp %= p_;
  BigInt mq = paillier_l(pow_mod(c.value % q_sq_, q_minus_1_, q_sq_), q_) * hq_;
  mq %= q_;
  BigInt h = ((mp - mq) * q_inv_p_) % p_;
  if (h < 0) h += p_;
  return mq + h * q_;
}

BigInt decrypt_crt(const PaillierPublicKey& pk, const PaillierPrivateKey& sk,
                   const Ciphertext& c) {
  return CrtDecryptor(pk, sk)(c);
}

std::string private_key_to_text(const PaillierKeypair& keys) {
  nlohmann::ordered_json doc;
  doc["version"] = kKeyFileVersion;
  doc["n"] = to_hex(keys.public_key.n());
  doc["g"] = to_hex(keys.public_key.g());
  doc["lambda"] = to_hex(keys.private_key.lambda);
  doc["mu"] = to_hex(keys.private_key.mu);
  doc["p"] = to_hex(keys.private_key.p);
  doc["q"] = to_hex(keys.private_key.q);
  return doc.dump(2) + "\n";
}

PaillierKeypair private_key_from_text(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("version").get<std::string>() != kKeyFileVersion) {
      throw Error(ErrorCode::kParseError, "unsupported key file version");
    }
    auto field = [&](const char* name) {
      return from_hex(doc.at(name).get<std::string>());
    };
    PaillierPublicKey pk(field("n"), field("g"));
    PaillierPrivateKey sk{field("lambda"), field("mu"), field("p"), field("q")};
    if (sk.p * sk.q != pk.n()) {
      throw Error(ErrorCode::kParseError, "private key factors do not match n");
    }
    const BigInt check =
        (sk.mu * paillier_l(pow_mod(pk.g(), sk.lambda, pk.n_squared()), pk.n())) %
        pk.n();
    if (check != 1) {
      throw Error(ErrorCode::kParseError, "mu is not the inverse of L(g^lambda)");
    }
    return PaillierKeypair{std::move(pk), std::move(sk)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("key file: ") + e.what());
  }
}

void save_private_key(const std::filesystem::path& path,
                      const PaillierKeypair& keys) {
  detail::write_text(path, private_key_to_text(keys));
}

PaillierKeypair load_private_key(const std::filesystem::path& path) {
  return private_key_from_text(detail::read_text(path));
}

}  // namespace cipherdenoise
