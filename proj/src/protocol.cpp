// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "cipherdenoise/protocol.hpp"

#include <string>

#include "cipherdenoise/error.hpp"

namespace cipherdenoise {
namespace {

void require_shape(const Shape& expected, const Shape& got, std::size_t count,
                   const char* what) {
  if (expected != got || expected.size() != count) {
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + " shape " + got.str() +
                                               " differs from feature shape " +
                                               expected.str());
  }
}

}  // namespace

PerturbanceMatrix sample_perturbation(const Shape& shape, std::uint64_t bound,
                                      RandomSource& rng) {
  if (bound == 0 || bound > (std::uint64_t{1} << 62)) {
    throw Error(ErrorCode::kDomainError, "perturbation bound out of range");
  }
  PerturbanceMatrix m;
  m.shape = shape;
  m.values.resize(shape.size());
  m.server_signs.resize(shape.size());
  for (std::size_t k = 0; k < m.values.size(); ++k) {
    const auto u = static_cast<std::int64_t>(rng.uniform(2 * bound));
    const auto b = static_cast<std::int64_t>(bound);
    m.values[k] = u < b ? -(u + 1) : u - b + 1;
    m.server_signs[k] = m.values[k] >= 0 ? 1 : 0;
  }
  return m;
}

PerturbanceMatrix perturbation_from_values(const Shape& shape,
                                           std::vector<std::int64_t> values) {
  if (values.size() != shape.size()) {
    throw Error(ErrorCode::kShapeMismatch, "perturbation size differs from shape");
  }
  PerturbanceMatrix m;
  m.shape = shape;
  m.server_signs.resize(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k] == 0) {
      throw Error(ErrorCode::kDomainError, "perturbation entries must be nonzero");
    }
    m.server_signs[k] = values[k] >= 0 ? 1 : 0;
  }
  m.values = std::move(values);
  return m;
}

CipherTensor server_perturb(const PaillierPublicKey& pk, const CipherTensor& features,
                            const PerturbanceMatrix& m) {
  require_shape(features.shape, m.shape, m.values.size(), "perturbation");
  return hadamard_scalar(pk, features, m.values);
}

SignMatrix combine_signs(const SignMatrix& client, const PerturbanceMatrix& m) {
  require_shape(m.shape, client.shape, client.bits.size(), "sign matrix");
  SignMatrix s{client.shape, std::vector<std::uint8_t>(client.bits.size())};
  for (std::size_t k = 0; k < s.bits.size(); ++k) {
    if (client.bits[k] > 1) {
      throw Error(ErrorCode::kDomainError, "sign matrix entries must be 0 or 1");
    }
    s.bits[k] = client.bits[k] == m.server_signs[k] ? 1 : 0;
  }
  return s;
}

CipherTensor server_combine_and_activate(const PaillierPublicKey& pk,
                                         const CipherTensor& features,
                                         const SignMatrix& client,
                                         const PerturbanceMatrix& m, RandomSource& rng) {
  require_shape(features.shape, m.shape, m.values.size(), "perturbation");
  const SignMatrix s = combine_signs(client, m);
  std::vector<std::int64_t> exponents(s.bits.begin(), s.bits.end());
  return rerandomize_tensor(pk, hadamard_scalar(pk, features, exponents), rng);
}

CipherTensor server_activate_leaky(const PaillierPublicKey& pk,
                                   const CipherTensor& features, const SignMatrix& s,
                                   std::int64_t alpha, int alpha_bits,
                                   RandomSource& rng) {
  require_shape(features.shape, s.shape, s.bits.size(), "sign matrix");
  if (alpha_bits < 0 || alpha_bits > 62) {
    throw Error(ErrorCode::kDomainError, "alpha_bits out of range");
  }
  const std::int64_t one = std::int64_t{1} << alpha_bits;
  std::vector<std::int64_t> exponents(s.bits.size());
  for (std::size_t k = 0; k < s.bits.size(); ++k) {
    exponents[k] = s.bits[k] != 0 ? one : alpha;
  }
  CipherTensor out = rerandomize_tensor(pk, hadamard_scalar(pk, features, exponents), rng);
  out.scale = features.scale.plus(alpha_bits);
  return out;
}

CipherTensor server_threshold_shift(const PaillierPublicKey& pk,
                                    const CipherTensor& features,
                                    const CipherTensor& enc_neg_threshold) {
  if (enc_neg_threshold.scale != features.scale) {
    throw Error(ErrorCode::kScaleMismatch, "threshold not encoded at the feature scale");
  }
  if (enc_neg_threshold.size() == 1 && features.size() != 1) {
    CipherTensor broadcast = enc_neg_threshold;
    broadcast.shape = features.shape;
    broadcast.data.assign(features.size(), enc_neg_threshold.data.front());
    return add_enc(pk, features, broadcast);
  }
  return add_enc(pk, features, enc_neg_threshold);
}

}  // namespace cipherdenoise
