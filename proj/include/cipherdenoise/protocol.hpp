// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

// Server-side steps of the interactive activation exchange, plus the
// communication counters shared by both endpoints. Nothing here needs the
// private key.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cipherdenoise/ciphertensor.hpp"
#include "cipherdenoise/paillier.hpp"
#include "cipherdenoise/random.hpp"
#include "cipherdenoise/tensor.hpp"

namespace cipherdenoise {

inline constexpr std::uint64_t kDefaultPerturbationBound = std::uint64_t{1} << 16;

struct PerturbanceMatrix {
  Shape shape;
  std::vector<std::int64_t> values;        // nonzero, |v| <= bound
  std::vector<std::uint8_t> server_signs;  // 1 iff value >= 0
};

struct SignMatrix {
  Shape shape;
  std::vector<std::uint8_t> bits;

  bool operator==(const SignMatrix&) const = default;
};

/// Uniform over [-bound, -1] u [1, bound].
PerturbanceMatrix sample_perturbation(const Shape& shape, std::uint64_t bound,
                                      RandomSource& rng);
/// Wraps caller-chosen values; rejects zeros.
PerturbanceMatrix perturbation_from_values(const Shape& shape,
                                           std::vector<std::int64_t> values);

/// C_per = C^M elementwise, so Dec(C_per) = M * Dec(C) mod n.
CipherTensor server_perturb(const PaillierPublicKey& pk, const CipherTensor& features,
                            const PerturbanceMatrix& m);

/// S = 1 where the client sign agrees with the sign of M.
SignMatrix combine_signs(const SignMatrix& client, const PerturbanceMatrix& m);

/// C_act = C^S, rerandomized. Decrypts to ReLU of the unperturbed feature.
CipherTensor server_combine_and_activate(const PaillierPublicKey& pk,
                                         const CipherTensor& features,
                                         const SignMatrix& client,
                                         const PerturbanceMatrix& m, RandomSource& rng);

/// C_act = C^(S*2^a + (1-S)*alpha), rerandomized; scale grows by alpha_bits.
CipherTensor server_activate_leaky(const PaillierPublicKey& pk,
                                   const CipherTensor& features, const SignMatrix& s,
                                   std::int64_t alpha, int alpha_bits,
                                   RandomSource& rng);

/// Adds the client-supplied Enc(-t) so the sign exchange compares against t.
/// A single-element threshold is broadcast. Feed the result to
/// server_perturb, then activate the original features.
CipherTensor server_threshold_shift(const PaillierPublicKey& pk,
                                    const CipherTensor& features,
                                    const CipherTensor& enc_neg_threshold);

// Tensor payload bytes by direction (client view: upload = client to server),
// plus whole-frame wire bytes.
struct CommStats {
  std::size_t upload_bytes = 0;
  std::size_t download_bytes = 0;
  std::size_t upload_wire_bytes = 0;
  std::size_t download_wire_bytes = 0;
  std::size_t enc_image_bytes = 0;
  std::size_t result_bytes = 0;
  std::size_t act_request_bytes = 0;
  std::size_t act_response_bytes = 0;
  std::size_t act_round_trips = 0;

  bool operator==(const CommStats&) const = default;
};

}  // namespace cipherdenoise
