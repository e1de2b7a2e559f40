// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

// Runs the encrypted pipeline next to the fixed-point reference and compares
// integers before decoding.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cipherdenoise/model.hpp"
#include "cipherdenoise/paillier_private.hpp"
#include "cipherdenoise/protocol.hpp"
#include "cipherdenoise/tensor.hpp"
#include "cipherdenoise/wire.hpp"

namespace cipherdenoise {

struct Mismatch {
  std::array<std::size_t, 3> coord{};  // channel, row, column
  BigInt expected;
  BigInt actual;
};

struct LayerCheck {
  std::size_t layer = 0;
  LayerKind kind = LayerKind::kConv;
  std::size_t mismatches = 0;
  std::optional<Mismatch> first;
};

struct VerificationReport {
  bool passed = false;
  std::size_t elements = 0;
  std::size_t mismatches = 0;
  std::optional<Mismatch> first_mismatch;
  std::vector<LayerCheck> layers;
  std::optional<std::size_t> first_bad_layer;
  Framework framework = Framework::kNonlinear;
  std::size_t act_round_trips = 0;
  std::size_t expected_act_round_trips = 0;
  CommStats stats;
  std::string error;
};

struct VerifyOptions {
  std::size_t key_bits = 512;
  std::uint64_t seed = 0;
  bool per_layer = true;
  /// Negative-control hook: edits the served copy of the model only.
  std::function<void(ModelSpec&)> tamper;
};

VerificationReport run_verification(const ModelSpec& model, const RealTensor& image,
                                    const VerifyOptions& options);
VerificationReport run_verification(const ModelSpec& model, const RealTensor& image,
                                    const PaillierKeypair& keys,
                                    const VerifyOptions& options);

std::string format_report(const VerificationReport& report);

}  // namespace cipherdenoise
