// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

// Model-stealing experiment: a client that keeps every decrypted activation
// payload tries to recover the convolution feeding the first activation by
// least squares.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cipherdenoise/model.hpp"
#include "cipherdenoise/server.hpp"
#include "cipherdenoise/tensor.hpp"

namespace cipherdenoise {

enum class AttackMode { kClean, kPerturbed };

std::string_view to_string(AttackMode mode);

struct AttackReport {
  AttackMode mode = AttackMode::kClean;
  PerturbationMode perturbation = PerturbationMode::kNone;
  std::size_t target_layer = 0;
  std::size_t samples_used = 0;          // equations per output channel
  std::size_t unknowns_per_channel = 0;  // kernel taps plus bias
  bool underdetermined = false;
  std::string warning;
  double weight_relative_error = 0.0;  // Frobenius ratio, weights and bias
  double output_psnr_db = 0.0;         // held-out layer output, stolen vs true
  double baseline_psnr_db = 0.0;       // same, with random weights of equal norm
};

struct StolenLayer {
  std::vector<double> weight;  // [out][in][k][k]
  std::vector<double> bias;    // [out]
};

/// One observed equation set: the attacker's own input and the activation
/// payload it decrypted for the target layer.
struct Observation {
  RealTensor input;
  RealTensor feature;
};

/// Least squares per output channel over `samples` randomly chosen
/// (observation, position) pairs. Held-out scoring uses `holdout` inputs.
std::pair<StolenLayer, AttackReport> steal_layer(const std::vector<Observation>& observations,
                                                 const LayerDesc& truth,
                                                 std::size_t samples,
                                                 const std::vector<RealTensor>& holdout,
                                                 RandomSource& rng);

/// Index of the weighted layer whose output the first activation consumes.
std::size_t attack_target_layer(const ModelSpec& model);

struct AttackConfig {
  std::size_t key_bits = 512;
  std::size_t probe_images = 1;  // protocol sessions per mode
  std::size_t samples = 64;      // equations per output channel
  std::size_t holdout = 16;
  bool fixed_m = false;
  std::uint64_t perturbation_bound = kDefaultPerturbationBound;
  std::uint64_t seed = 0;
};

struct AttackExperiment {
  AttackReport clean;
  AttackReport perturbed;
  RealTensor true_output;       // target layer, channel 0, first holdout image
  RealTensor clean_output;
  RealTensor perturbed_output;
};

/// Runs both modes through real protocol sessions.
AttackExperiment run_attack_experiment(const ModelSpec& model, const AttackConfig& config);

std::string attack_report_json(const AttackExperiment& experiment);
/// Side-by-side PGM: true / clean-attack / perturbed-attack.
void write_triptych(const std::filesystem::path& path, const AttackExperiment& experiment);

}  // namespace cipherdenoise
