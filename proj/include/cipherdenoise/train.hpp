// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

// Small plaintext trainer for the demo denoiser on synthetic phantoms.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cipherdenoise/model.hpp"
#include "cipherdenoise/tensor.hpp"

namespace cipherdenoise {

struct TrainOptions {
  std::size_t images = 32;
  std::size_t size = 32;
  double noise_sigma = 20.0;  // 8-bit gray levels
  std::size_t epochs = 30;
  double learning_rate = 1e-3;  // Adam step
  int frac_bits = kDefaultFracBits;
  std::uint64_t seed = 0;
};

struct TrainResult {
  ModelSpec model;
  std::vector<double> epoch_loss;  // mean squared error per epoch
  double input_psnr_db = 0.0;      // noisy vs clean, held-out set
  double output_psnr_db = 0.0;     // denoised vs clean, held-out set
};

/// MSE gradient of `model` for one (input, target) pair, laid out like the
/// layers' weight and bias vectors. Returns the loss.
double mse_gradient(const ModelSpec& model, const RealTensor& input,
                    const RealTensor& target, std::vector<std::vector<double>>& weight_grad,
                    std::vector<std::vector<double>>& bias_grad);

/// Trains the demo architecture; final weights are snapped to the
/// fixed-point grid.
TrainResult train_demo(const TrainOptions& options);

}  // namespace cipherdenoise
