// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

// Grayscale images as (1, H, W) real tensors with intensities in [0, 1].

#pragma once

#include <cstddef>
#include <filesystem>

#include "cipherdenoise/random.hpp"
#include "cipherdenoise/tensor.hpp"

namespace cipherdenoise {

/// Binary PGM (P5), 8- or 16-bit, any maxval.
RealTensor read_pgm(const std::filesystem::path& path);
/// Writes 16-bit P5, clamping to [0, 1].
void write_pgm(const std::filesystem::path& path, const RealTensor& image);

/// Little-endian float32, row-major, no header.
RealTensor read_raw_float32(const std::filesystem::path& path, std::size_t width,
                            std::size_t height);

/// Random ellipses on a dark background.
RealTensor make_phantom(std::size_t size, RandomSource& rng);

/// Poisson thinning then additive Gaussian; sigma is in 8-bit gray levels.
/// sigma == 0 returns the input unchanged.
RealTensor add_noise(const RealTensor& clean, double sigma, RandomSource& rng);

/// Peak signal-to-noise ratio in dB; infinite for identical inputs.
double psnr(const RealTensor& reference, const RealTensor& test, double peak = 1.0);

}  // namespace cipherdenoise
