// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "cipherdenoise/encoding.hpp"
#include "cipherdenoise/model.hpp"

namespace cipherdenoise {

struct BudgetOptions {
  double input_bound = 1.0;       // max |pixel| of real-valued input
  int perturbation_bits = 16;     // |M| <= 2^bits at activation exchanges
};

struct BudgetReport {
  int max_frac_bits = 0;
  double max_magnitude_bound = 0.0;  // real units, worst layer
  std::size_t required_key_bits = 0;
  std::optional<std::size_t> worst_layer;
};

/// Worst-case scale and magnitude along the pipeline. The integer magnitude
/// at each layer is bound * 2^scale (times 2^perturbation_bits where the
/// value is perturbed for an activation exchange) and must stay below n/2.
/// Throws kOverflowBudget naming the first layer that does not fit, with
/// the required key size.
BudgetReport overflow_budget(const ModelSpec& model, const FixedPointParams& params,
                             const BudgetOptions& options = {});

/// Same accounting without a modulus; never throws on magnitude.
BudgetReport estimate_budget(const ModelSpec& model, int input_frac_bits,
                             const BudgetOptions& options = {});

}  // namespace cipherdenoise
