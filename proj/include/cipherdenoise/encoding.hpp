// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

// Signed fixed-point codec over Z_n. Negative values live in the upper half
// of the residue ring; scales only grow along a pipeline and are removed at
// decode time.

#pragma once

#include <compare>

#include "cipherdenoise/bigint.hpp"

namespace cipherdenoise {

inline constexpr int kDefaultFracBits = 16;

struct ScaleTag {
  int total_frac_bits = 0;

  ScaleTag plus(int bits) const { return ScaleTag{total_frac_bits + bits}; }
  auto operator<=>(const ScaleTag&) const = default;
};

struct FixedPointParams {
  int frac_bits = kDefaultFracBits;
  BigInt n;

  /// Throws kDomainError unless 2^frac_bits < n / 4.
  void validate() const;
};

/// round(v * 2^frac_bits), half away from zero, as an exact signed integer.
/// Throws kEncodeOverflow for non-finite input.
BigInt quantize(double v, int frac_bits);

/// Signed integer -> canonical residue in [0, n).
BigInt to_residue(const BigInt& value, const BigInt& n);

/// Residue in [0, n) -> signed representative in (-n/2, n/2].
BigInt center_lift(const BigInt& residue, const BigInt& n);

/// Fixed-point encoding of v into [0, n). Throws kEncodeOverflow if
/// |round(v * 2^frac_bits)| does not fit below n / 2.
BigInt encode(double v, const FixedPointParams& params);

/// Center-lift then divide by 2^tag.total_frac_bits.
double decode(const BigInt& residue, ScaleTag tag, const BigInt& n);

/// Signed integer at `frac_bits` -> real.
double to_real(const BigInt& value, int frac_bits);

}  // namespace cipherdenoise
