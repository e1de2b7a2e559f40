// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "cipherdenoise/encoding.hpp"

#include <cmath>
#include <string>

#include "cipherdenoise/error.hpp"
#include "cipherdenoise/tensor.hpp"

namespace cipherdenoise {

void FixedPointParams::validate() const {
  if (frac_bits < 0) {
    throw Error(ErrorCode::kDomainError, "frac_bits must be non-negative");
  }
  BigInt one_scaled = 1;
  one_scaled <<= frac_bits;
  if (4 * one_scaled >= n) {
    throw Error(ErrorCode::kDomainError,
                "2^frac_bits must be below n/4 (frac_bits=" +
                    std::to_string(frac_bits) + ")");
  }
}

BigInt quantize(double v, int frac_bits) {
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::kEncodeOverflow, "cannot encode a non-finite value");
  }
  // ldexp is exact; std::round rounds half away from zero.
  const double scaled = std::round(std::ldexp(v, frac_bits));
  if (!std::isfinite(scaled)) {
    throw Error(ErrorCode::kEncodeOverflow, "value overflows at this scale");
  }
  BigInt out;
  mpz_set_d(out.get_mpz_t(), scaled);
  return out;
}

BigInt to_residue(const BigInt& value, const BigInt& n) {
  BigInt out = value % n;
  if (out < 0) out += n;
  return out;
}

BigInt center_lift(const BigInt& residue, const BigInt& n) {
  if (2 * residue > n) return residue - n;
  return residue;
}

BigInt encode(double v, const FixedPointParams& params) {
  params.validate();
  const BigInt k = quantize(v, params.frac_bits);
  if (2 * abs(k) >= params.n) {
    throw Error(ErrorCode::kEncodeOverflow,
                "|" + std::to_string(v) + "| * 2^" +
                    std::to_string(params.frac_bits) + " does not fit below n/2");
  }
  return to_residue(k, params.n);
}

double to_real(const BigInt& value, int frac_bits) {
  if (sgn(value) == 0) return 0.0;
  long exponent = 0;
  const double mantissa = mpz_get_d_2exp(&exponent, value.get_mpz_t());
  return std::ldexp(mantissa, static_cast<int>(exponent) - frac_bits);
}

double decode(const BigInt& residue, ScaleTag tag, const BigInt& n) {
  return to_real(center_lift(residue, n), tag.total_frac_bits);
}

IntTensor quantize_tensor(const RealTensor& input, int frac_bits) {
  IntTensor out(input.shape, BigInt(0), ScaleTag{frac_bits});
  for (std::size_t i = 0; i < input.data.size(); ++i) {
    out.data[i] = quantize(input.data[i], frac_bits);
  }
  return out;
}

RealTensor dequantize_tensor(const IntTensor& input) {
  RealTensor out(input.shape, 0.0);
  for (std::size_t i = 0; i < input.data.size(); ++i) {
    out.data[i] = to_real(input.data[i], input.scale.total_frac_bits);
  }
  return out;
}

}  // namespace cipherdenoise
