// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "cipherdenoise/encoding.hpp"
#include "cipherdenoise/error.hpp"
#include "cipherdenoise/paillier.hpp"
#include "cipherdenoise/paillier_private.hpp"
#include "cipherdenoise/random.hpp"
#include "cipherdenoise/tensor.hpp"

namespace cipherdenoise {
namespace {

TEST(Encode, ZeroIsZero) {
  EXPECT_EQ(encode(0.0, {16, BigInt(1) << 64}), 0);
}

TEST(Encode, NegativeValuesLiveInUpperHalf) {
  const FixedPointParams p{4, 10007};
  // -1.5 * 16 = -24, stored as 10007 - 24.
  EXPECT_EQ(encode(-1.5, p), 9983);
  EXPECT_DOUBLE_EQ(decode(9983, ScaleTag{4}, 10007), -1.5);
}

TEST(Encode, DecodeZeroAtAnyScale) {
  for (int tag : {0, 4, 16, 64}) EXPECT_EQ(decode(0, ScaleTag{tag}, 10007), 0.0);
}

TEST(Encode, RoundsHalfAwayFromZero) {
  EXPECT_EQ(quantize(2.5, 0), 3);
  EXPECT_EQ(quantize(-2.5, 0), -3);
  EXPECT_EQ(quantize(0.49, 0), 0);
  EXPECT_EQ(quantize(-0.5, 1), -1);
}

TEST(Encode, RoundTripWithinOneStep) {
  const BigInt n = (BigInt(1) << 127) + 1;
  RandomSource rng(42);
  for (int frac_bits : {4, 16, 30}) {
    const FixedPointParams p{frac_bits, n};
    const double step = std::ldexp(1.0, -frac_bits);
    for (int i = 0; i < 100000 / 3; ++i) {
      const double v = (rng.uniform_real() - 0.5) * 2000.0;
      const double back = decode(encode(v, p), ScaleTag{frac_bits}, n);
      ASSERT_LE(std::abs(back - v), step) << v;
    }
  }
}

TEST(Encode, OverflowRejected) {
  const FixedPointParams p{4, 10007};
  EXPECT_NO_THROW(encode(312.0, p));  // 4992, below n/2
  try {
    encode(313.0, p);  // 5008 > 5003
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEncodeOverflow);
  }
  EXPECT_THROW(encode(std::numeric_limits<double>::quiet_NaN(), p), Error);
  EXPECT_THROW(encode(std::numeric_limits<double>::infinity(), p), Error);
}

TEST(Encode, ParamsRequireHeadroom) {
  EXPECT_THROW((FixedPointParams{16, 1000}.validate()), Error);
  EXPECT_NO_THROW((FixedPointParams{4, 10007}.validate()));
}

TEST(Encode, CenterLiftIsSymmetric) {
  const BigInt n = 35;
  EXPECT_EQ(center_lift(17, n), 17);
  EXPECT_EQ(center_lift(18, n), -17);
  EXPECT_EQ(center_lift(34, n), -1);
  EXPECT_EQ(to_residue(-1, n), 34);
  EXPECT_EQ(to_residue(-36, n), 34);
}

TEST(Encode, HomomorphicSumDecodesToRealSum) {
  RandomSource rng(3);
  const auto keys = keygen(128, rng);
  const auto& pk = keys.public_key;
  const FixedPointParams p{16, pk.n()};
  for (int i = 0; i < 200; ++i) {
    const double a = (rng.uniform_real() - 0.5) * 100;
    const double b = (rng.uniform_real() - 0.5) * 100;
    const Ciphertext sum = add_cipher(pk, encrypt(pk, encode(a, p), rng),
                                      encrypt(pk, encode(b, p), rng));
    const double got = decode(decrypt(pk, keys.private_key, sum), ScaleTag{16}, pk.n());
    ASSERT_LE(std::abs(got - (a + b)), 2 * std::ldexp(1.0, -16));
  }
}

TEST(Encode, ScaleLawForWeightedProducts) {
  RandomSource rng(4);
  const auto keys = keygen(128, rng);
  const auto& pk = keys.public_key;
  const double x = -3.25, w = 0.625;
  const BigInt ex = encode(x, {16, pk.n()});
  const BigInt qw = quantize(w, 8);
  const Ciphertext c = scalar_mul(pk, encrypt(pk, ex, rng), qw);
  EXPECT_DOUBLE_EQ(decode(decrypt(pk, keys.private_key, c), ScaleTag{16}.plus(8), pk.n()),
                   x * w);
}

TEST(Encode, TensorQuantizeRoundTrip) {
  RealTensor t(Shape{2, 3, 4}, 0.0);
  for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = 0.1 * static_cast<double>(i) - 1;
  const IntTensor q = quantize_tensor(t, 10);
  EXPECT_EQ(q.scale, ScaleTag{10});
  const RealTensor back = dequantize_tensor(q);
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    EXPECT_LE(std::abs(back.data[i] - t.data[i]), std::ldexp(1.0, -10));
  }
}

}  // namespace
}  // namespace cipherdenoise
