// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "cipherdenoise/budget.hpp"
#include "cipherdenoise/error.hpp"
#include "cipherdenoise/image.hpp"
#include "cipherdenoise/model.hpp"

namespace cipherdenoise {
namespace {

LayerDesc conv(std::size_t in, std::size_t out, std::size_t k, float w, float b = 0.0f) {
  LayerDesc l;
  l.kind = LayerKind::kConv;
  l.in_channels = in;
  l.out_channels = out;
  l.kernel_size = k;
  l.padding = k / 2;
  l.weight.assign(out * in * k * k, w);
  l.bias.assign(out, b);
  return l;
}

LayerDesc act(LayerKind kind, float alpha = 0.0f) {
  LayerDesc l;
  l.kind = kind;
  l.alpha = alpha;
  return l;
}

RealTensor phantom(std::size_t size, std::uint64_t seed) {
  RandomSource rng(seed);
  return add_noise(make_phantom(size, rng), 10.0, rng);
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

TEST(ModelFile, RoundTripsThroughDisk) {
  ModelSpec m;
  m.name = "one-conv";
  m.input_shape = {1, 5, 5};
  m.layers.push_back(conv(1, 2, 3, 0.25f, -0.5f));
  const auto path = temp_file("cd_model_roundtrip.cdm");
  save_model(path, m);
  const ModelSpec once = load_model(path);
  EXPECT_EQ(once, m);
  save_model(path, once);
  EXPECT_EQ(load_model(path), m);
  std::filesystem::remove(path);
}

TEST(ModelFile, DemoModelRoundTripsWithAllKinds) {
  ModelSpec m = make_demo_model(4);
  m.layers.insert(m.layers.begin() + 3, act(LayerKind::kLeakyRelu, 0.125f));
  m.layers.erase(m.layers.begin() + 4);
  const auto bytes = model_to_bytes(m);
  ASSERT_GE(bytes.size(), 8U);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "CDM1");
  const std::uint32_t header_len = bytes[4] | (bytes[5] << 8) | (bytes[6] << 16) |
                                   (static_cast<std::uint32_t>(bytes[7]) << 24);
  std::size_t floats = 0;
  for (const auto& l : m.layers) floats += l.weight.size() + l.bias.size();
  EXPECT_EQ(bytes.size(), 8 + header_len + 4 * floats);
  EXPECT_EQ(model_from_bytes(bytes), m);
}

TEST(ModelFile, MismatchedKernelNamesLayer) {
  ModelSpec m;
  m.name = "bad";
  m.input_shape = {1, 5, 5};
  m.layers.push_back(conv(1, 2, 3, 0.25f));
  m.layers.push_back(act(LayerKind::kRelu));
  m.layers.push_back(conv(3, 1, 3, 0.25f));  // expects 2 input channels
  try {
    infer_shapes(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
    EXPECT_NE(std::string(e.what()).find("layer 2"), std::string::npos) << e.what();
  }
  auto bytes = model_to_bytes(make_demo_model(1));
  bytes[0] = 'X';
  EXPECT_THROW(model_from_bytes(bytes), Error);
  bytes = model_to_bytes(make_demo_model(1));
  bytes.resize(bytes.size() - 4);
  EXPECT_THROW(model_from_bytes(bytes), Error);
}

TEST(ModelFile, StructuralRulesEnforced) {
  ModelSpec m;
  m.input_shape = {1, 4, 4};
  m.layers = {conv(1, 1, 3, 0.1f), act(LayerKind::kRelu), act(LayerKind::kRelu)};
  EXPECT_THROW(infer_shapes(m), Error);
  LayerDesc res;
  res.kind = LayerKind::kResidualAdd;
  res.source = 1;
  m.layers = {conv(1, 1, 3, 0.1f), res};
  EXPECT_THROW(infer_shapes(m), Error);
}

TEST(PlainInference, IdentityAndZeroModels) {
  const RealTensor x = phantom(8, 1);
  ModelSpec empty;
  empty.input_shape = x.shape;
  EXPECT_EQ(infer_plain_float(empty, x), x);

  ModelSpec ident = empty;
  ident.layers.push_back(conv(1, 1, 1, 1.0f));
  EXPECT_EQ(infer_plain_float(ident, x).data, x.data);

  ModelSpec zero = empty;
  zero.layers = {conv(1, 4, 3, 0.0f), act(LayerKind::kRelu), conv(4, 1, 3, 0.0f)};
  for (double v : infer_plain_float(zero, x).data) EXPECT_EQ(v, 0.0);
  const QuantizedModel q = quantize_model(zero);
  for (const auto& v : infer_plain_fixed(q, quantize_tensor(x, 16)).data) EXPECT_EQ(v, 0);
}

TEST(PlainInference, ReluZeroSetsAgreeExceptQuantizedZeros) {
  ModelSpec m;
  m.input_shape = {1, 1, 4};
  m.layers = {conv(1, 1, 1, 1.0f), act(LayerKind::kRelu)};
  const RealTensor x(m.input_shape, std::vector<double>{-0.5, 0.0, std::ldexp(1.0, -20), 0.25});
  const RealTensor f = infer_plain_float(m, x);
  EXPECT_EQ(f.data, (std::vector<double>{0.0, 0.0, std::ldexp(1.0, -20), 0.25}));
  const IntTensor q = infer_plain_fixed(quantize_model(m), quantize_tensor(x, 16));
  EXPECT_EQ(q.scale, ScaleTag{32});
  EXPECT_EQ(q.data, (std::vector<BigInt>{0, 0, 0, BigInt(1) << 30}));
}

TEST(PlainInference, LeakyReluFixedPoint) {
  ModelSpec m;
  m.input_shape = {1, 1, 3};
  m.layers = {conv(1, 1, 1, 1.0f), act(LayerKind::kLeakyRelu, 0.1f)};
  const RealTensor x(m.input_shape, std::vector<double>{-2.0, 0.0, 3.0});
  const QuantizedModel q = quantize_model(m);
  const IntTensor out = infer_plain_fixed(q, quantize_tensor(x, 16));
  EXPECT_EQ(out.scale, ScaleTag{48});
  const long alpha = std::lround(0.1f * 65536.0);  // weights are quantized from float
  EXPECT_EQ(out.data[0], BigInt(-2L * 65536 * 65536) * alpha);
  EXPECT_EQ(out.data[1], 0);
  EXPECT_EQ(out.data[2], BigInt(3L * 65536 * 65536) << 16);
}

TEST(PlainInference, ResidualFromHiddenLayer) {
  ModelSpec m;
  m.input_shape = {1, 6, 6};
  LayerDesc res;
  res.kind = LayerKind::kResidualAdd;
  res.source = 0;
  m.layers = {conv(1, 2, 3, 0.125f, 0.25f), act(LayerKind::kRelu), conv(2, 2, 3, -0.0625f), res};
  const RealTensor x = phantom(6, 2);
  const auto trace = infer_plain_fixed_trace(quantize_model(m), quantize_tensor(x, 16));
  ASSERT_EQ(trace.size(), 4U);
  EXPECT_EQ(trace[3].scale, ScaleTag{48});
  for (std::size_t k = 0; k < trace[3].data.size(); ++k) {
    EXPECT_EQ(trace[3].data[k], trace[2].data[k] + (trace[0].data[k] << 16));
  }
}

TEST(PlainInference, QuantizationDriftWithinTenSteps) {
  const ModelSpec m = make_demo_model(0);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const RealTensor x = phantom(32, seed);
    const RealTensor f = infer_plain_float(m, x);
    const RealTensor q =
        dequantize_tensor(infer_plain_fixed(quantize_model(m), quantize_tensor(x, 16)));
    for (std::size_t k = 0; k < f.data.size(); ++k) {
      ASSERT_LE(std::abs(f.data[k] - q.data[k]), 10 * std::ldexp(1.0, -16));
    }
  }
}

TEST(PlainInference, GoldenChecksum) {
  const ModelSpec m = make_demo_model(7);
  const RealTensor x = phantom(32, 7);
  const IntTensor out = infer_plain_fixed(quantize_model(m), quantize_tensor(x, 16));
  BigInt sum = 0;
  for (const auto& v : out.data) sum += v;
  EXPECT_EQ(sum.get_str(), "4213914711660802653323");
}

TEST(PlainInference, FixedEngineDetectsModulusOverflow) {
  const ModelSpec m = make_demo_model(0, {1, 8, 8});
  const BigInt small = BigInt(1) << 40;
  EXPECT_THROW(infer_plain_fixed(quantize_model(m), quantize_tensor(phantom(8, 1), 16), &small),
               Error);
}

TEST(Budget, ThreeWeightedLayersReachSixtyFourBits) {
  const ModelSpec m = make_demo_model(0);
  const BudgetReport r = estimate_budget(m, 16);
  EXPECT_EQ(r.max_frac_bits, 64);
  EXPECT_LE(r.required_key_bits, 512U);
}

TEST(Budget, EmptyModelReportsInput) {
  ModelSpec m;
  m.input_shape = {1, 4, 4};
  BudgetOptions o;
  o.input_bound = 3.0;
  const BudgetReport r = estimate_budget(m, 16, o);
  EXPECT_EQ(r.max_frac_bits, 16);
  EXPECT_EQ(r.max_magnitude_bound, 3.0);
  EXPECT_FALSE(r.worst_layer.has_value());
}

TEST(Budget, TenLayersOverflowSixtyFourBitKey) {
  ModelSpec m;
  m.input_shape = {1, 8, 8};
  for (int i = 0; i < 10; ++i) m.layers.push_back(conv(1, 1, 3, 0.5f));
  // Hand accounting: each layer multiplies the bound by 9 * (0.5 + 2^-17)
  // and adds 2^-17, and adds 16 fractional bits.
  double bound = 1.0;
  for (int i = 0; i < 10; ++i) bound = 9 * (0.5 + std::ldexp(1.0, -17)) * bound + std::ldexp(1.0, -17);
  const auto expected = static_cast<std::size_t>(std::floor(std::log2(bound) + 176)) + 3;
  ASSERT_GE(expected, 192U);
  try {
    overflow_budget(m, FixedPointParams{16, (BigInt(1) << 63) + 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOverflowBudget);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("at least " + std::to_string(expected) + " bits"), std::string::npos)
        << msg;
  }
  EXPECT_EQ(estimate_budget(m, 16).required_key_bits, expected);
}

TEST(Budget, ActivationsAddPerturbationHeadroom) {
  ModelSpec m;
  m.input_shape = {1, 4, 4};
  m.layers = {conv(1, 1, 1, 1.0f), act(LayerKind::kRelu)};
  BudgetOptions o;
  o.perturbation_bits = 0;
  const auto without = estimate_budget(m, 16, o).required_key_bits;
  o.perturbation_bits = 16;
  EXPECT_EQ(estimate_budget(m, 16, o).required_key_bits, without + 16);
}

}  // namespace
}  // namespace cipherdenoise
