// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cipherdenoise/encoding.hpp"
#include "cipherdenoise/plain_ops.hpp"
#include "cipherdenoise/tensor.hpp"

namespace cipherdenoise {

enum class LayerKind {
  kConv,
  kConvTranspose,
  kLinear,
  kRelu,
  kLeakyRelu,
  kResidualAdd,
};

std::string_view to_string(LayerKind kind);
LayerKind layer_kind_from_string(std::string_view name);

/// One layer of a model file. For linear layers in/out_channels are the
/// in/out feature counts over the flattened input.
struct LayerDesc {
  LayerKind kind = LayerKind::kConv;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel_size = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::vector<float> weight;
  std::vector<float> bias;
  float alpha = 0.0f;  // leaky_relu negative slope
  int source = -1;     // residual_add: -1 = model input, k = output of layer k

  bool is_activation() const {
    return kind == LayerKind::kRelu || kind == LayerKind::kLeakyRelu;
  }
  bool has_weights() const {
    return kind == LayerKind::kConv || kind == LayerKind::kConvTranspose ||
           kind == LayerKind::kLinear;
  }
  std::size_t expected_weight_count() const;
  std::size_t expected_bias_count() const;

  bool operator==(const LayerDesc&) const = default;
};

struct ModelSpec {
  std::string name;
  Shape input_shape;
  int frac_bits_input = kDefaultFracBits;
  int frac_bits_weights = kDefaultFracBits;
  std::vector<LayerDesc> layers;

  /// True when the model has no activation layers (linear framework).
  bool linear() const;
  std::size_t activation_count() const;

  bool operator==(const ModelSpec&) const = default;
};

/// Validates the layer chain and returns the output shape of every layer.
/// Throws kShapeMismatch naming the offending layer index.
std::vector<Shape> infer_shapes(const ModelSpec& model);

// `.cdm` container: "CDM1", u32 little-endian JSON header length, UTF-8 JSON
// header, then float32 little-endian weights and biases in layer order.
std::vector<std::uint8_t> model_to_bytes(const ModelSpec& model);
ModelSpec model_from_bytes(std::span<const std::uint8_t> bytes);
void save_model(const std::filesystem::path& path, const ModelSpec& model);
/// Parses and validates. Throws kParseError or kShapeMismatch.
ModelSpec load_model(const std::filesystem::path& path);

/// A layer with weights quantized once and biases pre-aligned to the scale
/// they meet at runtime.
struct QuantizedLayer {
  LayerKind kind = LayerKind::kConv;
  Shape in_shape;
  Shape out_shape;
  ScaleTag in_scale;
  ScaleTag out_scale;
  ConvParams conv;
  Kernel kernel;           // conv / conv_transpose
  Matrix matrix;           // linear
  IntTensor bias;          // (out_channels,1,1) at out_scale; empty if none
  std::int64_t alpha = 0;  // leaky slope at alpha_bits
  int alpha_bits = 0;
  int source = -1;
  ScaleTag source_scale;

  bool is_activation() const {
    return kind == LayerKind::kRelu || kind == LayerKind::kLeakyRelu;
  }
};

struct QuantizedModel {
  std::string name;
  Shape input_shape;
  Shape output_shape;
  int frac_bits_input = kDefaultFracBits;
  int frac_bits_weights = kDefaultFracBits;
  ScaleTag output_scale;
  std::vector<QuantizedLayer> layers;

  bool linear() const;
  std::size_t activation_count() const;
};

QuantizedModel quantize_model(const ModelSpec& model);

RealTensor infer_plain_float(const ModelSpec& model, const RealTensor& image);
std::vector<RealTensor> infer_plain_float_trace(const ModelSpec& model,
                                                const RealTensor& image);

/// Exact integer forward pass mirroring the encrypted pipeline. `input` must
/// carry ScaleTag{frac_bits_input}. With a modulus, throws kOverflowBudget as
/// soon as any intermediate would not center-lift uniquely mod n.
IntTensor infer_plain_fixed(const QuantizedModel& model, const IntTensor& input,
                            const BigInt* modulus = nullptr);
std::vector<IntTensor> infer_plain_fixed_trace(const QuantizedModel& model,
                                               const IntTensor& input,
                                               const BigInt* modulus = nullptr);

/// Max |fixed - float| per layer, in real units.
struct LayerDrift {
  std::size_t layer = 0;
  LayerKind kind = LayerKind::kConv;
  double max_abs_diff = 0.0;
};
std::vector<LayerDrift> quantization_drift(const ModelSpec& model,
                                           const RealTensor& image);

/// conv(1->8,3x3) -> relu -> conv(8->8,3x3) -> relu -> conv_transpose(8->1,3x3)
/// -> residual add of the input. Random weights, already on the 2^-fw grid.
ModelSpec make_demo_model(std::uint64_t seed, Shape input_shape = {1, 32, 32},
                          int frac_bits_weights = kDefaultFracBits);

/// Small conv -> conv_transpose model with no activations.
ModelSpec make_linear_demo_model(std::uint64_t seed, Shape input_shape = {1, 32, 32},
                                 int frac_bits_weights = kDefaultFracBits);

/// Rounds every weight, bias and alpha to a multiple of 2^-frac_bits.
void snap_to_grid(ModelSpec& model, int frac_bits);

}  // namespace cipherdenoise
