// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "cipherdenoise/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <utility>

#include "cipherdenoise/error.hpp"
#include "cipherdenoise/random.hpp"
#include "io_util.hpp"
#include "json.hpp"

namespace cipherdenoise {
namespace {

constexpr std::string_view kModelMagic = "CDM1";

Error layer_error(ErrorCode code, std::size_t index, LayerKind kind,
                  const std::string& what) {
  return Error(code, "layer " + std::to_string(index) + " (" +
                         std::string(to_string(kind)) + "): " + what);
}

std::int64_t quantize_weight(float w, int frac_bits) {
  const BigInt q = quantize(static_cast<double>(w), frac_bits);
  if (!q.fits_slong_p() || abs(q) >= (BigInt(1) << 62)) {
    throw Error(ErrorCode::kEncodeOverflow, "weight too large for its scale");
  }
  return q.get_si();
}

KernelT<double> float_kernel(const LayerDesc& layer) {
  KernelT<double> k;
  k.out_channels = layer.out_channels;
  k.in_channels = layer.in_channels;
  k.kernel_size = layer.kernel_size;
  k.weights.assign(layer.weight.begin(), layer.weight.end());
  return k;
}

void append_f32(std::vector<std::uint8_t>& out, float v) {
  static_assert(sizeof(float) == 4);
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

float read_f32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t bits = 0;
  for (int i = 3; i >= 0; --i) bits = (bits << 8) | bytes[offset + i];
  return std::bit_cast<float>(bits);
}

void check_modulus(const IntTensor& t, const BigInt* modulus, std::size_t index,
                   LayerKind kind) {
  if (modulus == nullptr) return;
  for (const auto& v : t.data) {
    if (2 * abs(v) >= *modulus) {
      throw layer_error(ErrorCode::kOverflowBudget, index, kind,
                        "intermediate value exceeds n/2");
    }
  }
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kConvTranspose: return "conv_transpose";
    case LayerKind::kLinear: return "linear";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kLeakyRelu: return "leaky_relu";
    case LayerKind::kResidualAdd: return "residual_add";
  }
  return "unknown";
}

LayerKind layer_kind_from_string(std::string_view name) {
  for (auto kind : {LayerKind::kConv, LayerKind::kConvTranspose, LayerKind::kLinear,
                    LayerKind::kRelu, LayerKind::kLeakyRelu, LayerKind::kResidualAdd}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorCode::kParseError, "unknown layer kind '" + std::string(name) + "'");
}

std::size_t LayerDesc::expected_weight_count() const {
  switch (kind) {
    case LayerKind::kConv:
    case LayerKind::kConvTranspose:
      return in_channels * out_channels * kernel_size * kernel_size;
    case LayerKind::kLinear:
      return in_channels * out_channels;
    default:
      return 0;
  }
}

std::size_t LayerDesc::expected_bias_count() const {
  return has_weights() ? out_channels : 0;
}

bool ModelSpec::linear() const { return activation_count() == 0; }

std::size_t ModelSpec::activation_count() const {
  return static_cast<std::size_t>(std::count_if(
      layers.begin(), layers.end(), [](const LayerDesc& l) { return l.is_activation(); }));
}

bool QuantizedModel::linear() const { return activation_count() == 0; }

std::size_t QuantizedModel::activation_count() const {
  return static_cast<std::size_t>(
      std::count_if(layers.begin(), layers.end(),
                    [](const QuantizedLayer& l) { return l.is_activation(); }));
}

std::vector<Shape> infer_shapes(const ModelSpec& model) {
  if (model.input_shape.size() == 0) {
    throw Error(ErrorCode::kShapeMismatch, "model input shape is empty");
  }
  if (model.frac_bits_input < 0 || model.frac_bits_weights < 0) {
    throw Error(ErrorCode::kParseError, "frac_bits must be non-negative");
  }
  std::vector<Shape> shapes;
  Shape current = model.input_shape;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerDesc& layer = model.layers[i];
    if (layer.weight.size() != layer.expected_weight_count()) {
      throw layer_error(ErrorCode::kShapeMismatch, i, layer.kind,
                        "expected " + std::to_string(layer.expected_weight_count()) +
                            " weights, found " + std::to_string(layer.weight.size()));
    }
    if (!layer.bias.empty() && layer.bias.size() != layer.expected_bias_count()) {
      throw layer_error(ErrorCode::kShapeMismatch, i, layer.kind,
                        "expected " + std::to_string(layer.expected_bias_count()) +
                            " biases, found " + std::to_string(layer.bias.size()));
    }
    try {
      switch (layer.kind) {
        case LayerKind::kConv:
        case LayerKind::kConvTranspose: {
          if (layer.in_channels != current.channels) {
            throw layer_error(ErrorCode::kShapeMismatch, i, layer.kind,
                              "expects " + std::to_string(layer.in_channels) +
                                  " input channels, receives " +
                                  std::to_string(current.channels));
          }
          if (layer.kernel_size == 0 || layer.out_channels == 0) {
            throw layer_error(ErrorCode::kShapeMismatch, i, layer.kind,
                              "kernel size and channel count must be positive");
          }
          const ConvParams p{layer.stride, layer.padding};
          current = layer.kind == LayerKind::kConv
                        ? conv_output_shape(current, layer.out_channels,
                                            layer.kernel_size, p)
                        : conv_transpose_output_shape(current, layer.out_channels,
                                                      layer.kernel_size, p);
          break;
        }
        case LayerKind::kLinear:
          if (layer.in_channels != current.size() || layer.out_channels == 0) {
            throw layer_error(ErrorCode::kShapeMismatch, i, layer.kind,
                              "expects " + std::to_string(layer.in_channels) +
                                  " input features, receives " +
                                  std::to_string(current.size()));
          }
          current = Shape{layer.out_channels, 1, 1};
          break;
        case LayerKind::kRelu:
        case LayerKind::kLeakyRelu:
          if (i > 0 && model.layers[i - 1].is_activation()) {
            throw layer_error(ErrorCode::kShapeMismatch, i, layer.kind,
                              "two consecutive activations");
          }
          break;
        case LayerKind::kResidualAdd: {
          if (layer.source < -1 || layer.source >= static_cast<int>(i)) {
            throw layer_error(ErrorCode::kShapeMismatch, i, layer.kind,
                              "residual source must reference an earlier layer");
          }
          const Shape src = layer.source < 0
                                ? model.input_shape
                                : shapes[static_cast<std::size_t>(layer.source)];
          if (src != current) {
            throw layer_error(ErrorCode::kShapeMismatch, i, layer.kind,
                              "residual source shape " + src.str() +
                                  " differs from " + current.str());
          }
          break;
        }
      }
    } catch (const Error& e) {
      if (std::string_view(e.what()).find("layer ") != std::string_view::npos) throw;
      throw layer_error(e.code(), i, layer.kind, e.what());
    }
    shapes.push_back(current);
  }
  return shapes;
}

std::vector<std::uint8_t> model_to_bytes(const ModelSpec& model) {
  infer_shapes(model);
  nlohmann::ordered_json header;
  header["name"] = model.name;
  header["input_shape"] = {model.input_shape.channels, model.input_shape.height,
                           model.input_shape.width};
  header["frac_bits"] = model.frac_bits_input;
  header["frac_bits_weights"] = model.frac_bits_weights;
  header["layers"] = nlohmann::ordered_json::array();
  std::vector<std::uint8_t> blob;
  for (const auto& layer : model.layers) {
    nlohmann::ordered_json l;
    l["kind"] = to_string(layer.kind);
    if (layer.has_weights()) {
      l["in_channels"] = layer.in_channels;
      l["out_channels"] = layer.out_channels;
      if (layer.kind != LayerKind::kLinear) {
        l["kernel_size"] = layer.kernel_size;
        l["stride"] = layer.stride;
        l["padding"] = layer.padding;
      }
      l["weight_count"] = layer.weight.size();
      l["bias_count"] = layer.bias.size();
    }
    if (layer.kind == LayerKind::kLeakyRelu) l["alpha"] = layer.alpha;
    if (layer.kind == LayerKind::kResidualAdd) l["source"] = layer.source;
    header["layers"].push_back(std::move(l));
    for (float w : layer.weight) append_f32(blob, w);
    for (float b : layer.bias) append_f32(blob, b);
  }
  const std::string text = header.dump();
  std::vector<std::uint8_t> out(kModelMagic.begin(), kModelMagic.end());
  const auto len = static_cast<std::uint32_t>(text.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), blob.begin(), blob.end());
  return out;
}

ModelSpec model_from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 ||
      std::memcmp(bytes.data(), kModelMagic.data(), kModelMagic.size()) != 0) {
    throw Error(ErrorCode::kParseError, "missing CDM1 magic");
  }
  std::uint32_t len = 0;
  for (int i = 3; i >= 0; --i) len = (len << 8) | bytes[4 + i];
  if (bytes.size() < 8 + static_cast<std::size_t>(len)) {
    throw Error(ErrorCode::kParseError, "truncated model header");
  }
  ModelSpec model;
  std::size_t offset = 8 + len;
  try {
    const auto header = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + len);
    model.name = header.at("name").get<std::string>();
    const auto shape = header.at("input_shape").get<std::vector<std::size_t>>();
    if (shape.size() != 3) throw Error(ErrorCode::kParseError, "input_shape needs 3 dims");
    model.input_shape = Shape{shape[0], shape[1], shape[2]};
    model.frac_bits_input = header.value("frac_bits", kDefaultFracBits);
    model.frac_bits_weights = header.at("frac_bits_weights").get<int>();
    for (const auto& l : header.at("layers")) {
      LayerDesc layer;
      layer.kind = layer_kind_from_string(l.at("kind").get<std::string>());
      layer.in_channels = l.value("in_channels", std::size_t{0});
      layer.out_channels = l.value("out_channels", std::size_t{0});
      layer.kernel_size = l.value("kernel_size", std::size_t{0});
      layer.stride = l.value("stride", std::size_t{1});
      layer.padding = l.value("padding", std::size_t{0});
      layer.alpha = l.value("alpha", 0.0f);
      layer.source = l.value("source", -1);
      const auto weights = l.value("weight_count", std::size_t{0});
      const auto biases = l.value("bias_count", std::size_t{0});
      if (bytes.size() < offset + 4 * (weights + biases)) {
        throw Error(ErrorCode::kParseError, "weight blob truncated");
      }
      for (std::size_t i = 0; i < weights; ++i, offset += 4) {
        layer.weight.push_back(read_f32(bytes, offset));
      }
      for (std::size_t i = 0; i < biases; ++i, offset += 4) {
        layer.bias.push_back(read_f32(bytes, offset));
      }
      model.layers.push_back(std::move(layer));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("model header: ") + e.what());
  }
  if (offset != bytes.size()) {
    throw Error(ErrorCode::kParseError, "trailing bytes after weight blob");
  }
  infer_shapes(model);
  return model;
}

void save_model(const std::filesystem::path& path, const ModelSpec& model) {
  detail::write_binary(path, model_to_bytes(model));
}

ModelSpec load_model(const std::filesystem::path& path) {
  return model_from_bytes(detail::read_binary(path));
}

QuantizedModel quantize_model(const ModelSpec& model) {
  const std::vector<Shape> shapes = infer_shapes(model);
  QuantizedModel q;
  q.name = model.name;
  q.input_shape = model.input_shape;
  q.frac_bits_input = model.frac_bits_input;
  q.frac_bits_weights = model.frac_bits_weights;
  const int fw = model.frac_bits_weights;
  ScaleTag scale{model.frac_bits_input};
  Shape shape = model.input_shape;
  std::vector<ScaleTag> out_scales;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerDesc& layer = model.layers[i];
    QuantizedLayer ql;
    ql.kind = layer.kind;
    ql.in_shape = shape;
    ql.out_shape = shapes[i];
    ql.in_scale = scale;
    ql.conv = ConvParams{layer.stride, layer.padding};
    ql.source = layer.source;
    switch (layer.kind) {
      case LayerKind::kConv:
      case LayerKind::kConvTranspose:
        ql.kernel.out_channels = layer.out_channels;
        ql.kernel.in_channels = layer.in_channels;
        ql.kernel.kernel_size = layer.kernel_size;
        ql.kernel.frac_bits = fw;
        for (float w : layer.weight) ql.kernel.weights.push_back(quantize_weight(w, fw));
        ql.out_scale = scale.plus(fw);
        break;
      case LayerKind::kLinear:
        ql.matrix.rows = layer.out_channels;
        ql.matrix.cols = layer.in_channels;
        ql.matrix.frac_bits = fw;
        for (float w : layer.weight) ql.matrix.weights.push_back(quantize_weight(w, fw));
        ql.out_scale = scale.plus(fw);
        break;
      case LayerKind::kRelu:
        ql.out_scale = scale;
        break;
      case LayerKind::kLeakyRelu:
        ql.alpha = quantize_weight(layer.alpha, fw);
        ql.alpha_bits = fw;
        ql.out_scale = scale.plus(fw);
        break;
      case LayerKind::kResidualAdd:
        ql.source_scale = layer.source < 0
                              ? ScaleTag{model.frac_bits_input}
                              : out_scales[static_cast<std::size_t>(layer.source)];
        ql.out_scale = std::max(scale, ql.source_scale);
        break;
    }
    if (layer.has_weights() && !layer.bias.empty()) {
      ql.bias = IntTensor(Shape{layer.out_channels, 1, 1}, BigInt(0), ql.out_scale);
      for (std::size_t c = 0; c < layer.bias.size(); ++c) {
        ql.bias.data[c] = quantize(layer.bias[c], ql.out_scale.total_frac_bits);
      }
    }
    scale = ql.out_scale;
    shape = ql.out_shape;
    out_scales.push_back(scale);
    q.layers.push_back(std::move(ql));
  }
  q.output_scale = scale;
  q.output_shape = shape;
  return q;
}

std::vector<RealTensor> infer_plain_float_trace(const ModelSpec& model,
                                                const RealTensor& image) {
  infer_shapes(model);
  if (image.shape != model.input_shape) {
    throw Error(ErrorCode::kShapeMismatch, "image shape " + image.shape.str() +
                                               " differs from model input " +
                                               model.input_shape.str());
  }
  std::vector<RealTensor> outputs;
  RealTensor x = image;
  for (const LayerDesc& layer : model.layers) {
    const ConvParams p{layer.stride, layer.padding};
    switch (layer.kind) {
      case LayerKind::kConv:
        x = conv2d_plain(x, float_kernel(layer), p);
        break;
      case LayerKind::kConvTranspose:
        x = conv2d_transpose_plain(x, float_kernel(layer), p);
        break;
      case LayerKind::kLinear: {
        MatrixT<double> m{layer.out_channels, layer.in_channels,
                          std::vector<double>(layer.weight.begin(), layer.weight.end()), 0};
        x = linear_plain(x, m);
        break;
      }
      case LayerKind::kRelu:
        for (auto& v : x.data) v = v >= 0.0 ? v : 0.0;
        break;
      case LayerKind::kLeakyRelu:
        for (auto& v : x.data) v = v >= 0.0 ? v : static_cast<double>(layer.alpha) * v;
        break;
      case LayerKind::kResidualAdd: {
        const RealTensor& src =
            layer.source < 0 ? image : outputs[static_cast<std::size_t>(layer.source)];
        for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += src.data[i];
        break;
      }
    }
    if (layer.has_weights() && !layer.bias.empty()) {
      x = bias_add_plain(x, std::vector<double>(layer.bias.begin(), layer.bias.end()));
    }
    x.scale = ScaleTag{};
    outputs.push_back(x);
  }
  return outputs;
}

RealTensor infer_plain_float(const ModelSpec& model, const RealTensor& image) {
  auto trace = infer_plain_float_trace(model, image);
  return trace.empty() ? image : trace.back();
}

std::vector<IntTensor> infer_plain_fixed_trace(const QuantizedModel& model,
                                               const IntTensor& input,
                                               const BigInt* modulus) {
  if (input.shape != model.input_shape) {
    throw Error(ErrorCode::kShapeMismatch, "input shape " + input.shape.str() +
                                               " differs from model input " +
                                               model.input_shape.str());
  }
  if (input.scale != ScaleTag{model.frac_bits_input}) {
    throw Error(ErrorCode::kScaleMismatch, "input not encoded at the model's frac_bits");
  }
  std::vector<IntTensor> outputs;
  IntTensor x = input;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const QuantizedLayer& layer = model.layers[i];
    switch (layer.kind) {
      case LayerKind::kConv:
        x = conv2d_plain(x, layer.kernel, layer.conv);
        break;
      case LayerKind::kConvTranspose:
        x = conv2d_transpose_plain(x, layer.kernel, layer.conv);
        break;
      case LayerKind::kLinear:
        x = linear_plain(x, layer.matrix);
        break;
      case LayerKind::kRelu:
        for (auto& v : x.data) {
          if (v < 0) v = 0;
        }
        break;
      case LayerKind::kLeakyRelu:
        for (auto& v : x.data) {
          if (v >= 0) {
            v <<= layer.alpha_bits;
          } else {
            v *= from_int64(layer.alpha);
          }
        }
        x.scale = layer.out_scale;
        break;
      case LayerKind::kResidualAdd: {
        IntTensor src = layer.source < 0 ? input
                                         : outputs[static_cast<std::size_t>(layer.source)];
        const int target = layer.out_scale.total_frac_bits;
        const int shift_x = target - x.scale.total_frac_bits;
        const int shift_src = target - src.scale.total_frac_bits;
        for (std::size_t k = 0; k < x.data.size(); ++k) {
          x.data[k] = (x.data[k] << shift_x) + (src.data[k] << shift_src);
        }
        x.scale = layer.out_scale;
        break;
      }
    }
    if (layer.bias.size() > 0) x = bias_add_plain(x, layer.bias.data);
    check_modulus(x, modulus, i, layer.kind);
    outputs.push_back(x);
  }
  return outputs;
}

IntTensor infer_plain_fixed(const QuantizedModel& model, const IntTensor& input,
                            const BigInt* modulus) {
  auto trace = infer_plain_fixed_trace(model, input, modulus);
  return trace.empty() ? input : trace.back();
}

std::vector<LayerDrift> quantization_drift(const ModelSpec& model,
                                           const RealTensor& image) {
  const QuantizedModel q = quantize_model(model);
  const auto fixed = infer_plain_fixed_trace(q, quantize_tensor(image, model.frac_bits_input));
  const auto real = infer_plain_float_trace(model, image);
  std::vector<LayerDrift> drift;
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    LayerDrift d{i, model.layers[i].kind, 0.0};
    const RealTensor deq = dequantize_tensor(fixed[i]);
    for (std::size_t k = 0; k < deq.data.size(); ++k) {
      d.max_abs_diff = std::max(d.max_abs_diff, std::abs(deq.data[k] - real[i].data[k]));
    }
    drift.push_back(d);
  }
  return drift;
}

void snap_to_grid(ModelSpec& model, int frac_bits) {
  auto snap = [frac_bits](float& v) {
    v = static_cast<float>(std::ldexp(std::round(std::ldexp(double{v}, frac_bits)), -frac_bits));
  };
  for (auto& layer : model.layers) {
    std::for_each(layer.weight.begin(), layer.weight.end(), snap);
    std::for_each(layer.bias.begin(), layer.bias.end(), snap);
    snap(layer.alpha);
  }
}

namespace {

LayerDesc random_conv(LayerKind kind, std::size_t in, std::size_t out, std::size_t k,
                      double weight_std, RandomSource& rng) {
  LayerDesc l;
  l.kind = kind;
  l.in_channels = in;
  l.out_channels = out;
  l.kernel_size = k;
  l.stride = 1;
  l.padding = k / 2;
  l.weight.resize(l.expected_weight_count());
  for (auto& w : l.weight) w = static_cast<float>(rng.normal() * weight_std);
  l.bias.resize(out);
  for (auto& b : l.bias) b = static_cast<float>(rng.normal() * 0.01);
  return l;
}

LayerDesc activation(LayerKind kind) {
  LayerDesc l;
  l.kind = kind;
  return l;
}

}  // namespace

ModelSpec make_demo_model(std::uint64_t seed, Shape input_shape, int frac_bits_weights) {
  RandomSource rng = RandomSource(seed).derive("demo-model");
  ModelSpec m;
  m.name = "demo-redcnn";
  m.input_shape = input_shape;
  m.frac_bits_weights = frac_bits_weights;
  const std::size_t c = input_shape.channels;
  m.layers.push_back(random_conv(LayerKind::kConv, c, 8, 3, std::sqrt(1.0 / (9.0 * c)), rng));
  m.layers.push_back(activation(LayerKind::kRelu));
  m.layers.push_back(random_conv(LayerKind::kConv, 8, 8, 3, std::sqrt(1.0 / 72.0), rng));
  m.layers.push_back(activation(LayerKind::kRelu));
  m.layers.push_back(
      random_conv(LayerKind::kConvTranspose, 8, c, 3, std::sqrt(0.5 / 72.0), rng));
  LayerDesc residual;
  residual.kind = LayerKind::kResidualAdd;
  residual.source = -1;
  m.layers.push_back(residual);
  snap_to_grid(m, frac_bits_weights);
  return m;
}

ModelSpec make_linear_demo_model(std::uint64_t seed, Shape input_shape,
                                 int frac_bits_weights) {
  RandomSource rng = RandomSource(seed).derive("linear-demo-model");
  ModelSpec m;
  m.name = "demo-linear";
  m.input_shape = input_shape;
  m.frac_bits_weights = frac_bits_weights;
  const std::size_t c = input_shape.channels;
  m.layers.push_back(random_conv(LayerKind::kConv, c, 4, 3, std::sqrt(1.0 / (9.0 * c)), rng));
  m.layers.push_back(
      random_conv(LayerKind::kConvTranspose, 4, c, 3, std::sqrt(0.5 / 36.0), rng));
  LayerDesc residual;
  residual.kind = LayerKind::kResidualAdd;
  residual.source = -1;
  m.layers.push_back(residual);
  snap_to_grid(m, frac_bits_weights);
  return m;
}

}  // namespace cipherdenoise
