// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "cipherdenoise/train.hpp"

#include <cmath>

#include "cipherdenoise/error.hpp"
#include "cipherdenoise/image.hpp"

namespace cipherdenoise {
namespace {

// dL/d(input) and dL/d(weight, bias) for conv (transpose = false) or
// conv_transpose, given dL/d(output).
void conv_backward(const LayerDesc& layer, bool transpose, const RealTensor& input,
                   const RealTensor& grad_out, RealTensor& grad_in,
                   std::vector<double>& grad_w, std::vector<double>& grad_b) {
  const std::size_t k = layer.kernel_size;
  const auto pad = static_cast<std::ptrdiff_t>(layer.padding);
  const std::size_t s = layer.stride;
  grad_in = RealTensor(input.shape, 0.0, input.scale);
  for (std::size_t oc = 0; oc < grad_out.shape.channels; ++oc) {
    for (std::size_t i = 0; i < grad_out.shape.plane(); ++i) {
      if (!grad_b.empty()) grad_b[oc] += grad_out.data[oc * grad_out.shape.plane() + i];
    }
  }
  if (!transpose) {
    for (std::size_t oc = 0; oc < grad_out.shape.channels; ++oc) {
      for (std::size_t oy = 0; oy < grad_out.shape.height; ++oy) {
        for (std::size_t ox = 0; ox < grad_out.shape.width; ++ox) {
          const double g = grad_out.at(oc, oy, ox);
          for (std::size_t ic = 0; ic < layer.in_channels; ++ic) {
            for (std::size_t ky = 0; ky < k; ++ky) {
              const auto iy = static_cast<std::ptrdiff_t>(oy * s + ky) - pad;
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(input.shape.height)) continue;
              for (std::size_t kx = 0; kx < k; ++kx) {
                const auto ix = static_cast<std::ptrdiff_t>(ox * s + kx) - pad;
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(input.shape.width)) continue;
                const std::size_t w = ((oc * layer.in_channels + ic) * k + ky) * k + kx;
                const std::size_t in = input.shape.index(ic, static_cast<std::size_t>(iy),
                                                         static_cast<std::size_t>(ix));
                grad_w[w] += g * input.data[in];
                grad_in.data[in] += g * layer.weight[w];
              }
            }
          }
        }
      }
    }
    return;
  }
  for (std::size_t ic = 0; ic < layer.in_channels; ++ic) {
    for (std::size_t iy = 0; iy < input.shape.height; ++iy) {
      for (std::size_t ix = 0; ix < input.shape.width; ++ix) {
        const std::size_t in = input.shape.index(ic, iy, ix);
        for (std::size_t oc = 0; oc < layer.out_channels; ++oc) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            const auto oy = static_cast<std::ptrdiff_t>(iy * s + ky) - pad;
            if (oy < 0 || oy >= static_cast<std::ptrdiff_t>(grad_out.shape.height)) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const auto ox = static_cast<std::ptrdiff_t>(ix * s + kx) - pad;
              if (ox < 0 || ox >= static_cast<std::ptrdiff_t>(grad_out.shape.width)) continue;
              const std::size_t w = ((ic * layer.out_channels + oc) * k + ky) * k + kx;
              const double g = grad_out.at(oc, static_cast<std::size_t>(oy),
                                           static_cast<std::size_t>(ox));
              grad_w[w] += g * input.data[in];
              grad_in.data[in] += g * layer.weight[w];
            }
          }
        }
      }
    }
  }
}

void accumulate(RealTensor& into, const RealTensor& g) {
  if (into.data.empty()) {
    into = g;
    return;
  }
  for (std::size_t i = 0; i < g.data.size(); ++i) into.data[i] += g.data[i];
}

}  // namespace

double mse_gradient(const ModelSpec& model, const RealTensor& input,
                    const RealTensor& target, std::vector<std::vector<double>>& weight_grad,
                    std::vector<std::vector<double>>& bias_grad) {
  const auto trace = infer_plain_float_trace(model, input);
  const RealTensor& output = trace.empty() ? input : trace.back();
  if (output.shape != target.shape) {
    throw Error(ErrorCode::kShapeMismatch, "target shape differs from model output");
  }
  const std::size_t layers = model.layers.size();
  weight_grad.resize(layers);
  bias_grad.resize(layers);
  for (std::size_t i = 0; i < layers; ++i) {
    weight_grad[i].assign(model.layers[i].weight.size(), 0.0);
    bias_grad[i].assign(model.layers[i].bias.size(), 0.0);
  }
  const double count = static_cast<double>(output.data.size());
  double loss = 0.0;
  std::vector<RealTensor> grads(layers);
  grads.back() = RealTensor(output.shape, 0.0, {});
  for (std::size_t i = 0; i < output.data.size(); ++i) {
    const double d = output.data[i] - target.data[i];
    loss += d * d;
    grads.back().data[i] = 2.0 * d / count;
  }
  for (std::size_t i = layers; i-- > 0;) {
    const LayerDesc& layer = model.layers[i];
    const RealTensor& in = i == 0 ? input : trace[i - 1];
    RealTensor& g = grads[i];
    RealTensor g_in;
    switch (layer.kind) {
      case LayerKind::kConv:
      case LayerKind::kConvTranspose:
        conv_backward(layer, layer.kind == LayerKind::kConvTranspose, in, g, g_in,
                      weight_grad[i], bias_grad[i]);
        break;
      case LayerKind::kRelu:
      case LayerKind::kLeakyRelu: {
        const double slope = layer.kind == LayerKind::kRelu ? 0.0 : layer.alpha;
        g_in = g;
        for (std::size_t k = 0; k < g_in.data.size(); ++k) {
          if (in.data[k] < 0.0) g_in.data[k] *= slope;
        }
        break;
      }
      case LayerKind::kResidualAdd:
        g_in = g;
        if (layer.source >= 0) accumulate(grads[static_cast<std::size_t>(layer.source)], g);
        break;
      case LayerKind::kLinear:
        throw Error(ErrorCode::kTrainingError, "linear layers are not trainable here");
    }
    if (i > 0) accumulate(grads[i - 1], g_in);
  }
  return loss / count;
}

TrainResult train_demo(const TrainOptions& options) {
  if (options.images == 0 || options.epochs == 0 || options.size < 4) {
    throw Error(ErrorCode::kTrainingError, "need images, epochs and size >= 4");
  }
  const RandomSource root(options.seed);
  TrainResult result;
  result.model = make_demo_model(options.seed, {1, options.size, options.size},
                                 options.frac_bits);
  result.model.name = "demo-redcnn";
  ModelSpec& model = result.model;

  auto make_pairs = [&](std::string_view label, std::size_t count) {
    RandomSource rng = root.derive(label);
    std::vector<std::pair<RealTensor, RealTensor>> pairs;
    for (std::size_t i = 0; i < count; ++i) {
      RealTensor clean = make_phantom(options.size, rng);
      RealTensor noisy = add_noise(clean, options.noise_sigma, rng);
      pairs.emplace_back(std::move(noisy), std::move(clean));
    }
    return pairs;
  };
  const auto train = make_pairs("train", options.images);
  const auto held_out = make_pairs("held-out", 8);

  // Adam state per parameter vector.
  const std::size_t layers = model.layers.size();
  std::vector<std::vector<double>> m_w(layers), v_w(layers), m_b(layers), v_b(layers);
  for (std::size_t i = 0; i < layers; ++i) {
    m_w[i].assign(model.layers[i].weight.size(), 0.0);
    v_w[i] = m_w[i];
    m_b[i].assign(model.layers[i].bias.size(), 0.0);
    v_b[i] = m_b[i];
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::size_t step = 0;
  auto adam = [&](std::vector<float>& params, const std::vector<double>& grad,
                  std::vector<double>& m, std::vector<double>& v) {
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
    for (std::size_t k = 0; k < params.size(); ++k) {
      m[k] = kBeta1 * m[k] + (1.0 - kBeta1) * grad[k];
      v[k] = kBeta2 * v[k] + (1.0 - kBeta2) * grad[k] * grad[k];
      params[k] -= static_cast<float>(options.learning_rate * (m[k] / c1) /
                                      (std::sqrt(v[k] / c2) + kEps));
    }
  };

  RandomSource order_rng = root.derive("order");
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<std::vector<double>> grad_w, grad_b;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[order_rng.uniform(i)]);
    }
    double total = 0.0;
    for (std::size_t idx : order) {
      total += mse_gradient(model, train[idx].first, train[idx].second, grad_w, grad_b);
      ++step;
      for (std::size_t i = 0; i < layers; ++i) {
        adam(model.layers[i].weight, grad_w[i], m_w[i], v_w[i]);
        adam(model.layers[i].bias, grad_b[i], m_b[i], v_b[i]);
      }
    }
    const double mean = total / static_cast<double>(order.size());
    if (!std::isfinite(mean)) {
      throw Error(ErrorCode::kTrainingError,
                  "loss diverged at epoch " + std::to_string(epoch + 1));
    }
    result.epoch_loss.push_back(mean);
  }

  snap_to_grid(model, options.frac_bits);
  double in_sum = 0.0, out_sum = 0.0;
  for (const auto& [noisy, clean] : held_out) {
    in_sum += psnr(clean, noisy);
    out_sum += psnr(clean, infer_plain_float(model, noisy));
  }
  result.input_psnr_db = in_sum / static_cast<double>(held_out.size());
  result.output_psnr_db = out_sum / static_cast<double>(held_out.size());
  return result;
}

}  // namespace cipherdenoise
