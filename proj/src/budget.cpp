// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "cipherdenoise/budget.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cipherdenoise/error.hpp"

namespace cipherdenoise {
namespace {

struct LayerBound {
  int scale = 0;
  double bound = 0.0;
  std::size_t bits_needed = 0;
};

// Bits of n needed so that 2 * bound * 2^scale * 2^extra < n.
std::size_t bits_needed(double bound, int scale, int extra) {
  const double log_bound = bound > 0.0 ? std::log2(bound) : -1e9;
  const double log_mag = log_bound + scale + extra;
  // M < 2^(floor(log2 M) + 1), and n >= 2^(bits - 1) must exceed 2M.
  if (log_mag < 0) return 2;
  return static_cast<std::size_t>(std::floor(log_mag)) + 3;
}

double max_abs(const std::vector<float>& v) {
  double m = 0.0;
  for (float x : v) m = std::max(m, std::abs(static_cast<double>(x)));
  return m;
}

std::vector<LayerBound> walk(const ModelSpec& model, int input_frac_bits,
                             const BudgetOptions& options) {
  infer_shapes(model);
  std::vector<LayerBound> out;
  int scale = input_frac_bits;
  double bound = options.input_bound;
  const int fw = model.frac_bits_weights;
  // Quantized weights may exceed the real ones by half a step.
  const double half_step = std::ldexp(0.5, -fw);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerDesc& l = model.layers[i];
    int extra = 0;
    switch (l.kind) {
      case LayerKind::kConv:
      case LayerKind::kConvTranspose:
      case LayerKind::kLinear: {
        const std::size_t per_out = l.weight.size() / std::max<std::size_t>(l.out_channels, 1);
        double worst = 0.0;
        for (std::size_t oc = 0; oc < l.out_channels; ++oc) {
          double sum = 0.0;
          if (l.kind == LayerKind::kConvTranspose) {
            const std::size_t kk = l.kernel_size * l.kernel_size;
            for (std::size_t ic = 0; ic < l.in_channels; ++ic) {
              for (std::size_t t = 0; t < kk; ++t) {
                sum += std::abs(l.weight[(ic * l.out_channels + oc) * kk + t]) + half_step;
              }
            }
          } else {
            for (std::size_t t = 0; t < per_out; ++t) {
              sum += std::abs(l.weight[oc * per_out + t]) + half_step;
            }
          }
          worst = std::max(worst, sum);
        }
        bound = worst * bound + max_abs(l.bias) + half_step;
        scale += fw;
        break;
      }
      case LayerKind::kRelu:
        extra = options.perturbation_bits;
        break;
      case LayerKind::kLeakyRelu:
        extra = options.perturbation_bits;
        bound *= std::max(1.0, std::abs(static_cast<double>(l.alpha)) + half_step);
        scale += fw;
        break;
      case LayerKind::kResidualAdd: {
        const LayerBound src = l.source < 0
                                   ? LayerBound{input_frac_bits, options.input_bound, 0}
                                   : out[static_cast<std::size_t>(l.source)];
        scale = std::max(scale, src.scale);
        bound += src.bound;
        break;
      }
    }
    // The activation exchange perturbs the value entering the activation;
    // bound and scale at that point equal the layer input's.
    out.push_back(LayerBound{scale, bound, bits_needed(bound, scale, extra)});
  }
  return out;
}

BudgetReport summarize(const std::vector<LayerBound>& layers, int input_frac_bits,
                       const BudgetOptions& options) {
  BudgetReport r;
  r.max_frac_bits = input_frac_bits;
  r.max_magnitude_bound = options.input_bound;
  r.required_key_bits = bits_needed(options.input_bound, input_frac_bits, 0);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    r.max_frac_bits = std::max(r.max_frac_bits, layers[i].scale);
    r.max_magnitude_bound = std::max(r.max_magnitude_bound, layers[i].bound);
    if (layers[i].bits_needed > r.required_key_bits) {
      r.required_key_bits = layers[i].bits_needed;
      r.worst_layer = i;
    }
  }
  return r;
}

}  // namespace

BudgetReport estimate_budget(const ModelSpec& model, int input_frac_bits,
                             const BudgetOptions& options) {
  return summarize(walk(model, input_frac_bits, options), input_frac_bits, options);
}

BudgetReport overflow_budget(const ModelSpec& model, const FixedPointParams& params,
                             const BudgetOptions& options) {
  params.validate();
  const auto layers = walk(model, params.frac_bits, options);
  const BudgetReport report = summarize(layers, params.frac_bits, options);
  const std::size_t available = bit_length(params.n);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].bits_needed > available) {
      throw Error(ErrorCode::kOverflowBudget,
                  "layer " + std::to_string(i) + " (" +
                      std::string(to_string(model.layers[i].kind)) +
                      ") needs a key of at least " +
                      std::to_string(report.required_key_bits) + " bits; have " +
                      std::to_string(available));
    }
  }
  return report;
}

}  // namespace cipherdenoise
