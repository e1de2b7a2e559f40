// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "cipherdenoise/attacks.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "cipherdenoise/error.hpp"
#include "cipherdenoise/image.hpp"
#include "cipherdenoise/session.hpp"
#include "io_util.hpp"
#include "json.hpp"

namespace cipherdenoise {
namespace {

KernelT<double> float_kernel(const LayerDesc& layer, const std::vector<double>& weights) {
  KernelT<double> k;
  k.out_channels = layer.out_channels;
  k.in_channels = layer.in_channels;
  k.kernel_size = layer.kernel_size;
  k.weights = weights;
  return k;
}

RealTensor layer_output(const LayerDesc& layer, const std::vector<double>& weight,
                        const std::vector<double>& bias, const RealTensor& input) {
  RealTensor out = conv2d_plain(input, float_kernel(layer, weight),
                                ConvParams{layer.stride, layer.padding});
  return bias_add_plain(out, bias);
}

RealTensor channel(const RealTensor& t, std::size_t c) {
  const std::size_t plane = t.shape.plane();
  RealTensor out{{1, t.shape.height, t.shape.width},
                 std::vector<double>(t.data.begin() + c * plane,
                                     t.data.begin() + (c + 1) * plane),
                 {}};
  return out;
}

RealTensor probe_image(const Shape& shape, RandomSource& rng) {
  if (shape.channels == 1 && shape.height == shape.width) {
    return add_noise(make_phantom(shape.height, rng), 20.0, rng);
  }
  RealTensor t{shape, std::vector<double>(shape.size()), {}};
  for (double& v : t.data) v = rng.uniform_real();
  return t;
}

}  // namespace

std::string_view to_string(AttackMode mode) {
  return mode == AttackMode::kClean ? "clean" : "perturbed";
}

std::size_t attack_target_layer(const ModelSpec& model) {
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (!model.layers[i].is_activation()) continue;
    if (i != 1 || model.layers[0].kind != LayerKind::kConv) {
      throw Error(ErrorCode::kDomainError,
                  "attack needs the first activation to follow an input convolution");
    }
    return 0;
  }
  throw Error(ErrorCode::kDomainError, "model has no activation; nothing is exposed");
}

std::pair<StolenLayer, AttackReport> steal_layer(const std::vector<Observation>& observations,
                                                 const LayerDesc& truth,
                                                 std::size_t samples,
                                                 const std::vector<RealTensor>& holdout,
                                                 RandomSource& rng) {
  if (truth.kind != LayerKind::kConv) {
    throw Error(ErrorCode::kDomainError, "only convolution layers can be targeted");
  }
  const std::size_t k = truth.kernel_size;
  const std::size_t taps = truth.in_channels * k * k;
  const std::size_t unknowns = taps + 1;
  AttackReport report;
  report.samples_used = observations.empty() ? 0 : samples;
  report.unknowns_per_channel = unknowns;

  StolenLayer stolen{std::vector<double>(truth.out_channels * taps, 0.0),
                     std::vector<double>(truth.out_channels, 0.0)};
  const auto rows = static_cast<Eigen::Index>(report.samples_used);
  Eigen::MatrixXd a(rows, static_cast<Eigen::Index>(unknowns));
  Eigen::MatrixXd b(rows, static_cast<Eigen::Index>(truth.out_channels));
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Observation& obs = observations[rng.uniform(observations.size())];
    const Shape& out = obs.feature.shape;
    const std::size_t oy = rng.uniform(out.height);
    const std::size_t ox = rng.uniform(out.width);
    Eigen::Index col = 0;
    for (std::size_t ic = 0; ic < truth.in_channels; ++ic) {
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * truth.stride + ky) -
                          static_cast<std::ptrdiff_t>(truth.padding);
          const auto ix = static_cast<std::ptrdiff_t>(ox * truth.stride + kx) -
                          static_cast<std::ptrdiff_t>(truth.padding);
          const bool inside = iy >= 0 && ix >= 0 &&
                              iy < static_cast<std::ptrdiff_t>(obs.input.shape.height) &&
                              ix < static_cast<std::ptrdiff_t>(obs.input.shape.width);
          a(r, col++) = inside ? obs.input.at(ic, static_cast<std::size_t>(iy),
                                              static_cast<std::size_t>(ix))
                               : 0.0;
        }
      }
    }
    a(r, col) = 1.0;
    for (std::size_t oc = 0; oc < truth.out_channels; ++oc) {
      b(r, static_cast<Eigen::Index>(oc)) = obs.feature.at(oc, oy, ox);
    }
  }

  std::size_t rank = 0;
  if (rows > 0) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> solver(a);
    rank = static_cast<std::size_t>(solver.rank());
    const Eigen::MatrixXd x = solver.solve(b);
    for (std::size_t oc = 0; oc < truth.out_channels; ++oc) {
      for (std::size_t t = 0; t < taps; ++t) {
        stolen.weight[oc * taps + t] =
            x(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(oc));
      }
      stolen.bias[oc] = x(static_cast<Eigen::Index>(taps), static_cast<Eigen::Index>(oc));
    }
  }
  if (rank < unknowns) {
    report.underdetermined = true;
    report.warning = "underdetermined: " + std::to_string(report.samples_used) +
                     " equations of rank " + std::to_string(rank) + " for " +
                     std::to_string(unknowns) + " unknowns per channel";
  }

  const std::vector<double> true_w(truth.weight.begin(), truth.weight.end());
  std::vector<double> true_b(truth.out_channels, 0.0);
  std::copy(truth.bias.begin(), truth.bias.end(), true_b.begin());
  double diff = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < true_w.size(); ++i) {
    diff += (stolen.weight[i] - true_w[i]) * (stolen.weight[i] - true_w[i]);
    norm += true_w[i] * true_w[i];
  }
  for (std::size_t i = 0; i < true_b.size(); ++i) {
    diff += (stolen.bias[i] - true_b[i]) * (stolen.bias[i] - true_b[i]);
    norm += true_b[i] * true_b[i];
  }
  report.weight_relative_error = norm > 0.0 ? std::sqrt(diff / norm) : std::sqrt(diff);

  // Baseline: random weights with the same overall norm.
  std::vector<double> random_w(true_w.size()), random_b(true_b.size());
  double random_norm = 0.0;
  for (auto* values : {&random_w, &random_b}) {
    for (double& v : *values) {
      v = rng.normal();
      random_norm += v * v;
    }
  }
  const double scale = random_norm > 0.0 ? std::sqrt(norm / random_norm) : 0.0;
  for (double& v : random_w) v *= scale;
  for (double& v : random_b) v *= scale;

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  double se_stolen = 0.0, se_random = 0.0;
  std::size_t count = 0;
  for (const RealTensor& input : holdout) {
    const RealTensor expected = layer_output(truth, true_w, true_b, input);
    const RealTensor guess = layer_output(truth, stolen.weight, stolen.bias, input);
    const RealTensor random = layer_output(truth, random_w, random_b, input);
    for (std::size_t i = 0; i < expected.data.size(); ++i) {
      lo = std::min(lo, expected.data[i]);
      hi = std::max(hi, expected.data[i]);
      se_stolen += (guess.data[i] - expected.data[i]) * (guess.data[i] - expected.data[i]);
      se_random += (random.data[i] - expected.data[i]) * (random.data[i] - expected.data[i]);
    }
    count += expected.data.size();
  }
  if (count > 0) {
    const double peak = hi > lo ? hi - lo : 1.0;
    auto to_db = [&](double se) {
      const double mse = se / static_cast<double>(count);
      return mse == 0.0 ? std::numeric_limits<double>::infinity()
                        : 10.0 * std::log10(peak * peak / mse);
    };
    report.output_psnr_db = to_db(se_stolen);
    report.baseline_psnr_db = to_db(se_random);
  }
  return {std::move(stolen), std::move(report)};
}

AttackExperiment run_attack_experiment(const ModelSpec& model, const AttackConfig& config) {
  const std::size_t target = attack_target_layer(model);
  const LayerDesc& truth = model.layers[target];
  const auto activation = static_cast<std::uint16_t>(target + 1);
  const RandomSource root(config.seed);
  RandomSource key_rng = root.derive("keygen");
  const PaillierKeypair keys = keygen(config.key_bits, key_rng);

  RandomSource probe_rng = root.derive("probes");
  std::vector<RealTensor> probes;
  for (std::size_t i = 0; i < config.probe_images; ++i) {
    probes.push_back(probe_image(model.input_shape, probe_rng));
  }
  RandomSource holdout_rng = root.derive("holdout");
  std::vector<RealTensor> holdout;
  for (std::size_t i = 0; i < config.holdout; ++i) {
    holdout.push_back(probe_image(model.input_shape, holdout_rng));
  }

  auto observe = [&](PerturbationMode perturbation, std::string_view label) {
    ServerConfig server_config;
    server_config.perturbation = perturbation;
    server_config.perturbation_bound = config.perturbation_bound;
    server_config.fixed_perturbation_seed = root.derive("fixed-m").next_u64();
    const Server server(model, server_config);
    std::vector<Observation> observations;
    const RandomSource mode_rng = root.derive(label);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const IntTensor input = quantize_tensor(probes[i], model.frac_bits_input);
      std::optional<RealTensor> seen;
      SessionHooks hooks;
      hooks.on_act = [&](std::uint16_t layer, const IntTensor& values) {
        if (layer == activation) seen = dequantize_tensor(values);
      };
      RandomSource seeds = mode_rng.derive(i);
      run_nonlinear_session(server, keys, input, {seeds.next_u64(), seeds.next_u64()}, hooks);
      observations.push_back({dequantize_tensor(input), std::move(*seen)});
    }
    return observations;
  };

  const auto clean_obs = observe(PerturbationMode::kNone, "clean");
  const PerturbationMode perturbed_mode =
      config.fixed_m ? PerturbationMode::kFixed : PerturbationMode::kRandom;
  const auto perturbed_obs = observe(perturbed_mode, "perturbed");

  AttackExperiment result;
  RandomSource clean_rng = root.derive("solve");
  auto [clean_layer, clean_report] =
      steal_layer(clean_obs, truth, config.samples, holdout, clean_rng);
  RandomSource perturbed_rng = root.derive("solve");
  auto [perturbed_layer, perturbed_report] =
      steal_layer(perturbed_obs, truth, config.samples, holdout, perturbed_rng);
  clean_report.mode = AttackMode::kClean;
  clean_report.perturbation = PerturbationMode::kNone;
  clean_report.target_layer = target;
  perturbed_report.mode = AttackMode::kPerturbed;
  perturbed_report.perturbation = perturbed_mode;
  perturbed_report.target_layer = target;
  result.clean = clean_report;
  result.perturbed = perturbed_report;

  if (!holdout.empty()) {
    const std::vector<double> true_w(truth.weight.begin(), truth.weight.end());
    std::vector<double> true_b(truth.out_channels, 0.0);
    std::copy(truth.bias.begin(), truth.bias.end(), true_b.begin());
    result.true_output = channel(layer_output(truth, true_w, true_b, holdout[0]), 0);
    result.clean_output =
        channel(layer_output(truth, clean_layer.weight, clean_layer.bias, holdout[0]), 0);
    result.perturbed_output = channel(
        layer_output(truth, perturbed_layer.weight, perturbed_layer.bias, holdout[0]), 0);
  }
  return result;
}

namespace {

nlohmann::json report_json(const AttackReport& r) {
  auto finite = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::json j;
  j["mode"] = std::string(to_string(r.mode));
  j["perturbation"] = r.perturbation == PerturbationMode::kNone    ? "none"
                      : r.perturbation == PerturbationMode::kFixed ? "fixed"
                                                                   : "random";
  j["target_layer"] = r.target_layer;
  j["samples_used"] = r.samples_used;
  j["unknowns_per_channel"] = r.unknowns_per_channel;
  j["underdetermined"] = r.underdetermined;
  if (!r.warning.empty()) j["warning"] = r.warning;
  j["weight_relative_error"] = finite(r.weight_relative_error);
  j["output_psnr_db"] = finite(r.output_psnr_db);
  j["baseline_psnr_db"] = finite(r.baseline_psnr_db);
  return j;
}

}  // namespace

std::string attack_report_json(const AttackExperiment& experiment) {
  nlohmann::json j;
  j["clean"] = report_json(experiment.clean);
  j["perturbed"] = report_json(experiment.perturbed);
  const double ratio = experiment.clean.weight_relative_error > 0.0
                           ? experiment.perturbed.weight_relative_error /
                                 experiment.clean.weight_relative_error
                           : std::numeric_limits<double>::infinity();
  j["error_ratio"] = std::isfinite(ratio) ? nlohmann::json(ratio) : nlohmann::json(nullptr);
  return j.dump(2) + "\n";
}

void write_triptych(const std::filesystem::path& path, const AttackExperiment& experiment) {
  const RealTensor& t = experiment.true_output;
  if (t.data.empty()) throw Error(ErrorCode::kDomainError, "no held-out output to render");
  const auto [lo_it, hi_it] = std::minmax_element(t.data.begin(), t.data.end());
  const double lo = *lo_it;
  const double span = *hi_it > lo ? *hi_it - lo : 1.0;
  const std::size_t h = t.shape.height, w = t.shape.width, gap = 2;
  RealTensor out{{1, h, 3 * w + 2 * gap}, std::vector<double>(h * (3 * w + 2 * gap), 1.0),
                 {}};
  const RealTensor* panels[] = {&experiment.true_output, &experiment.clean_output,
                                &experiment.perturbed_output};
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        out.data[y * out.shape.width + p * (w + gap) + x] =
            (panels[p]->at(0, y, x) - lo) / span;
      }
    }
  }
  write_pgm(path, out);
}

}  // namespace cipherdenoise
