// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "json.hpp"

#include "cipherdenoise/attacks.hpp"
#include "cipherdenoise/error.hpp"
#include "cipherdenoise/image.hpp"
#include "cipherdenoise/model.hpp"

namespace cipherdenoise {
namespace {

std::vector<RealTensor> phantoms(std::size_t count, std::size_t size, std::uint64_t seed) {
  RandomSource rng(seed);
  std::vector<RealTensor> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(add_noise(make_phantom(size, rng), 20.0, rng));
  }
  return out;
}

double frobenius_relative(const LayerDesc& truth, const StolenLayer& s) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < truth.weight.size(); ++i) {
    num += (s.weight[i] - truth.weight[i]) * (s.weight[i] - truth.weight[i]);
    den += double(truth.weight[i]) * truth.weight[i];
  }
  for (std::size_t i = 0; i < truth.bias.size(); ++i) {
    num += (s.bias[i] - truth.bias[i]) * (s.bias[i] - truth.bias[i]);
    den += double(truth.bias[i]) * truth.bias[i];
  }
  return std::sqrt(num / den);
}

TEST(StealLayer, ExactFeaturesRecoverWeights) {
  const ModelSpec m = make_demo_model(2, {1, 16, 16});
  const auto inputs = phantoms(2, 16, 1);
  std::vector<Observation> obs;
  for (const auto& x : inputs) obs.push_back({x, infer_plain_float_trace(m, x)[0]});
  RandomSource rng(3);
  const auto [stolen, report] = steal_layer(obs, m.layers[0], 40, phantoms(2, 16, 2), rng);
  EXPECT_FALSE(report.underdetermined);
  EXPECT_EQ(report.unknowns_per_channel, 10U);
  EXPECT_EQ(report.samples_used, 40U);
  EXPECT_LT(report.weight_relative_error, 1e-6);
  EXPECT_NEAR(frobenius_relative(m.layers[0], stolen), report.weight_relative_error, 1e-9);
  EXPECT_GT(report.output_psnr_db, 100.0);
  EXPECT_GT(report.output_psnr_db, report.baseline_psnr_db);
}

TEST(StealLayer, TooFewSamplesIsFlagged) {
  const ModelSpec m = make_demo_model(2, {1, 16, 16});
  const auto x = phantoms(1, 16, 1);
  std::vector<Observation> obs = {{x[0], infer_plain_float_trace(m, x[0])[0]}};
  RandomSource rng(3);
  const auto [stolen, report] = steal_layer(obs, m.layers[0], 5, {}, rng);
  EXPECT_TRUE(report.underdetermined);
  EXPECT_FALSE(report.warning.empty());
}

TEST(StealLayer, TargetMustBeLeadingConvWithActivation) {
  EXPECT_EQ(attack_target_layer(make_demo_model(0, {1, 8, 8})), 0U);
  EXPECT_THROW(attack_target_layer(make_linear_demo_model(0, {1, 8, 8})), Error);
}

TEST(AttackExperiment, PerturbationDefeatsLeastSquares) {
  AttackConfig cfg;
  cfg.key_bits = 256;
  cfg.seed = 11;
  const ModelSpec m = make_demo_model(5, {1, 16, 16});
  const AttackExperiment e = run_attack_experiment(m, cfg);
  EXPECT_EQ(e.clean.mode, AttackMode::kClean);
  EXPECT_EQ(e.clean.perturbation, PerturbationMode::kNone);
  EXPECT_EQ(e.perturbed.perturbation, PerturbationMode::kRandom);
  EXPECT_GE(e.clean.samples_used, 4 * e.clean.unknowns_per_channel);
  EXPECT_LT(e.clean.weight_relative_error, 1e-3);
  EXPECT_GT(e.perturbed.weight_relative_error, 0.5);
  EXPECT_GE(e.perturbed.weight_relative_error / e.clean.weight_relative_error, 100.0);
  EXPECT_GT(e.clean.output_psnr_db, e.perturbed.output_psnr_db);
  EXPECT_EQ(e.true_output.shape, e.perturbed_output.shape);

  const auto j = nlohmann::json::parse(attack_report_json(e));
  EXPECT_EQ(j["clean"]["mode"], "clean");
  EXPECT_DOUBLE_EQ(j["perturbed"]["weight_relative_error"].get<double>(),
                   e.perturbed.weight_relative_error);
}

TEST(AttackExperiment, FixedPerturbationAlsoResists) {
  AttackConfig cfg;
  cfg.key_bits = 256;
  cfg.seed = 12;
  cfg.fixed_m = true;
  const AttackExperiment e = run_attack_experiment(make_demo_model(5, {1, 16, 16}), cfg);
  EXPECT_EQ(e.perturbed.perturbation, PerturbationMode::kFixed);
  EXPECT_GT(e.perturbed.weight_relative_error, 0.5);
}

}  // namespace
}  // namespace cipherdenoise
