// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "cipherdenoise/error.hpp"
#include "cipherdenoise/image.hpp"
#include "cipherdenoise/model.hpp"
#include "cipherdenoise/train.hpp"

namespace cipherdenoise {
namespace {

namespace fs = std::filesystem;

double mse(const RealTensor& a, const RealTensor& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
  return s / static_cast<double>(a.data.size());
}

TEST(Image, PhantomIsDeterministicAndInRange) {
  RandomSource a(4), b(4);
  const RealTensor p = make_phantom(32, a);
  EXPECT_EQ(p, make_phantom(32, b));
  EXPECT_EQ(p.shape, (Shape{1, 32, 32}));
  double lo = 1, hi = 0;
  for (double v : p.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_GE(lo, 0.0);
  EXPECT_LE(hi, 1.0);
  EXPECT_GT(hi - lo, 0.1);
}

TEST(Image, NoiseGrowsWithSigma) {
  RandomSource rng(5);
  const RealTensor clean = make_phantom(64, rng);
  EXPECT_EQ(add_noise(clean, 0.0, rng), clean);
  double prev = 0;
  for (double sigma : {5.0, 10.0, 20.0, 40.0}) {
    const double e = mse(add_noise(clean, sigma, rng), clean);
    EXPECT_GT(e, prev) << sigma;
    prev = e;
  }
}

TEST(Image, PsnrOfKnownOffset) {
  const RealTensor a(Shape{1, 2, 2}, std::vector<double>(4, 0.5));
  const RealTensor b(Shape{1, 2, 2}, std::vector<double>(4, 0.6));
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
  EXPECT_NEAR(psnr(a, b, 2.0), 20.0 + 20.0 * std::log10(2.0), 1e-9);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
}

TEST(Image, PgmRoundTripAndEightBitInput) {
  RandomSource rng(6);
  const RealTensor img = make_phantom(17, rng);
  const fs::path path = fs::temp_directory_path() / "cd_pgm_roundtrip.pgm";
  write_pgm(path, img);
  const RealTensor back = read_pgm(path);
  ASSERT_EQ(back.shape, img.shape);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    EXPECT_NEAR(back.data[i], img.data[i], 0.5 / 65535.0 + 1e-12);
  }
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n# comment\n3 1\n255\n";
    const unsigned char px[3] = {0, 51, 255};
    out.write(reinterpret_cast<const char*>(px), 3);
  }
  EXPECT_EQ(read_pgm(path).data, (std::vector<double>{0.0, 0.2, 1.0}));
  {
    std::ofstream out(path, std::ios::binary);
    out << "P2\n1 1\n255\n0\n";
  }
  EXPECT_THROW(read_pgm(path), Error);
  fs::remove(path);
}

TEST(Image, RawFloatReader) {
  const fs::path path = fs::temp_directory_path() / "cd_raw.f32";
  const float px[6] = {0.f, 0.25f, 0.5f, 0.75f, 1.f, -1.f};
  {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(px), sizeof(px));
  }
  const RealTensor t = read_raw_float32(path, 3, 2);
  EXPECT_EQ(t.shape, (Shape{1, 2, 3}));
  EXPECT_EQ(t.data, (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0, -1.0}));
  EXPECT_THROW(read_raw_float32(path, 4, 2), Error);
  fs::remove(path);
}

ModelSpec gradient_model() {
  ModelSpec m = make_demo_model(9, {1, 6, 6});
  LayerDesc leaky;
  leaky.kind = LayerKind::kLeakyRelu;
  leaky.alpha = 0.2f;
  m.layers[1] = leaky;
  return m;
}

TEST(Train, GradientMatchesFiniteDifferences) {
  ModelSpec m = gradient_model();
  RandomSource rng(10);
  const RealTensor clean = make_phantom(6, rng);
  const RealTensor noisy = add_noise(clean, 20.0, rng);
  std::vector<std::vector<double>> gw, gb;
  const double loss = mse_gradient(m, noisy, clean, gw, gb);
  EXPECT_NEAR(loss, mse(infer_plain_float(m, noisy), clean), 1e-12);

  auto loss_at = [&](const ModelSpec& mm) { return mse(infer_plain_float(mm, noisy), clean); };
  const double h = 1e-5;
  std::size_t checked = 0;
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    for (std::size_t k = 0; k < m.layers[li].weight.size(); k += 7) {
      ModelSpec plus = m, minus = m;
      plus.layers[li].weight[k] += static_cast<float>(h);
      minus.layers[li].weight[k] -= static_cast<float>(h);
      const double step = double(plus.layers[li].weight[k]) - double(minus.layers[li].weight[k]);
      const double fd = (loss_at(plus) - loss_at(minus)) / step;
      EXPECT_NEAR(gw[li][k], fd, 1e-4 + 1e-2 * std::abs(fd)) << "layer " << li << " w" << k;
      ++checked;
    }
    for (std::size_t k = 0; k < m.layers[li].bias.size(); ++k) {
      ModelSpec plus = m, minus = m;
      plus.layers[li].bias[k] += static_cast<float>(h);
      minus.layers[li].bias[k] -= static_cast<float>(h);
      const double step = double(plus.layers[li].bias[k]) - double(minus.layers[li].bias[k]);
      const double fd = (loss_at(plus) - loss_at(minus)) / step;
      EXPECT_NEAR(gb[li][k], fd, 1e-4 + 1e-2 * std::abs(fd)) << "layer " << li << " b" << k;
    }
  }
  EXPECT_GT(checked, 20U);
}

TEST(Train, ZeroLearningRateKeepsInitialWeights) {
  TrainOptions o;
  o.images = 2;
  o.size = 8;
  o.epochs = 2;
  o.learning_rate = 0.0;
  o.seed = 3;
  const TrainResult r = train_demo(o);
  ModelSpec init = make_demo_model(3, {1, 8, 8}, o.frac_bits);
  snap_to_grid(init, o.frac_bits);
  ASSERT_EQ(r.model.layers.size(), init.layers.size());
  for (std::size_t i = 0; i < init.layers.size(); ++i) {
    EXPECT_EQ(r.model.layers[i].weight, init.layers[i].weight) << i;
    EXPECT_EQ(r.model.layers[i].bias, init.layers[i].bias) << i;
  }
  EXPECT_EQ(r.epoch_loss.size(), 2U);
  EXPECT_DOUBLE_EQ(r.epoch_loss[0], r.epoch_loss[1]);
}

TEST(Train, ShortRunImprovesHeldOutPsnr) {
  TrainOptions o;
  o.images = 8;
  o.size = 16;
  o.epochs = 10;
  o.learning_rate = 3e-3;
  o.seed = 1;
  const TrainResult r = train_demo(o);
  EXPECT_LT(r.epoch_loss.back(), r.epoch_loss.front());
  EXPECT_GT(r.output_psnr_db, r.input_psnr_db);
  for (const auto& l : r.model.layers) {
    for (float w : l.weight) {
      const double scaled = std::ldexp(static_cast<double>(w), o.frac_bits);
      EXPECT_EQ(scaled, std::round(scaled));
    }
  }
  infer_shapes(r.model);
}

TEST(Train, RejectsEmptyConfiguration) {
  TrainOptions o;
  o.images = 0;
  EXPECT_THROW(train_demo(o), Error);
}

}  // namespace
}  // namespace cipherdenoise
