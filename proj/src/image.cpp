// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "cipherdenoise/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "cipherdenoise/error.hpp"
#include "io_util.hpp"

namespace cipherdenoise {
namespace {

std::size_t pgm_number(const std::vector<std::uint8_t>& bytes, std::size_t& pos) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  std::size_t value = 0;
  const std::size_t start = pos;
  while (pos < bytes.size() && std::isdigit(bytes[pos])) {
    value = value * 10 + (bytes[pos] - '0');
    if (value > (1U << 20)) throw Error(ErrorCode::kParseError, "PGM header value too large");
    ++pos;
  }
  if (pos == start) throw Error(ErrorCode::kParseError, "malformed PGM header");
  return value;
}

}  // namespace

RealTensor read_pgm(const std::filesystem::path& path) {
  const auto bytes = detail::read_binary(path);
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw Error(ErrorCode::kParseError, path.string() + " is not a binary PGM (P5)");
  }
  std::size_t pos = 2;
  const std::size_t width = pgm_number(bytes, pos);
  const std::size_t height = pgm_number(bytes, pos);
  const std::size_t maxval = pgm_number(bytes, pos);
  if (width == 0 || height == 0 || maxval == 0 || maxval > 65535) {
    throw Error(ErrorCode::kParseError, "unsupported PGM dimensions or maxval");
  }
  ++pos;  // single whitespace before the raster
  const std::size_t sample = maxval > 255 ? 2 : 1;
  if (bytes.size() < pos + width * height * sample) {
    throw Error(ErrorCode::kParseError, path.string() + ": truncated PGM raster");
  }
  RealTensor image{{1, height, width}, std::vector<double>(width * height), {}};
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    const std::size_t at = pos + i * sample;
    const unsigned v = sample == 2 ? (bytes[at] << 8) | bytes[at + 1] : bytes[at];
    image.data[i] = static_cast<double>(v) / static_cast<double>(maxval);
  }
  return image;
}

void write_pgm(const std::filesystem::path& path, const RealTensor& image) {
  if (image.shape.channels != 1) {
    throw Error(ErrorCode::kShapeMismatch, "PGM output needs a single channel");
  }
  const std::string header = "P5\n" + std::to_string(image.shape.width) + " " +
                             std::to_string(image.shape.height) + "\n65535\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + image.data.size() * 2);
  for (double v : image.data) {
    const double clamped = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
    const auto q = static_cast<std::uint16_t>(std::lround(clamped * 65535.0));
    out.push_back(static_cast<std::uint8_t>(q >> 8));
    out.push_back(static_cast<std::uint8_t>(q));
  }
  detail::write_binary(path, out);
}

RealTensor read_raw_float32(const std::filesystem::path& path, std::size_t width,
                            std::size_t height) {
  const auto bytes = detail::read_binary(path);
  if (width == 0 || height == 0 || bytes.size() != width * height * 4) {
    throw Error(ErrorCode::kParseError,
                path.string() + ": expected " + std::to_string(width * height * 4) +
                    " bytes of float32, found " + std::to_string(bytes.size()));
  }
  RealTensor image{{1, height, width}, std::vector<double>(width * height), {}};
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    const std::uint32_t bits = bytes[4 * i] | (bytes[4 * i + 1] << 8) |
                               (bytes[4 * i + 2] << 16) |
                               (static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24);
    float f;
    std::memcpy(&f, &bits, sizeof f);
    image.data[i] = f;
  }
  return image;
}

RealTensor make_phantom(std::size_t size, RandomSource& rng) {
  RealTensor image{{1, size, size}, std::vector<double>(size * size, 0.0), {}};
  struct Ellipse {
    double cx, cy, a, b, angle, value;
  };
  std::vector<Ellipse> ellipses;
  // Body outline, then interior structures.
  ellipses.push_back({0.0, 0.0, 0.8 + 0.1 * rng.uniform_real(),
                      0.65 + 0.1 * rng.uniform_real(), 0.2 * (rng.uniform_real() - 0.5),
                      0.45});
  const std::size_t count = 3 + rng.uniform(5);
  for (std::size_t i = 0; i < count; ++i) {
    ellipses.push_back({0.9 * (rng.uniform_real() - 0.5), 0.9 * (rng.uniform_real() - 0.5),
                        0.05 + 0.25 * rng.uniform_real(), 0.05 + 0.25 * rng.uniform_real(),
                        std::numbers::pi * rng.uniform_real(),
                        0.35 * (rng.uniform_real() - 0.4)});
  }
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double px = (2.0 * x + 1.0) / size - 1.0;
      const double py = (2.0 * y + 1.0) / size - 1.0;
      double v = 0.0;
      for (const auto& e : ellipses) {
        const double c = std::cos(e.angle), s = std::sin(e.angle);
        const double u = ((px - e.cx) * c + (py - e.cy) * s) / e.a;
        const double w = (-(px - e.cx) * s + (py - e.cy) * c) / e.b;
        if (u * u + w * w <= 1.0) v += e.value;
      }
      image.data[y * size + x] = std::clamp(v, 0.0, 1.0);
    }
  }
  return image;
}

RealTensor add_noise(const RealTensor& clean, double sigma, RandomSource& rng) {
  if (sigma < 0.0) throw Error(ErrorCode::kDomainError, "noise sigma must be >= 0");
  if (sigma == 0.0) return clean;
  const double level = sigma / 255.0;
  // Photon budget chosen so Poisson noise at full intensity matches sigma.
  const double photons = 1.0 / (level * level);
  std::mt19937_64 engine(rng.next_u64());
  RealTensor noisy = clean;
  for (double& v : noisy.data) {
    const double mean = std::max(v, 0.0) * photons;
    double counted = mean;
    if (mean > 0.0) {
      std::poisson_distribution<long long> poisson(mean);
      counted = static_cast<double>(poisson(engine));
    }
    v = counted / photons + level * rng.normal();
  }
  return noisy;
}

double psnr(const RealTensor& reference, const RealTensor& test, double peak) {
  if (reference.data.size() != test.data.size() || reference.data.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "PSNR inputs differ in size");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < reference.data.size(); ++i) {
    const double d = reference.data[i] - test.data[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(reference.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace cipherdenoise
