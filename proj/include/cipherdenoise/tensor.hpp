// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cipherdenoise/bigint.hpp"
#include "cipherdenoise/encoding.hpp"

namespace cipherdenoise {

struct Shape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const { return channels * height * width; }
  std::size_t plane() const { return height * width; }
  std::size_t index(std::size_t c, std::size_t y, std::size_t x) const {
    return (c * height + y) * width + x;
  }
  std::string str() const {
    return "(" + std::to_string(channels) + "," + std::to_string(height) + "," +
           std::to_string(width) + ")";
  }
  bool operator==(const Shape&) const = default;
};

/// Row-major (channel, row, column) tensor. `scale` is meaningful for
/// fixed-point integer data and ignored for real data.
template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> data;
  ScaleTag scale;

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T{}, ScaleTag tag = {})
      : shape(s), data(s.size(), fill), scale(tag) {}
  Tensor(Shape s, std::vector<T> values, ScaleTag tag = {})
      : shape(s), data(std::move(values)), scale(tag) {}

  T& at(std::size_t c, std::size_t y, std::size_t x) {
    return data[shape.index(c, y, x)];
  }
  const T& at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[shape.index(c, y, x)];
  }
  std::size_t size() const { return data.size(); }

  bool operator==(const Tensor&) const = default;
};

using IntTensor = Tensor<BigInt>;
using RealTensor = Tensor<double>;

/// Quantizes every element at `frac_bits`; result carries ScaleTag{frac_bits}.
IntTensor quantize_tensor(const RealTensor& input, int frac_bits);
/// Divides by 2^scale.
RealTensor dequantize_tensor(const IntTensor& input);

}  // namespace cipherdenoise
