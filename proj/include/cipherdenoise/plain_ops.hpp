// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

// Plaintext layer kernels shared by the float and fixed-point reference
// engines. They are the oracles for the encrypted kernels, so the
// accumulation order here (input channel, kernel row, kernel column, all
// ascending) is the one the encrypted engine uses too.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cipherdenoise/bigint.hpp"
#include "cipherdenoise/error.hpp"
#include "cipherdenoise/tensor.hpp"

namespace cipherdenoise {

/// Convolution weights. Layout is [out][in][k][k] for conv2d and
/// [in][out][k][k] for conv2d_transpose.
template <typename W>
struct KernelT {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t kernel_size = 0;
  std::vector<W> weights;
  int frac_bits = 0;

  std::size_t size() const {
    return out_channels * in_channels * kernel_size * kernel_size;
  }
};

/// Dense weights, [out][in] row-major over the flattened input.
template <typename W>
struct MatrixT {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<W> weights;
  int frac_bits = 0;
};

using Kernel = KernelT<std::int64_t>;
using Matrix = MatrixT<std::int64_t>;

struct ConvParams {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

inline std::size_t conv_output_extent(std::size_t in, std::size_t kernel,
                                      ConvParams p) {
  if (p.stride == 0) throw Error(ErrorCode::kShapeMismatch, "stride must be positive");
  if (in + 2 * p.padding < kernel) {
    throw Error(ErrorCode::kShapeMismatch,
                "kernel " + std::to_string(kernel) + " larger than padded input " +
                    std::to_string(in + 2 * p.padding));
  }
  return (in + 2 * p.padding - kernel) / p.stride + 1;
}

inline std::size_t conv_transpose_output_extent(std::size_t in,
                                                std::size_t kernel,
                                                ConvParams p) {
  if (p.stride == 0) throw Error(ErrorCode::kShapeMismatch, "stride must be positive");
  const std::size_t full = (in - 1) * p.stride + kernel;
  if (in == 0 || full <= 2 * p.padding) {
    throw Error(ErrorCode::kShapeMismatch, "transposed convolution output is empty");
  }
  return full - 2 * p.padding;
}

inline Shape conv_output_shape(const Shape& in, std::size_t out_channels,
                               std::size_t kernel, ConvParams p) {
  return Shape{out_channels, conv_output_extent(in.height, kernel, p),
               conv_output_extent(in.width, kernel, p)};
}

inline Shape conv_transpose_output_shape(const Shape& in,
                                         std::size_t out_channels,
                                         std::size_t kernel, ConvParams p) {
  return Shape{out_channels, conv_transpose_output_extent(in.height, kernel, p),
               conv_transpose_output_extent(in.width, kernel, p)};
}

namespace detail {

inline void multiply_accumulate(double& acc, double x, double w) { acc += x * w; }

inline void multiply_accumulate(BigInt& acc, const BigInt& x, std::int64_t w) {
  if (w >= 0) {
    mpz_addmul_ui(acc.get_mpz_t(), x.get_mpz_t(), static_cast<unsigned long>(w));
  } else {
    mpz_submul_ui(acc.get_mpz_t(), x.get_mpz_t(),
                  static_cast<unsigned long>(-(w + 1)) + 1UL);
  }
}

template <typename T, typename W>
void check_kernel(const Tensor<T>& input, const KernelT<W>& kernel,
                  std::size_t expected_in) {
  if (kernel.weights.size() != kernel.size()) {
    throw Error(ErrorCode::kShapeMismatch, "kernel payload does not match its dims");
  }
  if (input.shape.channels != expected_in) {
    throw Error(ErrorCode::kShapeMismatch,
                "input has " + std::to_string(input.shape.channels) +
                    " channels, kernel expects " + std::to_string(expected_in));
  }
  if (input.data.size() != input.shape.size()) {
    throw Error(ErrorCode::kShapeMismatch, "tensor payload does not match its shape");
  }
}

}  // namespace detail

/// Cross-correlation with zero padding. Output scale = input scale + kernel
/// frac_bits.
template <typename T, typename W>
Tensor<T> conv2d_plain(const Tensor<T>& input, const KernelT<W>& kernel,
                       ConvParams params) {
  detail::check_kernel(input, kernel, kernel.in_channels);
  const Shape out_shape = conv_output_shape(input.shape, kernel.out_channels,
                                            kernel.kernel_size, params);
  Tensor<T> out(out_shape, T{}, input.scale.plus(kernel.frac_bits));
  const std::size_t k = kernel.kernel_size;
  const auto pad = static_cast<std::ptrdiff_t>(params.padding);
  const auto in_h = static_cast<std::ptrdiff_t>(input.shape.height);
  const auto in_w = static_cast<std::ptrdiff_t>(input.shape.width);
  for (std::size_t oc = 0; oc < out_shape.channels; ++oc) {
    for (std::size_t oy = 0; oy < out_shape.height; ++oy) {
      for (std::size_t ox = 0; ox < out_shape.width; ++ox) {
        T acc{};
        for (std::size_t ic = 0; ic < kernel.in_channels; ++ic) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            const auto iy = static_cast<std::ptrdiff_t>(oy * params.stride + ky) - pad;
            if (iy < 0 || iy >= in_h) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const auto ix = static_cast<std::ptrdiff_t>(ox * params.stride + kx) - pad;
              if (ix < 0 || ix >= in_w) continue;
              const W& w = kernel.weights[((oc * kernel.in_channels + ic) * k + ky) * k + kx];
              detail::multiply_accumulate(
                  acc, input.at(ic, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)), w);
            }
          }
        }
        out.at(oc, oy, ox) = acc;
      }
    }
  }
  return out;
}

/// Transposed convolution (gradient of conv2d w.r.t. its input), weights
/// [in][out][k][k]. Computed in gather form with the same ascending
/// (ic, ky, kx) accumulation order as the encrypted kernel.
template <typename T, typename W>
Tensor<T> conv2d_transpose_plain(const Tensor<T>& input,
                                 const KernelT<W>& kernel, ConvParams params) {
  detail::check_kernel(input, kernel, kernel.in_channels);
  const Shape out_shape = conv_transpose_output_shape(
      input.shape, kernel.out_channels, kernel.kernel_size, params);
  Tensor<T> out(out_shape, T{}, input.scale.plus(kernel.frac_bits));
  const std::size_t k = kernel.kernel_size;
  const std::size_t s = params.stride;
  for (std::size_t oc = 0; oc < out_shape.channels; ++oc) {
    for (std::size_t oy = 0; oy < out_shape.height; ++oy) {
      for (std::size_t ox = 0; ox < out_shape.width; ++ox) {
        T acc{};
        for (std::size_t ic = 0; ic < kernel.in_channels; ++ic) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            // oy + padding = iy * stride + ky
            const auto ty = static_cast<std::ptrdiff_t>(oy + params.padding) -
                            static_cast<std::ptrdiff_t>(ky);
            if (ty < 0 || ty % static_cast<std::ptrdiff_t>(s) != 0) continue;
            const auto iy = static_cast<std::size_t>(ty) / s;
            if (iy >= input.shape.height) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const auto tx = static_cast<std::ptrdiff_t>(ox + params.padding) -
                              static_cast<std::ptrdiff_t>(kx);
              if (tx < 0 || tx % static_cast<std::ptrdiff_t>(s) != 0) continue;
              const auto ix = static_cast<std::size_t>(tx) / s;
              if (ix >= input.shape.width) continue;
              const W& w = kernel.weights[((ic * kernel.out_channels + oc) * k + ky) * k + kx];
              detail::multiply_accumulate(acc, input.at(ic, iy, ix), w);
            }
          }
        }
        out.at(oc, oy, ox) = acc;
      }
    }
  }
  return out;
}

/// y = W x over the flattened input; output shape (rows, 1, 1).
template <typename T, typename W>
Tensor<T> linear_plain(const Tensor<T>& input, const MatrixT<W>& matrix) {
  if (matrix.weights.size() != matrix.rows * matrix.cols) {
    throw Error(ErrorCode::kShapeMismatch, "matrix payload does not match its dims");
  }
  if (input.data.size() != matrix.cols) {
    throw Error(ErrorCode::kShapeMismatch,
                "input has " + std::to_string(input.data.size()) +
                    " elements, matrix expects " + std::to_string(matrix.cols));
  }
  Tensor<T> out(Shape{matrix.rows, 1, 1}, T{}, input.scale.plus(matrix.frac_bits));
  for (std::size_t r = 0; r < matrix.rows; ++r) {
    T acc{};
    for (std::size_t c = 0; c < matrix.cols; ++c) {
      detail::multiply_accumulate(acc, input.data[c], matrix.weights[r * matrix.cols + c]);
    }
    out.data[r] = acc;
  }
  return out;
}

/// Adds bias[c] to every element of channel c. Bias must be at the
/// tensor's scale.
template <typename T>
Tensor<T> bias_add_plain(const Tensor<T>& input, const std::vector<T>& bias) {
  if (bias.size() != input.shape.channels) {
    throw Error(ErrorCode::kShapeMismatch, "bias length differs from channel count");
  }
  Tensor<T> out = input;
  for (std::size_t c = 0; c < input.shape.channels; ++c) {
    for (std::size_t i = 0; i < input.shape.plane(); ++i) {
      out.data[c * input.shape.plane() + i] += bias[c];
    }
  }
  return out;
}

}  // namespace cipherdenoise
