// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "cipherdenoise/ciphertensor.hpp"

#include <algorithm>
#include <bit>
#include <utility>

#include "cipherdenoise/bytes.hpp"
#include "cipherdenoise/error.hpp"
#include "cipherdenoise/parallel.hpp"
#include "io_util.hpp"

namespace cipherdenoise {
namespace {

std::uint64_t magnitude(std::int64_t w) {
  return w >= 0 ? static_cast<std::uint64_t>(w)
                : static_cast<std::uint64_t>(-(w + 1)) + 1;
}

// Product of powers prod_k base_k^exp_k mod m, evaluated by interleaved
// square-and-multiply over all terms at once.
class PowerProduct {
 public:
  explicit PowerProduct(const BigInt& modulus) : modulus_(modulus) {}

  void clear() { terms_.clear(); }
  void add(const BigInt& base, std::uint64_t exponent) {
    if (exponent != 0) terms_.push_back({&base, exponent});
  }

  BigInt evaluate() {
    BigInt acc = 1;
    std::uint64_t all_bits = 0;
    for (const auto& t : terms_) all_bits |= t.exponent;
    if (all_bits == 0) return acc;
    const int top = 63 - std::countl_zero(all_bits);
    mpz_ptr a = acc.get_mpz_t();
    for (int bit = top; bit >= 0; --bit) {
      if (bit != top) {
        mpz_mul(a, a, a);
        mpz_mod(a, a, modulus_.get_mpz_t());
      }
      for (const auto& t : terms_) {
        if ((t.exponent >> bit) & 1U) {
          mpz_mul(a, a, t.base->get_mpz_t());
          mpz_mod(a, a, modulus_.get_mpz_t());
        }
      }
    }
    return acc;
  }

 private:
  struct Term {
    const BigInt* base;
    std::uint64_t exponent;
  };
  const BigInt& modulus_;
  std::vector<Term> terms_;
};

// Ciphertext values plus, when needed, their inverses mod n^2 so negative
// weights cost no more than positive ones.
struct SignedBases {
  std::vector<BigInt> values;
  std::vector<BigInt> inverses;

  const BigInt& pick(std::size_t index, std::int64_t weight) const {
    return weight >= 0 ? values[index] : inverses[index];
  }
};

template <typename Weights>
bool any_negative(const Weights& weights) {
  return std::any_of(weights.begin(), weights.end(),
                     [](std::int64_t w) { return w < 0; });
}

SignedBases prepare_bases(const PaillierPublicKey& pk,
                          const std::vector<Ciphertext>& data,
                          bool need_inverses) {
  SignedBases bases;
  bases.values.reserve(data.size());
  for (const auto& c : data) bases.values.push_back(c.value);
  if (need_inverses) {
    bases.inverses.resize(data.size());
    parallel_for(data.size(), [&](std::size_t i) {
      if (mpz_invert(bases.inverses[i].get_mpz_t(), data[i].value.get_mpz_t(),
                     pk.n_squared().get_mpz_t()) == 0) {
        throw Error(ErrorCode::kMalformedCiphertext,
                    "ciphertext not invertible mod n^2");
      }
    });
  }
  return bases;
}

void require_same_key(const CipherTensor& a, const CipherTensor& b) {
  if (a.key_id != b.key_id) {
    throw Error(ErrorCode::kKeyMismatch, "tensors encrypted under different keys");
  }
}

void check_kernel_dims(const Kernel& kernel) {
  if (kernel.weights.size() != kernel.size() || kernel.kernel_size == 0) {
    throw Error(ErrorCode::kShapeMismatch, "kernel payload does not match its dims");
  }
}

std::vector<BigInt> draw_nonces(const PaillierPublicKey& pk, std::size_t count,
                                RandomSource& rng) {
  std::vector<BigInt> nonces;
  nonces.reserve(count);
  for (std::size_t i = 0; i < count; ++i) nonces.push_back(sample_unit(pk, rng));
  return nonces;
}

}  // namespace

void check_tensor(const PaillierPublicKey& pk, const CipherTensor& t) {
  if (t.key_id != pk.fingerprint()) {
    throw Error(ErrorCode::kKeyMismatch,
                "tensor key " + t.key_id.substr(0, 16) + " does not match session key " +
                    pk.fingerprint().substr(0, 16));
  }
  if (t.data.size() != t.shape.size()) {
    throw Error(ErrorCode::kShapeMismatch, "tensor payload does not match its shape");
  }
}

CipherTensor encrypt_tensor(const PaillierPublicKey& pk, const IntTensor& plain,
                            RandomSource& rng) {
  if (plain.data.size() != plain.shape.size()) {
    throw Error(ErrorCode::kShapeMismatch, "tensor payload does not match its shape");
  }
  const auto nonces = draw_nonces(pk, plain.size(), rng);
  CipherTensor out{plain.shape, std::vector<Ciphertext>(plain.size()), plain.scale,
                   pk.fingerprint()};
  parallel_for(plain.size(), [&](std::size_t i) {
    out.data[i] = encrypt_with_nonce(pk, to_residue(plain.data[i], pk.n()), nonces[i]);
  });
  return out;
}

CipherTensor conv2d_enc(const PaillierPublicKey& pk, const CipherTensor& input,
                        const Kernel& kernel, ConvParams params,
                        RandomSource& rng) {
  check_tensor(pk, input);
  check_kernel_dims(kernel);
  if (input.shape.channels != kernel.in_channels) {
    throw Error(ErrorCode::kShapeMismatch,
                "input has " + std::to_string(input.shape.channels) +
                    " channels, kernel expects " + std::to_string(kernel.in_channels));
  }
  const Shape out_shape = conv_output_shape(input.shape, kernel.out_channels,
                                            kernel.kernel_size, params);

  // Zero padding with fresh encryptions of zero.
  const std::size_t pad = params.padding;
  const Shape padded{input.shape.channels, input.shape.height + 2 * pad,
                     input.shape.width + 2 * pad};
  std::vector<Ciphertext> padded_data(padded.size());
  const std::size_t pad_count = padded.size() - input.shape.size();
  const auto nonces = draw_nonces(pk, pad_count, rng);
  std::vector<std::size_t> pad_slots;
  pad_slots.reserve(pad_count);
  for (std::size_t c = 0; c < padded.channels; ++c) {
    for (std::size_t y = 0; y < padded.height; ++y) {
      for (std::size_t x = 0; x < padded.width; ++x) {
        const bool inside = y >= pad && y < pad + input.shape.height && x >= pad &&
                            x < pad + input.shape.width;
        if (inside) {
          padded_data[padded.index(c, y, x)] = input.at(c, y - pad, x - pad);
        } else {
          pad_slots.push_back(padded.index(c, y, x));
        }
      }
    }
  }
  const BigInt zero = 0;
  parallel_for(pad_slots.size(), [&](std::size_t i) {
    padded_data[pad_slots[i]] = encrypt_with_nonce(pk, zero, nonces[i]);
  });

  const SignedBases bases = prepare_bases(pk, padded_data, any_negative(kernel.weights));
  CipherTensor out{out_shape, std::vector<Ciphertext>(out_shape.size()),
                   input.scale.plus(kernel.frac_bits), input.key_id};
  const std::size_t k = kernel.kernel_size;
  parallel_for(out_shape.channels * out_shape.height, [&](std::size_t row) {
    const std::size_t oc = row / out_shape.height;
    const std::size_t oy = row % out_shape.height;
    PowerProduct product(pk.n_squared());
    for (std::size_t ox = 0; ox < out_shape.width; ++ox) {
      product.clear();
      for (std::size_t ic = 0; ic < kernel.in_channels; ++ic) {
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) {
            const std::int64_t w =
                kernel.weights[((oc * kernel.in_channels + ic) * k + ky) * k + kx];
            if (w == 0) continue;
            const std::size_t idx =
                padded.index(ic, oy * params.stride + ky, ox * params.stride + kx);
            product.add(bases.pick(idx, w), magnitude(w));
          }
        }
      }
      out.data[out_shape.index(oc, oy, ox)] = Ciphertext{product.evaluate()};
    }
  });
  return out;
}

CipherTensor conv2d_transpose_enc(const PaillierPublicKey& pk,
                                  const CipherTensor& input,
                                  const Kernel& kernel, ConvParams params) {
  check_tensor(pk, input);
  check_kernel_dims(kernel);
  if (input.shape.channels != kernel.in_channels) {
    throw Error(ErrorCode::kShapeMismatch,
                "input has " + std::to_string(input.shape.channels) +
                    " channels, kernel expects " + std::to_string(kernel.in_channels));
  }
  const Shape out_shape = conv_transpose_output_shape(
      input.shape, kernel.out_channels, kernel.kernel_size, params);
  const SignedBases bases = prepare_bases(pk, input.data, any_negative(kernel.weights));
  CipherTensor out{out_shape, std::vector<Ciphertext>(out_shape.size()),
                   input.scale.plus(kernel.frac_bits), input.key_id};
  const std::size_t k = kernel.kernel_size;
  const auto s = static_cast<std::ptrdiff_t>(params.stride);
  parallel_for(out_shape.channels * out_shape.height, [&](std::size_t row) {
    const std::size_t oc = row / out_shape.height;
    const std::size_t oy = row % out_shape.height;
    PowerProduct product(pk.n_squared());
    for (std::size_t ox = 0; ox < out_shape.width; ++ox) {
      product.clear();
      for (std::size_t ic = 0; ic < kernel.in_channels; ++ic) {
        for (std::size_t ky = 0; ky < k; ++ky) {
          const auto ty = static_cast<std::ptrdiff_t>(oy + params.padding) -
                          static_cast<std::ptrdiff_t>(ky);
          if (ty < 0 || ty % s != 0) continue;
          const auto iy = static_cast<std::size_t>(ty / s);
          if (iy >= input.shape.height) continue;
          for (std::size_t kx = 0; kx < k; ++kx) {
            const auto tx = static_cast<std::ptrdiff_t>(ox + params.padding) -
                            static_cast<std::ptrdiff_t>(kx);
            if (tx < 0 || tx % s != 0) continue;
            const auto ix = static_cast<std::size_t>(tx / s);
            if (ix >= input.shape.width) continue;
            const std::int64_t w =
                kernel.weights[((ic * kernel.out_channels + oc) * k + ky) * k + kx];
            if (w == 0) continue;
            product.add(bases.pick(input.shape.index(ic, iy, ix), w), magnitude(w));
          }
        }
      }
      out.data[out_shape.index(oc, oy, ox)] = Ciphertext{product.evaluate()};
    }
  });
  return out;
}

CipherTensor linear_enc(const PaillierPublicKey& pk, const CipherTensor& input,
                        const Matrix& matrix, const IntTensor* bias) {
  check_tensor(pk, input);
  if (matrix.weights.size() != matrix.rows * matrix.cols) {
    throw Error(ErrorCode::kShapeMismatch, "matrix payload does not match its dims");
  }
  if (input.size() != matrix.cols) {
    throw Error(ErrorCode::kShapeMismatch,
                "input has " + std::to_string(input.size()) +
                    " elements, matrix expects " + std::to_string(matrix.cols));
  }
  const SignedBases bases = prepare_bases(pk, input.data, any_negative(matrix.weights));
  const Shape out_shape{matrix.rows, 1, 1};
  CipherTensor out{out_shape, std::vector<Ciphertext>(matrix.rows),
                   input.scale.plus(matrix.frac_bits), input.key_id};
  parallel_for(matrix.rows, [&](std::size_t r) {
    PowerProduct product(pk.n_squared());
    for (std::size_t c = 0; c < matrix.cols; ++c) {
      const std::int64_t w = matrix.weights[r * matrix.cols + c];
      if (w != 0) product.add(bases.pick(c, w), magnitude(w));
    }
    out.data[r] = Ciphertext{product.evaluate()};
  });
  if (bias != nullptr) return bias_add_enc(pk, out, *bias);
  return out;
}

CipherTensor add_enc(const PaillierPublicKey& pk, const CipherTensor& a,
                     const CipherTensor& b) {
  check_tensor(pk, a);
  check_tensor(pk, b);
  require_same_key(a, b);
  if (a.shape != b.shape) {
    throw Error(ErrorCode::kShapeMismatch,
                "cannot add " + a.shape.str() + " and " + b.shape.str());
  }
  if (a.scale != b.scale) {
    throw Error(ErrorCode::kScaleMismatch,
                "cannot add scales " + std::to_string(a.scale.total_frac_bits) +
                    " and " + std::to_string(b.scale.total_frac_bits));
  }
  CipherTensor out{a.shape, std::vector<Ciphertext>(a.size()), a.scale, a.key_id};
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.data[i] = add_cipher(pk, a.data[i], b.data[i]);
  }
  return out;
}

CipherTensor bias_add_enc(const PaillierPublicKey& pk, const CipherTensor& x,
                          const IntTensor& bias) {
  check_tensor(pk, x);
  if (bias.scale != x.scale) {
    throw Error(ErrorCode::kScaleMismatch,
                "bias at scale " + std::to_string(bias.scale.total_frac_bits) +
                    ", feature at " + std::to_string(x.scale.total_frac_bits));
  }
  if (bias.data.size() != x.shape.channels) {
    throw Error(ErrorCode::kShapeMismatch, "bias length differs from channel count");
  }
  CipherTensor out = x;
  const std::size_t plane = x.shape.plane();
  for (std::size_t c = 0; c < x.shape.channels; ++c) {
    // Randomness-free encryption of the bias: g^b with r = 1.
    const Ciphertext enc_bias{generator_power(pk, to_residue(bias.data[c], pk.n()))};
    for (std::size_t i = 0; i < plane; ++i) {
      auto& slot = out.data[c * plane + i];
      slot = add_cipher(pk, slot, enc_bias);
    }
  }
  return out;
}

CipherTensor align_scale(const PaillierPublicKey& pk, const CipherTensor& x,
                         ScaleTag target) {
  check_tensor(pk, x);
  if (target < x.scale) {
    throw Error(ErrorCode::kScaleMismatch, "cannot lower a scale homomorphically");
  }
  if (target == x.scale) return x;
  BigInt factor = 1;
  factor <<= (target.total_frac_bits - x.scale.total_frac_bits);
  CipherTensor out{x.shape, std::vector<Ciphertext>(x.size()), target, x.key_id};
  parallel_for(x.size(), [&](std::size_t i) {
    out.data[i] = scalar_mul(pk, x.data[i], factor);
  });
  return out;
}

CipherTensor hadamard_scalar(const PaillierPublicKey& pk, const CipherTensor& x,
                             std::span<const std::int64_t> exponents) {
  check_tensor(pk, x);
  if (exponents.size() != x.size()) {
    throw Error(ErrorCode::kShapeMismatch, "exponent count differs from tensor size");
  }
  CipherTensor out{x.shape, std::vector<Ciphertext>(x.size()), x.scale, x.key_id};
  parallel_for(x.size(), [&](std::size_t i) {
    out.data[i] = scalar_mul(pk, x.data[i], from_int64(exponents[i]));
  });
  return out;
}

CipherTensor rerandomize_tensor(const PaillierPublicKey& pk,
                                const CipherTensor& x, RandomSource& rng) {
  check_tensor(pk, x);
  const auto nonces = draw_nonces(pk, x.size(), rng);
  CipherTensor out{x.shape, std::vector<Ciphertext>(x.size()), x.scale, x.key_id};
  parallel_for(x.size(), [&](std::size_t i) {
    out.data[i] = rerandomize_with_nonce(pk, x.data[i], nonces[i]);
  });
  return out;
}

std::size_t serialized_size(const Shape& shape, const PaillierPublicKey& pk) {
  return kCipherTensorHeaderBytes + shape.size() * pk.ciphertext_bytes();
}

void serialize_into(const CipherTensor& t, const PaillierPublicKey& pk,
                    std::vector<std::uint8_t>& out) {
  check_tensor(pk, t);
  const std::size_t width = pk.ciphertext_bytes();
  ByteWriter header;
  header.u32(static_cast<std::uint32_t>(t.shape.channels));
  header.u32(static_cast<std::uint32_t>(t.shape.height));
  header.u32(static_cast<std::uint32_t>(t.shape.width));
  header.u32(static_cast<std::uint32_t>(t.scale.total_frac_bits));
  header.raw(std::string_view(t.key_id));
  header.u32(static_cast<std::uint32_t>(width));
  const auto& h = header.buffer();
  const std::size_t start = out.size();
  out.insert(out.end(), h.begin(), h.end());
  out.resize(start + h.size() + t.size() * width);
  std::uint8_t* body = out.data() + start + h.size();
  for (std::size_t i = 0; i < t.size(); ++i) {
    write_bytes_fixed(t.data[i].value, std::span(body + i * width, width));
  }
}

std::vector<std::uint8_t> serialize(const CipherTensor& t,
                                    const PaillierPublicKey& pk) {
  std::vector<std::uint8_t> out;
  out.reserve(serialized_size(t.shape, pk));
  serialize_into(t, pk, out);
  return out;
}

CipherTensorHeader read_cipher_tensor_header(std::span<const std::uint8_t> bytes) {
  ByteReader reader(bytes);
  CipherTensorHeader h;
  h.shape.channels = reader.u32();
  h.shape.height = reader.u32();
  h.shape.width = reader.u32();
  h.scale.total_frac_bits = static_cast<int>(reader.u32());
  h.key_id = reader.text(64);
  h.element_bytes = reader.u32();
  return h;
}

CipherTensor deserialize_cipher_tensor(std::span<const std::uint8_t> bytes,
                                       const PaillierPublicKey& pk) {
  const CipherTensorHeader h = read_cipher_tensor_header(bytes);
  if (h.key_id != pk.fingerprint()) {
    throw Error(ErrorCode::kKeyMismatch,
                "tensor fingerprint " + h.key_id.substr(0, 16) +
                    " does not match key " + pk.fingerprint().substr(0, 16));
  }
  if (h.element_bytes != pk.ciphertext_bytes()) {
    throw Error(ErrorCode::kParseError, "ciphertext width does not match key");
  }
  const std::size_t count = h.shape.size();
  if (bytes.size() != kCipherTensorHeaderBytes + count * h.element_bytes) {
    throw Error(ErrorCode::kParseError,
                "tensor body is " + std::to_string(bytes.size()) + " bytes, expected " +
                    std::to_string(kCipherTensorHeaderBytes + count * h.element_bytes));
  }
  CipherTensor out{h.shape, std::vector<Ciphertext>(count), h.scale, h.key_id};
  const auto body = bytes.subspan(kCipherTensorHeaderBytes);
  for (std::size_t i = 0; i < count; ++i) {
    out.data[i].value = from_bytes(body.subspan(i * h.element_bytes, h.element_bytes));
    if (out.data[i].value == 0 || out.data[i].value >= pk.n_squared()) {
      throw Error(ErrorCode::kMalformedCiphertext,
                  "element " + std::to_string(i) + " outside (0, n^2)");
    }
  }
  return out;
}

void save_ctz(const std::filesystem::path& path, const CipherTensor& t,
              const PaillierPublicKey& pk) {
  detail::write_binary(path, serialize(t, pk));
}

CipherTensor load_ctz(const std::filesystem::path& path,
                      const PaillierPublicKey& pk) {
  return deserialize_cipher_tensor(detail::read_binary(path), pk);
}

}  // namespace cipherdenoise
