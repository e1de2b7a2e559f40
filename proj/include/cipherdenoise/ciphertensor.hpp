// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

// Encrypted tensors and the encrypted-domain layer kernels. Every kernel is a
// composition of add_cipher and scalar_mul; Dec(kernel_enc(Enc(x))) equals
// the matching plain_ops kernel on x, modulo n.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cipherdenoise/encoding.hpp"
#include "cipherdenoise/paillier.hpp"
#include "cipherdenoise/plain_ops.hpp"
#include "cipherdenoise/random.hpp"
#include "cipherdenoise/tensor.hpp"

namespace cipherdenoise {

struct CipherTensor {
  Shape shape;
  std::vector<Ciphertext> data;
  ScaleTag scale;
  std::string key_id;  // public key fingerprint

  std::size_t size() const { return data.size(); }
  const Ciphertext& at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[shape.index(c, y, x)];
  }

  bool operator==(const CipherTensor&) const = default;
};

/// Throws kKeyMismatch / kShapeMismatch if the tensor does not belong to pk
/// or its payload length is wrong.
void check_tensor(const PaillierPublicKey& pk, const CipherTensor& t);

/// Encrypts signed integers (mapped to residues) elementwise.
CipherTensor encrypt_tensor(const PaillierPublicKey& pk, const IntTensor& plain,
                            RandomSource& rng);

CipherTensor conv2d_enc(const PaillierPublicKey& pk, const CipherTensor& input,
                        const Kernel& kernel, ConvParams params,
                        RandomSource& rng);

CipherTensor conv2d_transpose_enc(const PaillierPublicKey& pk,
                                  const CipherTensor& input,
                                  const Kernel& kernel, ConvParams params);

/// Optional bias (shape (rows,1,1), at the output scale) is folded in.
CipherTensor linear_enc(const PaillierPublicKey& pk, const CipherTensor& input,
                        const Matrix& matrix, const IntTensor* bias = nullptr);

CipherTensor add_enc(const PaillierPublicKey& pk, const CipherTensor& a,
                     const CipherTensor& b);

/// bias is per channel, shape (channels, 1, 1), and must carry x.scale.
CipherTensor bias_add_enc(const PaillierPublicKey& pk, const CipherTensor& x,
                          const IntTensor& bias);

/// Multiplies by 2^(target - x.scale) so that x reaches `target`.
CipherTensor align_scale(const PaillierPublicKey& pk, const CipherTensor& x,
                         ScaleTag target);

/// Elementwise c[k]^exponents[k]; scale unchanged.
CipherTensor hadamard_scalar(const PaillierPublicKey& pk, const CipherTensor& x,
                             std::span<const std::int64_t> exponents);

CipherTensor rerandomize_tensor(const PaillierPublicKey& pk,
                                const CipherTensor& x, RandomSource& rng);

// Serialized layout (big-endian):
//   u32 channels, u32 height, u32 width, u32 total_frac_bits,
//   64 bytes ASCII hex key fingerprint, u32 element byte length,
//   then size() fixed-width ciphertexts, row-major.
inline constexpr std::size_t kCipherTensorHeaderBytes = 4 * 4 + 64 + 4;

std::size_t serialized_size(const Shape& shape, const PaillierPublicKey& pk);
std::vector<std::uint8_t> serialize(const CipherTensor& t,
                                    const PaillierPublicKey& pk);
void serialize_into(const CipherTensor& t, const PaillierPublicKey& pk,
                    std::vector<std::uint8_t>& out);
/// Validates the fingerprint and element width against pk.
CipherTensor deserialize_cipher_tensor(std::span<const std::uint8_t> bytes,
                                       const PaillierPublicKey& pk);
/// Parses the header only (for tools that inspect files before loading keys).
struct CipherTensorHeader {
  Shape shape;
  ScaleTag scale;
  std::string key_id;
  std::size_t element_bytes = 0;
};
CipherTensorHeader read_cipher_tensor_header(std::span<const std::uint8_t> bytes);

void save_ctz(const std::filesystem::path& path, const CipherTensor& t,
              const PaillierPublicKey& pk);
CipherTensor load_ctz(const std::filesystem::path& path,
                      const PaillierPublicKey& pk);

}  // namespace cipherdenoise
