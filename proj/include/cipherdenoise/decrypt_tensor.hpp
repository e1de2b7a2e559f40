// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cipherdenoise/ciphertensor.hpp"
#include "cipherdenoise/paillier_private.hpp"
#include "cipherdenoise/tensor.hpp"

namespace cipherdenoise {

/// Decrypts and center-lifts every element; keeps the tensor's scale.
IntTensor decrypt_tensor(const PaillierPublicKey& pk,
                         const PaillierPrivateKey& sk, const CipherTensor& t);

}  // namespace cipherdenoise
