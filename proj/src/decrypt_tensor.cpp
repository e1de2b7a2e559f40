// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "cipherdenoise/decrypt_tensor.hpp"

#include "cipherdenoise/parallel.hpp"

namespace cipherdenoise {

IntTensor decrypt_tensor(const PaillierPublicKey& pk,
                         const PaillierPrivateKey& sk, const CipherTensor& t) {
  check_tensor(pk, t);
  const CrtDecryptor dec(pk, sk);
  IntTensor out(t.shape, BigInt(0), t.scale);
  parallel_for(t.size(), [&](std::size_t i) {
    out.data[i] = center_lift(dec(t.data[i]), pk.n());
  });
  return out;
}

}  // namespace cipherdenoise
