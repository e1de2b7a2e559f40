// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <type_traits>

#include "cipherdenoise/attacks.hpp"
#include "cipherdenoise/decrypt_tensor.hpp"
#include "cipherdenoise/image.hpp"
#include "cipherdenoise/model.hpp"
#include "cipherdenoise/paillier_private.hpp"
#include "cipherdenoise/protocol.hpp"
#include "cipherdenoise/server.hpp"
#include "cipherdenoise/session.hpp"
#include "cipherdenoise/verify.hpp"
#include "include_graph.hpp"

namespace cd = cipherdenoise;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

cd::IntTensor probe_image(std::size_t size, std::uint64_t seed) {
  cd::RandomSource rng(seed);
  return cd::quantize_tensor(cd::add_noise(cd::make_phantom(size, rng), 20.0, rng), 16);
}

std::size_t activation_count(const cd::ModelSpec& m) {
  std::size_t n = 0;
  for (const auto& l : m.layers) {
    n += (l.kind == cd::LayerKind::kRelu || l.kind == cd::LayerKind::kLeakyRelu) ? 1 : 0;
  }
  return n;
}

// 1. Homomorphic identities.
Outcome homomorphic_identities() {
  const auto start = std::chrono::steady_clock::now();
  cd::RandomSource rng(101);
  std::size_t failures = 0, cases = 0;

  const cd::PaillierKeypair k32 = cd::keygen(32, rng);
  const auto& pk = k32.public_key;
  const cd::BigInt& n = pk.n();
  auto dec = [&](const cd::Ciphertext& c) { return cd::decrypt(pk, k32.private_key, c); };
  for (int i = 0; i < 10000; ++i) {
    const cd::BigInt a = rng.uniform_below(n), b = rng.uniform_below(n), s = rng.uniform_below(n);
    const cd::Ciphertext ca = cd::encrypt(pk, a, rng), cb = cd::encrypt(pk, b, rng);
    const cd::BigInt sum = (a + b) % n;
    const cd::BigInt prod = (a * s) % n;
    failures += dec(cd::add_cipher(pk, ca, cb)) != sum;
    failures += dec(cd::scalar_mul(pk, ca, s)) != prod;
    failures += dec(cd::rerandomize(pk, ca, rng)) != a;
    failures += cd::decrypt_crt(pk, k32.private_key, ca) != a;
    cases += 4;
  }

  const cd::PaillierKeypair toy = cd::keypair_from_primes(5, 7);
  const auto& tpk = toy.public_key;
  const long tn = 35;
  std::vector<cd::Ciphertext> enc(tn);
  for (long m = 0; m < tn; ++m) {
    enc[m] = cd::encrypt(tpk, m, rng);
    failures += cd::decrypt(tpk, toy.private_key, enc[m]) != m;
    ++cases;
  }
  for (long a = 0; a < tn; ++a) {
    for (long b = 0; b < tn; ++b) {
      failures += cd::decrypt(tpk, toy.private_key, cd::add_cipher(tpk, enc[a], enc[b])) != (a + b) % tn;
      failures += cd::decrypt(tpk, toy.private_key, cd::scalar_mul(tpk, enc[a], b)) != (a * b) % tn;
      cases += 2;
    }
  }
  const double t = seconds_since(start);
  return {failures == 0 && t < 30.0,
          fmt("%zu cases (32-bit key and exhaustive n=35), %zu failures, %.1f s", cases, failures, t)};
}

// 2. Losslessness on the demo model.
Outcome losslessness() {
  const cd::ModelSpec model = cd::make_demo_model(0);
  std::size_t passed = 0, mismatches = 0;
  double worst = 0.0;
  std::string first_error;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto start = std::chrono::steady_clock::now();
    cd::RandomSource rng = cd::RandomSource(seed).derive("image");
    const cd::RealTensor image = cd::add_noise(cd::make_phantom(32, rng), 10.0, rng);
    cd::VerifyOptions options;
    options.key_bits = 512;
    options.seed = seed;
    const cd::VerificationReport r = cd::run_verification(model, image, options);
    worst = std::max(worst, seconds_since(start));
    passed += r.passed && r.mismatches == 0 && r.elements == 32 * 32;
    mismatches += r.mismatches;
    if (!r.error.empty() && first_error.empty()) first_error = r.error;
  }
  return {passed == 10 && worst < 600.0,
          fmt("%zu/10 seeds integer-identical, %zu mismatched elements, slowest seed %.1f s%s%s",
              passed, mismatches, worst, first_error.empty() ? "" : ", error: ",
              first_error.c_str())};
}

// 3. Linear framework.
Outcome linear_framework(const cd::PaillierKeypair& keys) {
  const auto start = std::chrono::steady_clock::now();
  const cd::ModelSpec model = cd::make_linear_demo_model(0);
  const cd::Server server(model);
  const cd::IntTensor x = probe_image(32, 3);
  const cd::SessionResult r = cd::run_linear_session(server, keys, x);
  const std::size_t up = cd::serialized_size(model.input_shape, keys.public_key);
  const std::size_t down = cd::serialized_size(cd::infer_shapes(model).back(), keys.public_key);
  const bool exact = r.output.data == cd::infer_plain_fixed(cd::quantize_model(model), x).data;
  const bool pass = r.ok && exact && r.client_stats.act_round_trips == 0 &&
                    cd::frames_with_tag(r.transcript, cd::MessageTag::kActRequest).empty() &&
                    r.client_stats.upload_bytes == up && r.client_stats.download_bytes == down &&
                    r.server_stats == r.client_stats && seconds_since(start) < 60.0;
  return {pass, fmt("%zu ACT round trips, upload %zu B (one image %zu B), download %zu B "
                    "(one image %zu B), output %s",
                    r.client_stats.act_round_trips, r.client_stats.upload_bytes, up,
                    r.client_stats.download_bytes, down, exact ? "exact" : "MISMATCH")};
}

// 4. Nonlinear framework message structure.
Outcome nonlinear_framework(const cd::SessionResult& r, const cd::ModelSpec& model) {
  const auto requests = cd::frames_with_tag(r.transcript, cd::MessageTag::kActRequest);
  const auto responses = cd::frames_with_tag(r.transcript, cd::MessageTag::kActResponse);
  const auto shapes = cd::infer_shapes(model);
  std::vector<std::size_t> expected_sizes;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto kind = model.layers[i].kind;
    if (kind == cd::LayerKind::kRelu || kind == cd::LayerKind::kLeakyRelu) {
      expected_sizes.push_back((shapes[i].size() + 7) / 8 + 3);
    }
  }
  bool sizes_ok = responses.size() == expected_sizes.size();
  for (std::size_t i = 0; sizes_ok && i < responses.size(); ++i) {
    sizes_ok = responses[i].payload.size() == expected_sizes[i];
  }
  // Strict alternation: every request is answered before the next one.
  bool alternates = true;
  int open = 0;
  for (const auto& e : r.transcript) {
    const auto f = cd::decode_frame(e.bytes);
    if (f.tag == cd::MessageTag::kActRequest) alternates &= open++ == 0;
    if (f.tag == cd::MessageTag::kActResponse) alternates &= --open == 0;
  }
  const std::size_t acts = activation_count(model);
  const bool pass = r.ok && requests.size() == acts && responses.size() == acts && sizes_ok &&
                    alternates && r.client_stats.act_round_trips == acts;
  return {pass, fmt("%zu activation layers, %zu ACT_REQUEST, %zu ACT_RESPONSE, response "
                    "payloads %s ceil(n/8)+3",
                    acts, requests.size(), responses.size(), sizes_ok ? "equal" : "DIFFER from")};
}

// 5. Sign-combination truth table.
Outcome truth_table(const cd::PaillierKeypair& keys) {
  const auto& pk = keys.public_key;
  cd::RandomSource rng(5);
  int correct = 0;
  for (long q : {3L, 0L, -3L}) {
    for (std::int64_t m : {2L, -2L}) {
      cd::IntTensor t(cd::Shape{1, 1, 1}, cd::BigInt(q), cd::ScaleTag{16});
      const cd::CipherTensor c = cd::encrypt_tensor(pk, t, rng);
      const auto pm = cd::perturbation_from_values(c.shape, {m});
      const auto su = cd::client_act(pk, keys.private_key, cd::server_perturb(pk, c, pm));
      const auto out = cd::decrypt_tensor(pk, keys.private_key,
                                          cd::server_combine_and_activate(pk, c, su, pm, rng));
      correct += out.data[0] == std::max(q, 0L);
    }
  }
  cd::IntTensor t(cd::Shape{1, 1, 1}, cd::BigInt(3), cd::ScaleTag{16});
  const cd::CipherTensor c = cd::encrypt_tensor(pk, t, rng);
  const auto pm = cd::perturbation_from_values(c.shape, {-2});
  const auto su = cd::client_act(pk, keys.private_key, cd::server_perturb(pk, c, pm));
  const int literal = su.bits[0] * pm.server_signs[0];
  const int agreed = cd::combine_signs(su, pm).bits[0];
  return {correct == 6 && literal == 0 && agreed == 1,
          fmt("%d/6 cells equal ReLU; M=-2, Q=3: literal product %d, agreement %d", correct,
              literal, agreed)};
}

// 6. Attack separation.
Outcome attack_separation() {
  const auto start = std::chrono::steady_clock::now();
  cd::AttackConfig cfg;
  cfg.key_bits = 512;
  const cd::AttackExperiment e = cd::run_attack_experiment(cd::make_demo_model(0), cfg);
  const double clean = e.clean.weight_relative_error;
  const double pert = e.perturbed.weight_relative_error;
  const double ratio = pert / clean;
  const double t = seconds_since(start);
  const bool pass = clean < 1e-3 && pert > 0.5 && ratio >= 100.0 &&
                    e.clean.samples_used >= 4 * e.clean.unknowns_per_channel &&
                    !e.clean.underdetermined && t < 300.0;
  return {pass, fmt("clean error %.3g, perturbed error %.3g, ratio %.3g, %zu equations for %zu "
                    "unknowns per channel, %.1f s",
                    clean, pert, ratio, e.clean.samples_used, e.clean.unknowns_per_channel, t)};
}

// 7. Quantization fidelity.
Outcome quantization_fidelity() {
  const cd::ModelSpec model = cd::make_demo_model(0);
  const cd::QuantizedModel q = cd::quantize_model(model);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    cd::RandomSource rng(seed);
    const cd::RealTensor x = cd::add_noise(cd::make_phantom(32, rng), 20.0, rng);
    const cd::RealTensor f = cd::infer_plain_float(model, x);
    const cd::RealTensor g =
        cd::dequantize_tensor(cd::infer_plain_fixed(q, cd::quantize_tensor(x, 16)));
    for (std::size_t i = 0; i < f.data.size(); ++i) worst = std::max(worst, std::abs(f.data[i] - g.data[i]));
  }
  const double bound = 10.0 * std::ldexp(1.0, -16);
  return {worst <= bound, fmt("max |fixed - float| = %.3g (%.2f steps of 2^-16), bound %.3g",
                              worst, worst * 65536.0, bound)};
}

// 8. Server blindness.
Outcome server_blindness() {
  static_assert(!std::is_constructible_v<cd::Server, cd::ModelSpec, cd::PaillierKeypair>);
  static_assert(std::is_same_v<decltype(std::declval<const cd::ServerSession&>().public_key()),
                               const std::optional<cd::PaillierPublicKey>&>);
  const std::filesystem::path root = CD_SOURCE_DIR;
  const auto mods = cd::testing::reachable_modules(root, {"server", "serve"});
  std::size_t reached = 0;
  for (const auto& p : cd::testing::private_modules()) reached += mods.count(p);
  const auto hits = cd::testing::private_symbol_uses(root, mods);
  // Negative control: the walker must see the client's private dependencies.
  const auto client = cd::testing::reachable_modules(root, {"client"});
  const bool control = client.count("paillier_private") && client.count("decrypt_tensor");
  return {reached == 0 && hits.empty() && control && mods.count("protocol"),
          fmt("%zu server modules walked, %zu private modules reachable, %zu private-key "
              "symbol uses, control %s",
              mods.size(), reached, hits.size(), control ? "ok" : "FAILED")};
}

// 9. Wire determinism.
Outcome wire_determinism(const cd::SessionResult& a, const cd::SessionResult& b,
                         const cd::SessionResult& c) {
  const bool same = a.transcript == b.transcript;
  std::size_t differing = 0;
  const auto ia = cd::frames_with_tag(a.transcript, cd::MessageTag::kEncImage);
  const auto ic = cd::frames_with_tag(c.transcript, cd::MessageTag::kEncImage);
  const auto ra = cd::frames_with_tag(a.transcript, cd::MessageTag::kResult);
  const auto rc = cd::frames_with_tag(c.transcript, cd::MessageTag::kResult);
  differing += ia.size() == 1 && ic.size() == 1 && ia[0].payload != ic[0].payload;
  differing += ra.size() == 1 && rc.size() == 1 && ra[0].payload != rc[0].payload;
  const bool outputs = a.output == c.output && a.ok && c.ok;
  return {same && differing == 2 && outputs,
          fmt("same seeds: transcripts %s (%zu frames); different seeds: image and result "
              "ciphertexts %s, decoded outputs %s",
              same ? "byte-identical" : "DIFFER", a.transcript.size(),
              differing == 2 ? "differ" : "DO NOT differ", outputs ? "identical" : "DIFFER")};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("criterion %d %s: %s (%s)\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  };

  cd::RandomSource key_rng(2026);
  const cd::PaillierKeypair keys = cd::keygen(512, key_rng);
  const cd::ModelSpec demo = cd::make_demo_model(0, {1, 16, 16});
  const cd::Server server(demo);
  const cd::IntTensor x = probe_image(16, 9);
  const auto run_a = cd::run_nonlinear_session(server, keys, x, cd::SessionSeeds{7, 8});
  const auto run_b = cd::run_nonlinear_session(server, keys, x, cd::SessionSeeds{7, 8});
  const auto run_c = cd::run_nonlinear_session(server, keys, x, cd::SessionSeeds{17, 18});

  report(1, "homomorphic identities", homomorphic_identities);
  report(2, "losslessness", losslessness);
  report(3, "linear framework", [&] { return linear_framework(keys); });
  report(4, "nonlinear framework", [&] { return nonlinear_framework(run_a, demo); });
  report(5, "sign truth table", [&] { return truth_table(keys); });
  report(6, "attack separation", attack_separation);
  report(7, "quantization fidelity", quantization_fidelity);
  report(8, "server blindness", server_blindness);
  report(9, "wire determinism", [&] { return wire_determinism(run_a, run_b, run_c); });
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
