// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "cipherdenoise/client.hpp"
#include "cipherdenoise/decrypt_tensor.hpp"
#include "cipherdenoise/encoding.hpp"
#include "cipherdenoise/error.hpp"
#include "cipherdenoise/image.hpp"
#include "cipherdenoise/model.hpp"
#include "cipherdenoise/protocol.hpp"
#include "cipherdenoise/server.hpp"
#include "cipherdenoise/session.hpp"

namespace cipherdenoise {
namespace {

class ProtocolTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    RandomSource rng(99);
    keys_ = new PaillierKeypair(keygen(256, rng));
  }
  static void TearDownTestSuite() {
    delete keys_;
    keys_ = nullptr;
  }

  static const PaillierPublicKey& pk() { return keys_->public_key; }
  static const PaillierPrivateKey& sk() { return keys_->private_key; }

  static CipherTensor enc(const std::vector<long>& values, int scale = 16) {
    IntTensor t(Shape{1, 1, values.size()}, BigInt(0), ScaleTag{scale});
    for (std::size_t i = 0; i < values.size(); ++i) t.data[i] = values[i];
    RandomSource rng(values.size());
    return encrypt_tensor(pk(), t, rng);
  }
  static std::vector<long> dec(const CipherTensor& c) {
    std::vector<long> out;
    for (const auto& v : decrypt_tensor(pk(), sk(), c).data) out.push_back(v.get_si());
    return out;
  }

  static IntTensor image(std::size_t size, std::uint64_t seed) {
    RandomSource rng(seed);
    return quantize_tensor(add_noise(make_phantom(size, rng), 20.0, rng), 16);
  }

  static std::size_t activation_count(const ModelSpec& m) {
    std::size_t n = 0;
    for (const auto& l : m.layers) {
      if (l.kind == LayerKind::kRelu || l.kind == LayerKind::kLeakyRelu) ++n;
    }
    return n;
  }

  static PaillierKeypair* keys_;
};

PaillierKeypair* ProtocolTest::keys_ = nullptr;

TEST_F(ProtocolTest, ClientSignsIncludeZero) {
  const SignMatrix s = client_act(pk(), sk(), enc({5, -3, 0}));
  EXPECT_EQ(s.bits, (std::vector<std::uint8_t>{1, 0, 1}));
}

TEST_F(ProtocolTest, SignAgreementTruthTable) {
  RandomSource rng(1);
  for (long q : {3L, 0L, -3L}) {
    for (std::int64_t m : {2L, -2L}) {
      const CipherTensor c = enc({q});
      const PerturbanceMatrix pm = perturbation_from_values(c.shape, {m});
      const SignMatrix su = client_act(pk(), sk(), server_perturb(pk(), c, pm));
      const CipherTensor out = server_combine_and_activate(pk(), c, su, pm, rng);
      EXPECT_EQ(dec(out), (std::vector<long>{std::max(q, 0L)})) << "Q=" << q << " M=" << m;
    }
  }
}

TEST_F(ProtocolTest, LiteralProductOfSignsIsWrong) {
  const CipherTensor c = enc({3});
  const PerturbanceMatrix pm = perturbation_from_values(c.shape, {-2});
  const SignMatrix su = client_act(pk(), sk(), server_perturb(pk(), c, pm));
  ASSERT_EQ(su.bits[0], 0);
  ASSERT_EQ(pm.server_signs[0], 0);
  EXPECT_EQ(su.bits[0] * pm.server_signs[0], 0);  // would zero a positive feature
  EXPECT_EQ(combine_signs(su, pm).bits[0], 1);
}

TEST_F(ProtocolTest, ZeroPerturbationRejected) {
  EXPECT_THROW(perturbation_from_values(Shape{1, 1, 2}, {1, 0}), Error);
}

TEST_F(ProtocolTest, UnitPerturbationGivesPlainSigns) {
  const std::vector<long> q = {4, -1, 0, 7, -9, 2};
  const CipherTensor c = enc(q);
  const PerturbanceMatrix pm = perturbation_from_values(c.shape, std::vector<std::int64_t>(q.size(), 1));
  const SignMatrix su = client_act(pk(), sk(), server_perturb(pk(), c, pm));
  EXPECT_EQ(combine_signs(su, pm).bits, (std::vector<std::uint8_t>{1, 0, 1, 1, 0, 1}));
}

TEST_F(ProtocolTest, RandomPerturbationIsElementwiseProduct) {
  RandomSource rng(3);
  std::vector<long> q;
  for (int i = 0; i < 64; ++i) q.push_back(static_cast<long>(rng.uniform(2001)) - 1000);
  const CipherTensor c = enc(q);
  const PerturbanceMatrix pm = sample_perturbation(c.shape, kDefaultPerturbationBound, rng);
  const auto got = dec(server_perturb(pk(), c, pm));
  bool any_negative = false;
  for (std::size_t i = 0; i < q.size(); ++i) {
    ASSERT_NE(pm.values[i], 0);
    ASSERT_LE(std::abs(pm.values[i]), static_cast<long>(kDefaultPerturbationBound));
    EXPECT_EQ(pm.server_signs[i], pm.values[i] >= 0 ? 1 : 0);
    EXPECT_EQ(got[i], q[i] * pm.values[i]);
    any_negative |= pm.values[i] < 0;
  }
  EXPECT_TRUE(any_negative);
  // Full nonlinear step still equals ReLU.
  const SignMatrix su = client_act(pk(), sk(), server_perturb(pk(), c, pm));
  const auto out = dec(server_combine_and_activate(pk(), c, su, pm, rng));
  for (std::size_t i = 0; i < q.size(); ++i) EXPECT_EQ(out[i], std::max(q[i], 0L));
}

TEST_F(ProtocolTest, PerturbationSamplerCoversBothSigns) {
  RandomSource rng(4);
  const PerturbanceMatrix pm = sample_perturbation(Shape{1, 100, 100}, 4, rng);
  std::array<int, 9> hist{};
  for (auto v : pm.values) {
    ASSERT_NE(v, 0);
    ASSERT_LE(std::abs(v), 4);
    ++hist[static_cast<std::size_t>(v + 4)];
  }
  EXPECT_EQ(hist[4], 0);
  for (std::size_t k : {0UL, 1UL, 2UL, 3UL, 5UL, 6UL, 7UL, 8UL}) {
    EXPECT_NEAR(hist[k], 1250, 200) << k;
  }
}

TEST_F(ProtocolTest, LeakyActivation) {
  RandomSource rng(5);
  const CipherTensor c = enc({-4, 0, 6});
  const SignMatrix s{c.shape, {0, 1, 1}};
  EXPECT_EQ(dec(server_activate_leaky(pk(), c, s, 0, 16, rng)),
            (std::vector<long>{0, 0, 6L << 16}));
  EXPECT_EQ(dec(server_activate_leaky(pk(), c, s, 65536, 16, rng)),
            (std::vector<long>{-4L << 16, 0, 6L << 16}));
  EXPECT_EQ(dec(server_activate_leaky(pk(), c, s, 6554, 16, rng)),
            (std::vector<long>{-4L * 6554, 0, 6L << 16}));
  EXPECT_EQ(server_activate_leaky(pk(), c, s, 6554, 16, rng).scale, ScaleTag{32});
}

TEST_F(ProtocolTest, ThresholdShift) {
  RandomSource rng(6);
  const CipherTensor c = enc({1, 3});
  const CipherTensor shifted = server_threshold_shift(pk(), c, enc({-2}));
  EXPECT_EQ(dec(shifted), (std::vector<long>{-1, 1}));
  const PerturbanceMatrix pm = sample_perturbation(c.shape, kDefaultPerturbationBound, rng);
  const SignMatrix su = client_act(pk(), sk(), server_perturb(pk(), shifted, pm));
  EXPECT_EQ(combine_signs(su, pm).bits, (std::vector<std::uint8_t>{0, 1}));
  EXPECT_EQ(dec(server_combine_and_activate(pk(), c, su, pm, rng)), (std::vector<long>{0, 3}));
  EXPECT_THROW(server_threshold_shift(pk(), c, enc({-2}, 32)), Error);
}

TEST_F(ProtocolTest, ActivationResultIsRerandomized) {
  RandomSource rng(7);
  const CipherTensor c = enc({5, 6});
  const PerturbanceMatrix pm = perturbation_from_values(c.shape, {1, 1});
  const SignMatrix all{c.shape, {1, 1}};
  const CipherTensor out = server_combine_and_activate(pk(), c, all, pm, rng);
  EXPECT_EQ(dec(out), (std::vector<long>{5, 6}));
  EXPECT_NE(out.data[0], c.data[0]);
  EXPECT_NE(out.data[1], c.data[1]);
}

TEST_F(ProtocolTest, NonlinearSessionMatchesFixedPointReference) {
  const ModelSpec m = make_demo_model(3, {1, 8, 8});
  const Server server(m);
  const IntTensor x = image(8, 3);
  const SessionResult r = run_nonlinear_session(server, *keys_, x);
  ASSERT_TRUE(r.ok);
  EXPECT_EQ(r.output.data, infer_plain_fixed(quantize_model(m), x).data);
  EXPECT_EQ(r.output.scale, ScaleTag{64});
  const std::size_t acts = activation_count(m);
  EXPECT_EQ(r.client_stats.act_round_trips, acts);
  EXPECT_EQ(r.server_stats, r.client_stats);
  EXPECT_EQ(frames_with_tag(r.transcript, MessageTag::kActRequest).size(), acts);
  EXPECT_EQ(frames_with_tag(r.transcript, MessageTag::kEncImage).size(), 1U);
  EXPECT_EQ(frames_with_tag(r.transcript, MessageTag::kResult).size(), 1U);
  const auto shapes = infer_shapes(m);
  std::size_t k = 0;
  const auto responses = frames_with_tag(r.transcript, MessageTag::kActResponse);
  ASSERT_EQ(responses.size(), acts);
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    if (m.layers[i].kind != LayerKind::kRelu) continue;
    EXPECT_EQ(responses[k++].payload.size(), (shapes[i].size() + 7) / 8 + 3);
  }
}

TEST_F(ProtocolTest, LinearSessionHasNoActivationTraffic) {
  const ModelSpec m = make_linear_demo_model(4, {1, 8, 8});
  const Server server(m);
  const IntTensor x = image(8, 4);
  const SessionResult r = run_linear_session(server, *keys_, x);
  ASSERT_TRUE(r.ok);
  EXPECT_EQ(r.output.data, infer_plain_fixed(quantize_model(m), x).data);
  EXPECT_EQ(r.client_stats.act_round_trips, 0U);
  EXPECT_EQ(r.client_stats.act_request_bytes, 0U);
  EXPECT_EQ(frames_with_tag(r.transcript, MessageTag::kActRequest).size(), 0U);
  EXPECT_EQ(r.client_stats.upload_bytes, r.client_stats.enc_image_bytes);
  EXPECT_EQ(r.client_stats.download_bytes, r.client_stats.result_bytes);
}

TEST_F(ProtocolTest, LinearRequestRefusedForNonlinearModel) {
  const Server server(make_demo_model(3, {1, 8, 8}));
  const SessionResult r = run_session(server, *keys_, image(8, 1), Framework::kLinear);
  EXPECT_FALSE(r.ok);
  ASSERT_TRUE(r.error.has_value());
  EXPECT_EQ(r.error->code, static_cast<std::uint16_t>(WireError::kRefused));
  EXPECT_EQ(frames_with_tag(r.transcript, MessageTag::kEncImage).size(), 0U);
  EXPECT_THROW(run_linear_session(server, *keys_, image(8, 1)), Error);
}

TEST_F(ProtocolTest, OutOfOrderMessageAborts) {
  const Server server(make_demo_model(3, {1, 8, 8}));
  ServerSession session = server.open_session(RandomSource(1));
  Frame f;
  f.tag = MessageTag::kEncImage;
  const auto replies = session.handle(f);
  ASSERT_EQ(replies.size(), 1U);
  EXPECT_EQ(replies[0].tag, MessageTag::kError);
  EXPECT_EQ(decode_error(replies[0].payload).code,
            static_cast<std::uint16_t>(WireError::kProtocolOrder));
  EXPECT_EQ(session.phase(), SessionPhase::kAborted);
}

TEST_F(ProtocolTest, MismatchedFracBitsRejected) {
  const Server server(make_demo_model(3, {1, 8, 8}));
  const SessionResult r = run_session(
      server, *keys_, quantize_tensor(dequantize_tensor(image(8, 1)), 12), Framework::kNonlinear);
  EXPECT_FALSE(r.ok);
  ASSERT_TRUE(r.error.has_value());
  EXPECT_NE(r.error->message.find("frac_bits 16"), std::string::npos) << r.error->message;
  EXPECT_EQ(frames_with_tag(r.transcript, MessageTag::kEncImage).size(), 0U);
}

TEST_F(ProtocolTest, TranscriptDeterministicUnderSeeds) {
  const Server server(make_demo_model(3, {1, 8, 8}));
  const IntTensor x = image(8, 2);
  const SessionResult a = run_nonlinear_session(server, *keys_, x, SessionSeeds{10, 20});
  const SessionResult b = run_nonlinear_session(server, *keys_, x, SessionSeeds{10, 20});
  EXPECT_EQ(a.transcript, b.transcript);
  const SessionResult c = run_nonlinear_session(server, *keys_, x, SessionSeeds{11, 21});
  EXPECT_NE(a.transcript, c.transcript);
  EXPECT_EQ(a.output, c.output);
}

TEST_F(ProtocolTest, ClientSeesOnlyPerturbedFeatures) {
  const ModelSpec m = make_demo_model(3, {1, 8, 8});
  const IntTensor x = image(8, 5);
  const auto trace = infer_plain_fixed_trace(quantize_model(m), x);
  std::vector<IntTensor> seen;
  SessionHooks hooks;
  hooks.on_act = [&](std::uint16_t, const IntTensor& v) { seen.push_back(v); };
  ASSERT_TRUE(run_nonlinear_session(Server(m), *keys_, x, {}, hooks).ok);
  ASSERT_EQ(seen.size(), 2U);
  // The first activation follows layer 0; its input is trace[0].
  const IntTensor& truth = trace[0];
  std::size_t equal = 0, sign_flips = 0;
  for (std::size_t i = 0; i < truth.data.size(); ++i) {
    if (seen[0].data[i] == truth.data[i]) ++equal;
    if ((seen[0].data[i] < 0) != (truth.data[i] < 0)) ++sign_flips;
    if (truth.data[i] != 0) {
      // The observed value is an integer multiple of the true one.
      EXPECT_EQ(seen[0].data[i] % truth.data[i], 0);
    }
  }
  EXPECT_LT(equal, truth.data.size() / 10);
  EXPECT_GT(sign_flips, truth.data.size() / 4);

  ServerConfig clean;
  clean.perturbation = PerturbationMode::kNone;
  seen.clear();
  ASSERT_TRUE(run_nonlinear_session(Server(m, clean), *keys_, x, {}, hooks).ok);
  EXPECT_EQ(seen[0].data, truth.data);
}

TEST_F(ProtocolTest, FixedPerturbationRepeatsAcrossSessions) {
  const ModelSpec m = make_demo_model(3, {1, 8, 8});
  ServerConfig cfg;
  cfg.perturbation = PerturbationMode::kFixed;
  cfg.fixed_perturbation_seed = 42;
  const Server server(m, cfg);
  const IntTensor x = image(8, 6);
  std::vector<IntTensor> seen;
  SessionHooks hooks;
  hooks.on_act = [&](std::uint16_t, const IntTensor& v) { seen.push_back(v); };
  ASSERT_TRUE(run_nonlinear_session(server, *keys_, x, SessionSeeds{1, 2}, hooks).ok);
  ASSERT_TRUE(run_nonlinear_session(server, *keys_, x, SessionSeeds{3, 4}, hooks).ok);
  ASSERT_EQ(seen.size(), 4U);
  EXPECT_EQ(seen[0].data, seen[2].data);
}

}  // namespace
}  // namespace cipherdenoise
