// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "cipherdenoise/verify.hpp"

#include <sstream>

#include "cipherdenoise/decrypt_tensor.hpp"
#include "cipherdenoise/error.hpp"
#include "cipherdenoise/session.hpp"

namespace cipherdenoise {
namespace {

std::size_t compare(const IntTensor& expected, const IntTensor& actual,
                    std::optional<Mismatch>& first) {
  if (expected.shape != actual.shape || expected.scale != actual.scale) {
    first = Mismatch{};
    return expected.data.size();
  }
  std::size_t count = 0;
  const Shape& s = expected.shape;
  for (std::size_t k = 0; k < expected.data.size(); ++k) {
    if (expected.data[k] == actual.data[k]) continue;
    if (count++ == 0) {
      first = Mismatch{{k / s.plane(), (k % s.plane()) / s.width, k % s.width},
                       expected.data[k],
                       actual.data[k]};
    }
  }
  return count;
}

}  // namespace

VerificationReport run_verification(const ModelSpec& model, const RealTensor& image,
                                    const VerifyOptions& options) {
  RandomSource rng(options.seed);
  RandomSource key_rng = rng.derive("keygen");
  return run_verification(model, image, keygen(options.key_bits, key_rng), options);
}

VerificationReport run_verification(const ModelSpec& model, const RealTensor& image,
                                    const PaillierKeypair& keys,
                                    const VerifyOptions& options) {
  VerificationReport report;
  const QuantizedModel reference = quantize_model(model);
  const IntTensor input = quantize_tensor(image, model.frac_bits_input);
  const auto trace = infer_plain_fixed_trace(reference, input, &keys.public_key.n());
  const IntTensor& expected = trace.empty() ? input : trace.back();

  ModelSpec served = model;
  if (options.tamper) options.tamper(served);
  const Server server(served);

  report.framework = model.linear() ? Framework::kLinear : Framework::kNonlinear;
  report.expected_act_round_trips = model.activation_count();

  std::vector<CipherTensor> layer_outputs;
  SessionHooks hooks;
  if (options.per_layer) {
    hooks.on_layer = [&](std::size_t, const CipherTensor& t) { layer_outputs.push_back(t); };
  }
  const RandomSource rng(options.seed);
  SessionSeeds seeds{rng.derive("client").next_u64(), rng.derive("server").next_u64()};
  const SessionResult result =
      run_session(server, keys, input, report.framework, seeds, hooks);

  report.stats = result.client_stats;
  report.act_round_trips = result.client_stats.act_round_trips;
  report.elements = expected.data.size();
  if (!result.ok) {
    report.error = result.error ? result.error->message : "session produced no result";
  } else {
    report.mismatches = compare(expected, result.output, report.first_mismatch);
  }

  for (std::size_t i = 0; i < layer_outputs.size() && i < trace.size(); ++i) {
    LayerCheck check{i, reference.layers[i].kind, 0, std::nullopt};
    const IntTensor got = decrypt_tensor(keys.public_key, keys.private_key, layer_outputs[i]);
    check.mismatches = compare(trace[i], got, check.first);
    if (check.mismatches > 0 && !report.first_bad_layer) report.first_bad_layer = i;
    report.layers.push_back(std::move(check));
  }

  report.passed = result.ok && report.mismatches == 0 &&
                  report.act_round_trips == report.expected_act_round_trips;
  return report;
}

std::string format_report(const VerificationReport& report) {
  std::ostringstream out;
  out << (report.passed ? "PASS" : "FAIL") << ": framework="
      << (report.framework == Framework::kLinear ? "linear" : "nonlinear")
      << " elements=" << report.elements << " mismatches=" << report.mismatches
      << " act_round_trips=" << report.act_round_trips << "/"
      << report.expected_act_round_trips << " upload=" << report.stats.upload_bytes
      << " download=" << report.stats.download_bytes << '\n';
  if (!report.error.empty()) out << "  session error: " << report.error << '\n';
  if (report.first_mismatch) {
    const auto& m = *report.first_mismatch;
    out << "  first mismatch at (" << m.coord[0] << ", " << m.coord[1] << ", " << m.coord[2]
        << "): expected " << m.expected.get_str() << ", got " << m.actual.get_str() << '\n';
  }
  if (!report.passed) {
    for (const auto& layer : report.layers) {
      out << "  layer " << layer.layer << " (" << to_string(layer.kind)
          << "): " << layer.mismatches << " mismatches";
      if (layer.first) {
        out << ", first at (" << layer.first->coord[0] << ", " << layer.first->coord[1]
            << ", " << layer.first->coord[2] << ")";
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace cipherdenoise
