// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>

#include "cipherdenoise/attacks.hpp"
#include "cipherdenoise/budget.hpp"
#include "cipherdenoise/ciphertensor.hpp"
#include "cipherdenoise/decrypt_tensor.hpp"
#include "cipherdenoise/error.hpp"
#include "cipherdenoise/image.hpp"
#include "cipherdenoise/model.hpp"
#include "cipherdenoise/paillier_private.hpp"
#include "cipherdenoise/serve.hpp"
#include "cipherdenoise/session.hpp"
#include "cipherdenoise/train.hpp"
#include "cipherdenoise/transport.hpp"
#include "cipherdenoise/verify.hpp"

namespace cipherdenoise::cli {
namespace {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoError:
    case ErrorCode::kParseError:
      return kExitIo;
    case ErrorCode::kProtocolError:
    case ErrorCode::kProtocolOrder:
      return kExitProtocol;
    default:
      return kExitUsage;
  }
}

struct ImageOptions {
  std::string path;
  bool raw = false;
  std::size_t width = 0;
  std::size_t height = 0;
};

void add_image_options(CLI::App* cmd, ImageOptions& o, bool required) {
  auto* image = cmd->add_option("--image", o.path, "input PGM (or float32 with --raw)");
  if (required) image->required();
  auto* raw = cmd->add_flag("--raw", o.raw, "read little-endian float32 instead of PGM");
  cmd->add_option("--width", o.width, "raw image width")->needs(raw);
  cmd->add_option("--height", o.height, "raw image height")->needs(raw);
}

RealTensor load_image(const ImageOptions& o) {
  if (o.raw) {
    if (o.width == 0 || o.height == 0) {
      throw Error(ErrorCode::kDomainError, "--raw needs --width and --height");
    }
    return read_raw_float32(o.path, o.width, o.height);
  }
  return read_pgm(o.path);
}

ModelSpec load_or_demo(const std::string& path, bool linear, std::uint64_t seed,
                       std::size_t size) {
  if (!path.empty()) return load_model(path);
  return linear ? make_linear_demo_model(seed, {1, size, size})
                : make_demo_model(seed, {1, size, size});
}

void print_counters(std::ostream& out, const CommStats& s) {
  out << "communication (tensor payload bytes)\n"
      << "  upload   " << std::setw(10) << s.upload_bytes << "  = encrypted image "
      << s.enc_image_bytes << " + sign matrices " << s.act_response_bytes << '\n'
      << "  download " << std::setw(10) << s.download_bytes << "  = result "
      << s.result_bytes << " + perturbed features " << s.act_request_bytes << '\n'
      << "  activation round trips " << s.act_round_trips << '\n'
      << "  wire bytes up " << s.upload_wire_bytes << ", down " << s.download_wire_bytes
      << '\n';
}

// keygen ----------------------------------------------------------------------

struct KeygenArgs {
  std::size_t bits = kDefaultKeyBits;
  std::string out_dir = ".";
  std::string name = "cipherdenoise";
  std::optional<std::uint64_t> seed;
};

int cmd_keygen(const KeygenArgs& a, std::ostream& out) {
  if (a.bits < kMinKeyBits) {
    throw Error(ErrorCode::kDomainError, "--bits must be at least " +
                                             std::to_string(kMinKeyBits));
  }
  RandomSource rng = a.seed ? RandomSource(*a.seed) : RandomSource::from_entropy();
  const PaillierKeypair keys = keygen(a.bits, rng);
  fs::create_directories(a.out_dir);
  const fs::path pub = fs::path(a.out_dir) / (a.name + ".pub.json");
  const fs::path priv = fs::path(a.out_dir) / (a.name + ".key.json");
  save_public_key(pub, keys.public_key);
  save_private_key(priv, keys);
  out << "public key  " << pub.string() << '\n'
      << "private key " << priv.string() << '\n'
      << "fingerprint " << keys.public_key.fingerprint() << '\n';
  return kExitOk;
}

// encrypt / decrypt -----------------------------------------------------------

struct EncryptArgs {
  std::string pubkey;
  ImageOptions image;
  int frac_bits = kDefaultFracBits;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int cmd_encrypt(const EncryptArgs& a, std::ostream& out) {
  const PaillierPublicKey pk = load_public_key(a.pubkey);
  FixedPointParams{a.frac_bits, pk.n()}.validate();
  const RealTensor image = load_image(a.image);
  RandomSource rng = a.seed ? RandomSource(*a.seed) : RandomSource::from_entropy();
  const IntTensor q = quantize_tensor(image, a.frac_bits);
  for (const BigInt& v : q.data) {
    if (2 * abs(v) >= pk.n()) {
      throw Error(ErrorCode::kEncodeOverflow, "pixel exceeds the plaintext range");
    }
  }
  const CipherTensor ct = encrypt_tensor(pk, q, rng);
  save_ctz(a.out, ct, pk);
  out << "wrote " << a.out << " (" << ct.shape.str() << ", frac_bits " << a.frac_bits
      << ", " << serialized_size(ct.shape, pk) << " bytes)\n";
  return kExitOk;
}

struct DecryptArgs {
  std::string privkey;
  std::string in;
  std::optional<int> scale;
  std::string out;
};

int cmd_decrypt(const DecryptArgs& a, std::ostream& out) {
  const PaillierKeypair keys = load_private_key(a.privkey);
  const CipherTensor ct = load_ctz(a.in, keys.public_key);
  IntTensor plain = decrypt_tensor(keys.public_key, keys.private_key, ct);
  if (a.scale) plain.scale = ScaleTag{*a.scale};
  const RealTensor image = dequantize_tensor(plain);
  write_pgm(a.out, image);
  out << "wrote " << a.out << " (" << image.shape.str() << ", scale "
      << plain.scale.total_frac_bits << ")\n";
  return kExitOk;
}

// serve -----------------------------------------------------------------------

struct ServeArgs {
  std::string model;
  std::string listen = "127.0.0.1:7700";
  std::size_t max_sessions = 0;
  std::size_t key_bits = kDefaultKeyBits;
  std::uint64_t perturbation_bound = kDefaultPerturbationBound;
  std::string port_file;
  std::optional<std::uint64_t> seed;
};

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err,
              const std::atomic<bool>* stop) {
  const ModelSpec model = load_model(a.model);
  BudgetOptions budget;
  budget.perturbation_bits =
      static_cast<int>(std::ceil(std::log2(static_cast<double>(a.perturbation_bound))));
  const BudgetReport report = estimate_budget(model, model.frac_bits_input, budget);
  if (report.required_key_bits > a.key_bits) {
    err << "refusing to serve: model '" << model.name << "' needs keys of at least "
        << report.required_key_bits << " bits, configured for " << a.key_bits << '\n';
    return kExitUsage;
  }
  ServerConfig config;
  config.perturbation_bound = a.perturbation_bound;
  config.min_key_bits = report.required_key_bits;
  const Server server(model, config);
  Listener listener(parse_endpoint(a.listen));
  std::mutex log_mutex;
  ServeOptions options;
  options.max_sessions = a.max_sessions;
  options.stop = stop;
  options.on_listening = [&](std::uint16_t port) {
    out << "serving '" << model.name << "' on port " << port << " (min key "
        << report.required_key_bits << " bits)" << std::endl;
    if (!a.port_file.empty()) {
      std::ofstream(a.port_file) << port << '\n';
    }
  };
  options.on_session_end = [&](const SessionLog& log) {
    std::lock_guard lock(log_mutex);
    err << format_session_log(log) << std::endl;
  };
  const RandomSource rng = a.seed ? RandomSource(*a.seed) : RandomSource::from_entropy();
  run_server(server, listener, options, rng);
  return kExitOk;
}

// denoise ---------------------------------------------------------------------

struct DenoiseArgs {
  std::string server;
  std::string privkey;
  std::string pubkey;
  ImageOptions image;
  std::string out;
  std::string framework = "nonlinear";
  std::string model_name;
  int frac_bits = kDefaultFracBits;
  std::optional<std::uint64_t> seed;
};

int cmd_denoise(const DenoiseArgs& a, std::ostream& out, std::ostream& err) {
  const PaillierKeypair keys = load_private_key(a.privkey);
  if (!a.pubkey.empty() && !(load_public_key(a.pubkey) == keys.public_key)) {
    throw Error(ErrorCode::kKeyMismatch, "public key does not match the private key");
  }
  const RealTensor image = load_image(a.image);
  ClientOptions options;
  options.framework = a.framework == "linear" ? Framework::kLinear : Framework::kNonlinear;
  options.model_name = a.model_name;
  RandomSource rng = a.seed ? RandomSource(*a.seed) : RandomSource::from_entropy();
  ClientSession client(keys, quantize_tensor(image, a.frac_bits), options, std::move(rng));
  Connection connection = connect_tcp(parse_endpoint(a.server));
  SessionResult result;
  try {
    result = run_remote(client, connection);
  } catch (const Error& e) {
    err << "session failed in state " << to_string(client.phase()) << ": "
        << e.what() << '\n';
    return kExitProtocol;
  }
  if (!result.ok) {
    err << "session failed: " << (result.error ? result.error->message : "no result")
        << '\n';
    return kExitProtocol;
  }
  write_pgm(a.out, dequantize_tensor(result.output));
  out << "wrote " << a.out << '\n';
  print_counters(out, result.client_stats);
  return kExitOk;
}

// verify ----------------------------------------------------------------------

struct VerifyArgs {
  std::string model;
  bool linear = false;
  std::uint64_t model_seed = 0;
  std::size_t size = 32;
  ImageOptions image;
  std::size_t bits = 512;
  std::uint64_t seed = 0;
  std::size_t seeds = 1;
  std::optional<std::size_t> corrupt_layer;
  std::string out;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  const ModelSpec model = load_or_demo(a.model, a.linear, a.model_seed, a.size);
  VerifyOptions options;
  options.key_bits = a.bits;
  if (a.corrupt_layer) {
    const std::size_t layer = *a.corrupt_layer;
    if (layer >= model.layers.size() || model.layers[layer].weight.empty()) {
      throw Error(ErrorCode::kDomainError,
                  "--corrupt-layer must name a layer with weights");
    }
    options.tamper = [layer](ModelSpec& m) {
      m.layers[layer].weight[0] += static_cast<float>(std::ldexp(1.0, -m.frac_bits_weights));
    };
  }
  bool all_passed = true;
  for (std::size_t i = 0; i < a.seeds; ++i) {
    options.seed = a.seed + i;
    RealTensor image;
    if (!a.image.path.empty()) {
      image = load_image(a.image);
    } else {
      RandomSource rng = RandomSource(options.seed).derive("image");
      image = add_noise(make_phantom(model.input_shape.height, rng), 10.0, rng);
    }
    const auto start = std::chrono::steady_clock::now();
    const VerificationReport report = run_verification(model, image, options);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out << "seed " << options.seed << " (" << std::fixed << std::setprecision(1) << seconds
        << " s) " << format_report(report);
    all_passed = all_passed && report.passed;
    if (i == 0 && !a.out.empty()) {
      const QuantizedModel q = quantize_model(model);
      write_pgm(a.out, dequantize_tensor(
                           infer_plain_fixed(q, quantize_tensor(image, model.frac_bits_input))));
    }
  }
  return all_passed ? kExitOk : kExitVerification;
}

// attack ----------------------------------------------------------------------

struct AttackArgs {
  std::string model;
  std::uint64_t model_seed = 0;
  std::string mode = "random";
  std::size_t probes = 64;
  std::size_t probe_images = 1;
  std::size_t bits = 512;
  std::string out_dir = "attack-out";
  std::uint64_t seed = 0;
};

int cmd_attack(const AttackArgs& a, std::ostream& out) {
  const ModelSpec model = load_or_demo(a.model, false, a.model_seed, 32);
  AttackConfig config;
  config.key_bits = a.bits;
  config.samples = a.probes;
  config.probe_images = a.probe_images;
  config.fixed_m = a.mode == "fixed";
  config.seed = a.seed;
  const AttackExperiment result = run_attack_experiment(model, config);
  fs::create_directories(a.out_dir);
  const fs::path json = fs::path(a.out_dir) / "attack_report.json";
  const fs::path image = fs::path(a.out_dir) / "attack_triptych.pgm";
  std::ofstream(json) << attack_report_json(result);
  write_triptych(image, result);
  for (const AttackReport* r : {&result.clean, &result.perturbed}) {
    out << to_string(r->mode) << ": relative error " << std::scientific
        << std::setprecision(3) << r->weight_relative_error << ", held-out PSNR "
        << std::fixed << std::setprecision(2) << r->output_psnr_db << " dB (random "
        << r->baseline_psnr_db << " dB)\n";
    if (!r->warning.empty()) out << "  warning: " << r->warning << '\n';
  }
  out << "wrote " << json.string() << " and " << image.string() << '\n';
  return kExitOk;
}

// phantom ---------------------------------------------------------------------

struct PhantomArgs {
  std::size_t count = 8;
  std::size_t size = 64;
  double sigma = 10.0;
  std::string out_dir = "phantoms";
  std::uint64_t seed = 0;
};

int cmd_phantom(const PhantomArgs& a, std::ostream& out) {
  fs::create_directories(a.out_dir);
  RandomSource rng(a.seed);
  double total = 0.0;
  std::size_t finite = 0;
  for (std::size_t i = 0; i < a.count; ++i) {
    RandomSource item = rng.derive(i);
    const RealTensor clean = make_phantom(a.size, item);
    const RealTensor noisy = add_noise(clean, a.sigma, item);
    char stem[32];
    std::snprintf(stem, sizeof stem, "phantom_%03zu", i);
    write_pgm(fs::path(a.out_dir) / (std::string(stem) + "_clean.pgm"), clean);
    write_pgm(fs::path(a.out_dir) / (std::string(stem) + "_noisy.pgm"), noisy);
    const double p = psnr(clean, noisy);
    if (std::isfinite(p)) {
      total += p;
      ++finite;
    }
  }
  out << "wrote " << a.count << " pairs to " << a.out_dir << "; mean PSNR ";
  if (finite == 0) {
    out << "inf";
  } else {
    out << std::fixed << std::setprecision(2) << total / static_cast<double>(finite);
  }
  out << " dB\n";
  return kExitOk;
}

// train -----------------------------------------------------------------------

int cmd_train(const TrainOptions& o, const std::string& path, std::ostream& out) {
  const TrainResult result = train_demo(o);
  save_model(path, result.model);
  out << "epochs " << result.epoch_loss.size() << ", final loss " << std::scientific
      << std::setprecision(3) << result.epoch_loss.back() << '\n'
      << "held-out PSNR " << std::fixed << std::setprecision(2) << result.input_psnr_db
      << " dB noisy -> " << result.output_psnr_db << " dB denoised\n"
      << "wrote " << path << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::atomic<bool>* stop) {
  CLI::App app{"Denoising on Paillier-encrypted images"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value defaults file")->envname("CIPHERDENOISE_CONFIG");

  KeygenArgs keygen_args;
  auto* keygen_cmd = app.add_subcommand("keygen", "generate a Paillier key pair");
  keygen_cmd->add_option("--bits", keygen_args.bits, "modulus size")->capture_default_str();
  keygen_cmd->add_option("--out-dir", keygen_args.out_dir)->capture_default_str();
  keygen_cmd->add_option("--name", keygen_args.name, "file stem")->capture_default_str();
  keygen_cmd->add_option("--seed", keygen_args.seed, "deterministic keys (testing only)");

  EncryptArgs encrypt_args;
  auto* encrypt_cmd = app.add_subcommand("encrypt", "encrypt an image to .ctz");
  encrypt_cmd->add_option("--pubkey", encrypt_args.pubkey)->required();
  add_image_options(encrypt_cmd, encrypt_args.image, true);
  encrypt_cmd->add_option("--frac-bits", encrypt_args.frac_bits)
      ->check(CLI::Range(0, 62))
      ->capture_default_str();
  encrypt_cmd->add_option("--out", encrypt_args.out)->required();
  encrypt_cmd->add_option("--seed", encrypt_args.seed);

  DecryptArgs decrypt_args;
  auto* decrypt_cmd = app.add_subcommand("decrypt", "decrypt a .ctz to PGM");
  decrypt_cmd->add_option("--privkey", decrypt_args.privkey)->required();
  decrypt_cmd->add_option("--in", decrypt_args.in)->required();
  decrypt_cmd->add_option("--scale", decrypt_args.scale, "override the header scale");
  decrypt_cmd->add_option("--out", decrypt_args.out)->required();

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "host a model");
  serve_cmd->add_option("--model", serve_args.model)->required();
  serve_cmd->add_option("--listen", serve_args.listen, "host:port")->capture_default_str();
  serve_cmd->add_option("--max-sessions", serve_args.max_sessions, "0 = unlimited")
      ->capture_default_str();
  serve_cmd->add_option("--key-bits", serve_args.key_bits, "largest client key expected")
      ->capture_default_str();
  serve_cmd->add_option("--perturbation-bound", serve_args.perturbation_bound)
      ->check(CLI::Range(std::uint64_t{1}, std::uint64_t{1} << 40))
      ->capture_default_str();
  serve_cmd->add_option("--port-file", serve_args.port_file, "write the bound port here");
  serve_cmd->add_option("--seed", serve_args.seed, "deterministic sessions (testing only)");

  DenoiseArgs denoise_args;
  auto* denoise_cmd = app.add_subcommand("denoise", "run an image through a server");
  denoise_cmd->add_option("--server", denoise_args.server, "host:port")->required();
  denoise_cmd->add_option("--privkey", denoise_args.privkey)->required();
  denoise_cmd->add_option("--pubkey", denoise_args.pubkey);
  add_image_options(denoise_cmd, denoise_args.image, true);
  denoise_cmd->add_option("--out", denoise_args.out)->required();
  denoise_cmd->add_option("--framework", denoise_args.framework)
      ->check(CLI::IsMember({"linear", "nonlinear"}))
      ->capture_default_str();
  denoise_cmd->add_option("--model-name", denoise_args.model_name);
  denoise_cmd->add_option("--frac-bits", denoise_args.frac_bits)->capture_default_str();
  denoise_cmd->add_option("--seed", denoise_args.seed);

  VerifyArgs verify_args;
  auto* verify_cmd = app.add_subcommand("verify", "encrypted vs fixed-point reference");
  auto* verify_model = verify_cmd->add_option("--model", verify_args.model, "default: demo");
  verify_cmd->add_flag("--linear", verify_args.linear, "use the linear demo model")
      ->excludes(verify_model);
  verify_cmd->add_option("--model-seed", verify_args.model_seed)->capture_default_str();
  verify_cmd->add_option("--size", verify_args.size, "demo input size")
      ->check(CLI::Range(4, 512))
      ->capture_default_str();
  add_image_options(verify_cmd, verify_args.image, false);
  verify_cmd->add_option("--bits", verify_args.bits)->capture_default_str();
  verify_cmd->add_option("--seed", verify_args.seed)->capture_default_str();
  verify_cmd->add_option("--seeds", verify_args.seeds, "consecutive seeds to run")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  verify_cmd->add_option("--corrupt-layer", verify_args.corrupt_layer,
                         "negative control: perturb one served weight");
  verify_cmd->add_option("--out", verify_args.out, "write the reference output image");

  AttackArgs attack_args;
  auto* attack_cmd = app.add_subcommand("attack", "model-stealing experiment");
  attack_cmd->add_option("--model", attack_args.model, "default: demo");
  attack_cmd->add_option("--model-seed", attack_args.model_seed)->capture_default_str();
  attack_cmd->add_option("--mode", attack_args.mode, "perturbance matrix per session")
      ->check(CLI::IsMember({"random", "fixed"}))
      ->capture_default_str();
  attack_cmd->add_option("--probes", attack_args.probes, "equations per output channel")
      ->capture_default_str();
  attack_cmd->add_option("--probe-images", attack_args.probe_images)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  attack_cmd->add_option("--bits", attack_args.bits)->capture_default_str();
  attack_cmd->add_option("--out-dir", attack_args.out_dir)->capture_default_str();
  attack_cmd->add_option("--seed", attack_args.seed)->capture_default_str();

  PhantomArgs phantom_args;
  auto* phantom_cmd = app.add_subcommand("phantom", "synthetic clean/noisy image pairs");
  phantom_cmd->add_option("--count", phantom_args.count)->capture_default_str();
  phantom_cmd->add_option("--size", phantom_args.size)
      ->check(CLI::Range(4, 4096))
      ->capture_default_str();
  phantom_cmd->add_option("--noise-sigma", phantom_args.sigma, "8-bit gray levels")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  phantom_cmd->add_option("--out-dir", phantom_args.out_dir)->capture_default_str();
  phantom_cmd->add_option("--seed", phantom_args.seed)->capture_default_str();

  TrainOptions train_args;
  std::string train_out = "demo.cdm";
  auto* train_cmd = app.add_subcommand("train", "train the demo denoiser");
  train_cmd->add_option("--out", train_out)->capture_default_str();
  train_cmd->add_option("--images", train_args.images)->capture_default_str();
  train_cmd->add_option("--size", train_args.size)->capture_default_str();
  train_cmd->add_option("--epochs", train_args.epochs)->capture_default_str();
  train_cmd->add_option("--lr", train_args.learning_rate)->capture_default_str();
  train_cmd->add_option("--noise-sigma", train_args.noise_sigma)->capture_default_str();
  train_cmd->add_option("--frac-bits", train_args.frac_bits)->capture_default_str();
  train_cmd->add_option("--seed", train_args.seed)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*keygen_cmd) return cmd_keygen(keygen_args, out);
    if (*encrypt_cmd) return cmd_encrypt(encrypt_args, out);
    if (*decrypt_cmd) return cmd_decrypt(decrypt_args, out);
    if (*serve_cmd) return cmd_serve(serve_args, out, err, stop);
    if (*denoise_cmd) return cmd_denoise(denoise_args, out, err);
    if (*verify_cmd) return cmd_verify(verify_args, out);
    if (*attack_cmd) return cmd_attack(attack_args, out);
    if (*phantom_cmd) return cmd_phantom(phantom_args, out);
    if (*train_cmd) return cmd_train(train_args, train_out, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace cipherdenoise::cli
