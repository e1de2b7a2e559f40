// Copyright 2026 The CipherDenoise Authors
// SPDX-License-Identifier: Apache-2.0

#include "cipherdenoise/serve.hpp"

#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include "cipherdenoise/bigint.hpp"
#include "cipherdenoise/error.hpp"

namespace cipherdenoise {

std::string format_session_log(const SessionLog& log) {
  std::ostringstream out;
  out << "session=" << log.index << " id=" << log.session_id
      << " phase=" << to_string(log.phase) << " upload=" << log.stats.upload_bytes
      << " download=" << log.stats.download_bytes
      << " wire_up=" << log.stats.upload_wire_bytes
      << " wire_down=" << log.stats.download_wire_bytes
      << " act_round_trips=" << log.stats.act_round_trips;
  if (!log.error.empty()) out << " error=\"" << log.error << '"';
  return out.str();
}

SessionLog serve_connection(const Server& server, Connection& connection,
                            RandomSource rng) {
  ServerSession session = server.open_session(std::move(rng));
  SessionLog log;
  try {
    while (!session.finished()) {
      auto frame = connection.receive();
      if (!frame) {
        log.error = "peer closed the connection";
        break;
      }
      for (const Frame& reply : session.handle(*frame)) connection.send(reply);
    }
  } catch (const Error& e) {
    log.error = e.what();
    if (e.code() == ErrorCode::kProtocolError || e.code() == ErrorCode::kParseError) {
      // Undecodable stream: report and tear down.
      try {
        connection.send(Frame{MessageTag::kError, session.id(),
                              encode_error({static_cast<std::uint16_t>(WireError::kMalformed),
                                            e.what()})});
      } catch (const Error&) {
      }
    }
  }
  connection.close();
  log.session_id = bytes_to_hex(session.id());
  log.phase = session.phase();
  log.stats = session.stats();
  if (log.error.empty() && session.error()) log.error = session.error()->message;
  return log;
}

void run_server(const Server& server, Listener& listener, const ServeOptions& options,
                const RandomSource& rng) {
  if (options.on_listening) options.on_listening(listener.port());
  std::vector<std::thread> workers;
  std::mutex log_mutex;
  std::size_t accepted = 0;
  while (options.max_sessions == 0 || accepted < options.max_sessions) {
    if (options.stop != nullptr && options.stop->load()) break;
    auto connection = listener.accept(200);
    if (!connection) continue;
    const std::size_t index = accepted++;
    workers.emplace_back([&, index, conn = std::move(*connection)]() mutable {
      SessionLog log = serve_connection(server, conn, rng.derive(index));
      log.index = index;
      if (options.on_session_end) {
        std::lock_guard lock(log_mutex);
        options.on_session_end(log);
      }
    });
  }
  for (auto& worker : workers) worker.join();
}

}  // namespace cipherdenoise
