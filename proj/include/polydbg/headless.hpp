#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "polydbg/config.hpp"
#include "polydbg/connection.hpp"
#include "polydbg/session.hpp"
#include "polydbg/transcript.hpp"
#include "polydbg/value_conv.hpp"

namespace polydbg {

struct HeadlessResult {
  int exit_code = 0;  // 0 ok, 1 final value is an Error, 2 session or launch failure
  std::optional<ValueEnvelope> final_value;
  std::string output;  // program output followed by the final value line
  std::string error;
  double wall_seconds = 0.0;  // initialize response to terminated event
  SessionStats stats;
};

struct HeadlessOptions {
  /// Called for every message the session sends to the in-process client.
  std::function<void(const DapMessage&)> observer;
  std::shared_ptr<Transcript> transcript;
};

/// Runs `entry` to termination with an in-process client that sets no
/// breakpoints and continues through any stop.
HeadlessResult run_headless(const SessionConfig& config, const std::filesystem::path& entry,
                            const HeadlessOptions& options = {});

/// Serves one DAP client on `fds` until it disconnects or closes the stream.
void serve_client(const SessionConfig& config, Connection::Fds fds,
                  std::shared_ptr<Transcript> transcript = nullptr);

}  // namespace polydbg
