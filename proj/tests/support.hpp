#pragma once

#include <atomic>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "polydbg/config.hpp"
#include "polydbg/connection.hpp"
#include "polydbg/mailbox.hpp"
#include "polydbg/mock_dap.hpp"
#include "polydbg/process.hpp"
#include "polydbg/session.hpp"
#include "polydbg/transcript.hpp"
#include "polydbg/wire.hpp"

namespace testing {

using polydbg::DapMessage;
using polydbg::json;

std::filesystem::path mock_path();
std::filesystem::path polydbg_path();
std::filesystem::path scenario_dir();
std::filesystem::path scenario(const std::string& name);
std::string poly_file(const std::string& name);  // canonical path under scenarios/poly

class TempDir {
 public:
  TempDir();
  ~TempDir();
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Value table for the synthetic "langX": yes/no booleans, nil, single
/// quoted strings with doubled quotes.
json langx_values();

/// Language entry backed by the mock adapter replaying `scenario_file`.
/// Extensions: python .py, javascript .js, langX .lx.
json mock_language(const std::string& language, const std::string& scenario_file,
                   const std::filesystem::path& transcript);

json session_document(const std::vector<json>& languages, json defaults = json::object());
polydbg::SessionConfig session_config(const std::vector<json>& languages, json defaults = json::object());

/// DAP client for tests: requests block until their response arrives; every
/// received message is kept in order.
class ScriptedClient {
 public:
  ScriptedClient(polydbg::Connection::Fds fds, std::string name = "client");
  ~ScriptedClient();

  DapMessage request(const std::string& command, json arguments = json::object(),
                     std::chrono::milliseconds timeout = std::chrono::seconds(10));
  /// Next event named `name`, skipping (but keeping) others.
  std::optional<DapMessage> wait_event(const std::string& name,
                                       std::chrono::milliseconds timeout = std::chrono::seconds(10));
  /// Next event with one of `names`.
  std::optional<DapMessage> take_event(const std::set<std::string>& names,
                                       std::chrono::milliseconds timeout = std::chrono::seconds(10));
  /// Waits until the peer closes the stream.
  bool wait_closed(std::chrono::milliseconds timeout = std::chrono::seconds(10));

  /// Everything received so far, in arrival order.
  std::vector<DapMessage> received() const { return received_; }
  std::vector<DapMessage> sent() const { return sent_; }
  void close();

 private:
  std::optional<DapMessage> take(const std::function<bool(const DapMessage&)>& pred, std::chrono::milliseconds timeout);

  std::shared_ptr<polydbg::Mailbox> mailbox_;
  std::unique_ptr<polydbg::Connection> connection_;
  std::vector<DapMessage> received_;
  std::vector<DapMessage> sent_;
  std::deque<DapMessage> pending_;
  bool closed_ = false;
};

/// A coordinator served on one end of a socketpair, running on its own thread.
class CoordinatorHarness {
 public:
  explicit CoordinatorHarness(polydbg::SessionConfig config);
  ~CoordinatorHarness();

  ScriptedClient& client() { return *client_; }
  std::shared_ptr<polydbg::Transcript> transcript() const { return transcript_; }
  /// Joins the server thread; true when it finished within `timeout`.
  bool join(std::chrono::milliseconds timeout = std::chrono::seconds(10));
  /// Session counters; valid after join().
  const polydbg::SessionStats& stats() const { return *stats_; }

 private:
  std::shared_ptr<polydbg::SessionConfig> config_;
  std::shared_ptr<polydbg::Transcript> transcript_ = std::make_shared<polydbg::Transcript>();
  std::unique_ptr<ScriptedClient> client_;
  std::thread server_;
  std::shared_ptr<std::atomic<bool>> finished_ = std::make_shared<std::atomic<bool>>(false);
  std::shared_ptr<polydbg::SessionStats> stats_ = std::make_shared<polydbg::SessionStats>();
};

/// Exit code of a child that exits within `timeout`; -signal when killed.
std::optional<int> exit_code(polydbg::ChildProcess& child, std::chrono::milliseconds timeout = std::chrono::seconds(5));

/// Requests one agent sent to its adapter, from the coordinator-side transcript.
std::vector<std::string> agent_requests(const std::vector<polydbg::TranscriptEntry>& entries, const std::string& agent);

/// Messages from the shared transcript as "agent:summary" strings.
std::vector<std::string> flatten(const std::vector<polydbg::TranscriptEntry>& entries);

}  // namespace testing
