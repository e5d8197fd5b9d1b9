#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "polydbg/config.hpp"
#include "polydbg/connection.hpp"
#include "polydbg/mailbox.hpp"
#include "polydbg/process.hpp"
#include "polydbg/transcript.hpp"
#include "polydbg/value_conv.hpp"

namespace polydbg {

enum class AgentPhase { Starting, Standby, Running, PausedAtPolyglotCall, PausedAtUser, Terminated };

std::string_view to_string(AgentPhase phase);

struct PolyglotCallSite {
  std::string target_language;
  std::string target_code;
  SourceLocation caller_location;
  std::int64_t thread_id = 0;

  friend bool operator==(const PolyglotCallSite&, const PolyglotCallSite&) = default;
};

struct AgentState {
  AgentPhase phase = AgentPhase::Starting;
  int depth = 0;
  std::optional<PolyglotCallSite> call;  // PausedAtPolyglotCall
  SourceLocation location;               // PausedAtUser
  std::string reason;                    // Terminated
};

enum class StopType { StandbyOuter, StandbyInner, PolyglotCall, UserBreakpoint, Step, Exception, Exited };

std::string_view to_string(StopType type);

struct StopKind {
  StopType type = StopType::UserBreakpoint;
  std::optional<PolyglotCallSite> call;
  std::string call_error;  // set instead of `call` when the arguments are unusable
  SourceLocation location;
  std::string text;  // Exception
  int exit_code = 0;  // Exited
  nlohmann::json event_body = nlohmann::json::object();
};

/// User breakpoints keyed by canonical source path; values are DAP
/// SourceBreakpoint arrays.
using BreakpointTable = std::map<std::string, nlohmann::json>;

BreakpointTable make_breakpoint_table(const std::vector<SourceLocation>& locations);

/// How the runner is resumed into a freshly assigned program.
enum class EntryMode { Continue, StepIn };

/// One child debug adapter running the language's runner program.
///
/// Every method runs on the session's control thread. Replies are taken from
/// the shared mailbox by channel; anything else stays queued for the session.
class DebugAgent {
 public:
  DebugAgent(AgentConfig config, SessionDefaults defaults, std::shared_ptr<Mailbox> mailbox, int channel);
  ~DebugAgent();
  DebugAgent(const DebugAgent&) = delete;
  DebugAgent& operator=(const DebugAgent&) = delete;

  /// Spawns the adapter and drives it to the outer standby breakpoint.
  void start();
  bool started() const noexcept { return connection_ != nullptr; }

  /// Assigns `program` to the runner's input slot and resumes. Accepted in
  /// Standby and PausedAtPolyglotCall (an incoming call-back). Returns the
  /// adapter's answer for every breakpoint file that had to be (re)installed.
  BreakpointTable execute(const std::string& program, const BreakpointTable& breakpoints,
                          EntryMode mode = EntryMode::Continue);

  /// Issues stackTrace and classifies a stopped/exited/terminated event.
  StopKind classify_stop(const DapMessage& event);

  /// Waits for the next stop event on this agent's channel and classifies it.
  StopKind next_stop(Clock::time_point deadline);

  PolyglotCallSite read_polyglot_args();

  /// Writes the return slot and clears the input slot, then resumes with
  /// `resume_command` ("continue" or a step such as "stepOut").
  void set_result(const ValueEnvelope& value, const std::string& resume_command = "continue");

  ValueEnvelope read_result();

  /// The adapter's stack with runner frames dropped.
  std::vector<nlohmann::json> filtered_stacktrace(std::optional<std::int64_t> thread = std::nullopt);

  /// User frames grouped by execute level, innermost first. Runner frames
  /// separate the groups.
  std::vector<std::vector<nlohmann::json>> stack_segments();

  /// Replaces the user breakpoints of one source file.
  nlohmann::json set_breakpoints(const std::string& path, const nlohmann::json& breakpoints);

  /// Relays an ordinary request and returns the adapter's response.
  DapMessage forward(const DapMessage& request);

  void resume(const std::string& command);

  void shutdown();

  /// Record an inbound message taken by the session on this channel.
  void note_inbound(const DapMessage& msg);
  void mark_dead(const std::string& reason);

  bool is_runner_location(const SourceLocation& loc) const;
  bool is_runner_file(const std::string& path) const;
  std::string display_path(const std::string& adapter_path) const;

  const AgentConfig& config() const noexcept { return config_; }
  const std::string& language() const noexcept { return config_.language_id; }
  const AgentState& state() const noexcept { return state_; }
  int channel() const noexcept { return channel_; }
  std::int64_t thread_id() const noexcept { return thread_id_; }
  const nlohmann::json& capabilities() const noexcept { return capabilities_; }
  int spawn_count() const noexcept { return spawn_count_; }
  pid_t pid() const noexcept { return process_.pid(); }
  bool quarantined() const noexcept { return quarantined_; }

  void set_transcript(std::shared_ptr<Transcript> transcript) { transcript_ = std::move(transcript); }
  void set_temp_dir(std::filesystem::path dir) { temp_dir_ = std::move(dir); }

 private:
  DapMessage request(const std::string& command, nlohmann::json arguments, Clock::time_point deadline);
  DapMessage request(const std::string& command, nlohmann::json arguments);
  std::int64_t send_request(const std::string& command, nlohmann::json arguments);
  DapMessage await_response(std::int64_t seq, const std::string& command, Clock::time_point deadline);
  std::optional<DapMessage> await_event(const std::set<std::string>& names, Clock::time_point deadline);

  nlohmann::json stack_trace(std::int64_t thread);
  void refresh_top_frame();
  std::string evaluate(const std::string& expression);
  void write_variable(const std::string& name, const std::string& literal);
  void sync_breakpoints(const BreakpointTable& wanted, BreakpointTable& installed_now);
  void send_resume(const std::string& command);
  std::string prepare_program(const std::string& program);
  void ensure_live() const;
  SourceLocation frame_location(const nlohmann::json& frame) const;

  AgentConfig config_;
  SessionDefaults defaults_;
  std::shared_ptr<Mailbox> mailbox_;
  int channel_;
  ChildProcess process_;
  std::unique_ptr<Connection> connection_;
  std::thread stderr_reader_;
  std::shared_ptr<Transcript> transcript_;
  std::filesystem::path temp_dir_;

  AgentState state_;
  std::vector<PolyglotCallSite> open_calls_;
  nlohmann::json capabilities_ = nlohmann::json::object();
  std::int64_t thread_id_ = 1;
  std::optional<std::int64_t> top_frame_id_;
  std::optional<std::int64_t> scope_reference_;
  BreakpointTable installed_;
  std::set<std::string> runner_files_;
  std::map<std::string, std::string> aliases_;  // preprocessed copy -> original
  int spawn_count_ = 0;
  int prepared_ = 0;
  bool dead_ = false;
  bool quarantined_ = false;
  std::string dead_reason_;
};

}  // namespace polydbg
