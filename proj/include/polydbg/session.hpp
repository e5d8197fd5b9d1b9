#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "polydbg/agent.hpp"
#include "polydbg/config.hpp"
#include "polydbg/mailbox.hpp"
#include "polydbg/transcript.hpp"
#include "polydbg/value_conv.hpp"

namespace polydbg {

enum class SessionPhase { Idle, Running, Stopped, Terminated };

std::string_view to_string(SessionPhase phase);

/// The single thread id the client sees.
inline constexpr std::int64_t kClientThreadId = 1;

/// Mailbox channel used to wake and stop the control loop.
inline constexpr int kControlChannel = -1;

struct PolyglotCallFrame {
  std::string caller_language;
  int caller_agent = 0;  // channel
  std::string callee_language;
  PolyglotCallSite call_site;
  int depth_at_call = 0;
};

/// Counters and traces kept for inspection; read with Session::stats().
struct SessionStats {
  std::size_t max_call_depth = 0;
  std::vector<std::size_t> depth_trace;   // call stack size after every push and pop
  std::vector<std::string> call_log;      // "call a->b" / "return b->a"
  std::map<std::string, int> max_agent_depth;
  std::optional<ValueEnvelope> final_value;
  std::string failure;
};

/// Coordinator for one client. Owns the agents, routes client requests to
/// them, and drives polyglot calls across agents.
///
/// run() is the control loop; every state change happens on the thread that
/// calls it. register_agent() and stop() may be called from other threads.
class Session {
 public:
  using ClientSink = std::function<void(DapMessage)>;

  /// `sink` receives every message for the client, unsequenced; the caller
  /// assigns seqs.
  Session(SessionConfig config, std::shared_ptr<Mailbox> mailbox, ClientSink sink);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  /// Throws RegistrationError when the id or an extension is already taken.
  void register_agent(AgentConfig config);

  /// Agent for a language id or a file path/extension token, started on
  /// first use. Throws UnknownLanguage.
  DebugAgent& resolve_agent(const std::string& path_or_language);

  void run();
  void stop();

  SessionPhase phase() const noexcept { return phase_.load(); }
  SessionStats stats() const;
  std::size_t call_depth() const noexcept { return depth_.load(); }

  /// Registered agent by language id; nullptr when unknown. Control thread
  /// only while run() is active.
  DebugAgent* agent(const std::string& language);
  std::vector<std::string> languages() const;

  void set_transcript(std::shared_ptr<Transcript> transcript) { transcript_ = std::move(transcript); }

 private:
  struct Entry {
    AgentConfig config;
    std::unique_ptr<DebugAgent> agent;
  };
  struct RemoteRef {
    DebugAgent* agent = nullptr;
    std::int64_t id = 0;
  };
  class IdMap {
   public:
    std::int64_t map(DebugAgent* agent, std::int64_t original);
    std::int64_t synthetic();
    const std::optional<RemoteRef>* find(std::int64_t id) const;
    void clear();

   private:
    std::int64_t fresh();
    std::map<std::int64_t, std::optional<RemoteRef>> forward_;
    std::map<std::pair<DebugAgent*, std::int64_t>, std::int64_t> reverse_;
    std::int64_t next_ = 1'000'000'000;
  };

  Entry* find_entry(const std::string& path_or_language, std::string* token = nullptr);
  DebugAgent* agent_by_channel(int channel);
  std::vector<DebugAgent*> all_agents();

  void dispatch(Inbound item);
  void handle_client(const DapMessage& req);
  void handle_agent_message(DebugAgent& agent, const DapMessage& msg);
  void handle_agent_closed(DebugAgent& agent, const std::string& detail);

  void on_launch(const DapMessage& req);
  void on_set_breakpoints(const DapMessage& req);
  void on_resume(const DapMessage& req);
  void on_threads(const DapMessage& req);
  void on_stack_trace(const DapMessage& req);
  void on_frame_request(const DapMessage& req);
  void on_variables_request(const DapMessage& req);
  void on_disconnect(const DapMessage& req);
  void forward_to(DebugAgent& agent, const DapMessage& req, nlohmann::json arguments);

  void begin_session();
  void on_agent_stop(DebugAgent& agent, const StopKind& kind);
  void begin_call(DebugAgent& caller, const StopKind& kind);
  void finish_execute(DebugAgent& agent);
  void finish_session(const ValueEnvelope& value);
  void fail_session(const std::string& message);
  void surface_stop(const StopKind& kind);

  std::vector<nlohmann::json> composed_stacktrace();
  BreakpointTable share_for(const DebugAgent& agent) const;
  void announce_breakpoints(const BreakpointTable& installed);
  std::string resolve_target(const PolyglotCallSite& site, const DebugAgent& callee);
  std::string caller_resume_command() const;
  EntryMode entry_mode() const;
  void remap_variables_reference(DebugAgent& agent, nlohmann::json& object);
  void note_depth();
  void note_agent_depth(const DebugAgent& agent);
  void shutdown_agents();

  void respond(const DapMessage& req, nlohmann::json body = nlohmann::json::object());
  void respond_error(const DapMessage& req, const std::string& message);
  void emit(const std::string& event, nlohmann::json body = nlohmann::json::object());

  SessionConfig config_;
  std::shared_ptr<Mailbox> mailbox_;
  ClientSink sink_;
  std::shared_ptr<Transcript> transcript_;

  mutable std::mutex registry_mutex_;
  std::vector<std::unique_ptr<Entry>> entries_;
  std::map<std::string, std::string> extension_index_;
  int next_channel_ = 1;

  std::atomic<SessionPhase> phase_{SessionPhase::Idle};
  std::atomic<std::size_t> depth_{0};
  DebugAgent* active_ = nullptr;
  std::vector<PolyglotCallFrame> call_stack_;
  BreakpointTable client_breakpoints_;
  std::map<std::string, std::vector<std::int64_t>> pending_breakpoint_ids_;
  std::int64_t next_pending_id_ = 1'000'000;
  std::optional<std::string> entry_;
  bool configuration_done_ = false;
  bool done_ = false;
  bool terminated_sent_ = false;
  std::string last_resume_ = "continue";
  int runner_steps_ = 0;
  IdMap frames_;
  IdMap variables_;
  std::filesystem::path temp_dir_;
  int inline_files_ = 0;

  mutable std::mutex stats_mutex_;
  SessionStats stats_;
};

}  // namespace polydbg
