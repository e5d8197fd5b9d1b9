#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polydbg/wire.hpp"

namespace polydbg {

/// One scripted exchange: when the next request matches `on`, answer it and
/// emit `then_emit`.
struct MockStep {
  enum class Reply { Auto, Silent, Template };

  nlohmann::json on;  // {"command": ..., "arguments": <subset>}
  Reply reply = Reply::Auto;
  nlohmann::json reply_template;  // {"success", "body", "message"}
  std::vector<nlohmann::json> then_emit;
  std::map<std::string, std::string> set_variables;
  int repeat = 1;  // -1: forever
  bool exit_after = false;
  int delay_ms = 0;
};

/// Replay script for the mock adapter.
///
/// Document shape:
///   {"capabilities": {...}, "strict": false, "stacks": {"<name or stop index>": [frame...]},
///    "variables": {"<frame id>:<name>" or "*:<name>": "<rendered value>"},
///    "steps": [{"on": {"command": "continue"}, "respond": "auto" | "silent" | {...},
///               "then_emit": [{"event": "stopped", "body": {...}, "stack": "<name>" | [...]}],
///               "set_variables": {...}, "repeat": 1, "exit_after": false, "delay_ms": 0}]}
/// Frames may use {"id", "name", "path", "line"} shorthand instead of a DAP source object.
/// When no step emits "initialized", an unscripted launch or attach is
/// followed by one.
struct Scenario {
  nlohmann::json capabilities;
  std::vector<MockStep> steps;
  std::map<std::string, std::string> variables;
  std::map<std::string, nlohmann::json> stacks;
  nlohmann::json threads;
  bool strict = false;
  bool ignore_sigterm = false;
  bool hang_on_disconnect = false;

  /// Throws ScenarioError for malformed documents.
  static Scenario parse(const nlohmann::json& doc);
  /// Reads a scenario file, expanding `${NAME}` from `lookup` first.
  static Scenario load(const std::filesystem::path& path,
                       const std::function<std::optional<std::string>(const std::string&)>& lookup);
};

/// Expands `${NAME}`; throws ScenarioError for names `lookup` cannot resolve.
std::string substitute_variables(std::string_view text,
                                 const std::function<std::optional<std::string>(const std::string&)>& lookup);

/// True when every field of `pattern` appears in `actual` with a matching
/// value. The string "*" matches anything; arrays match element-wise.
bool json_subset_match(const nlohmann::json& pattern, const nlohmann::json& actual);

struct MockRecord {
  std::string dir;  // "spawn", "recv", "send", "fail"
  nlohmann::json doc;
};

/// Single-threaded scripted adapter.
class MockServer {
 public:
  explicit MockServer(Scenario scenario);

  /// Appends JSON lines to `path`, starting with a spawn record.
  void record_to(const std::filesystem::path& path);

  /// Serves one peer until EOF, disconnect, or the end of a strict script.
  /// Returns the process exit status: 0 normally, 3 on a strict mismatch.
  int serve(int in_fd, int out_fd);

  /// Handles one inbound request; returns the messages to send in order.
  std::vector<DapMessage> handle(const DapMessage& request);

  bool finished() const noexcept { return finished_; }
  bool failed() const noexcept { return failed_; }
  std::size_t cursor() const noexcept { return cursor_; }
  const std::vector<MockRecord>& records() const noexcept { return records_; }
  const std::map<std::string, std::string>& variables() const noexcept { return scenario_.variables; }

 private:
  DapMessage auto_reply(const DapMessage& request);
  DapMessage make_event(const nlohmann::json& spec);
  bool scripts_initialized() const;
  std::optional<std::string> lookup_variable(std::int64_t frame, const std::string& name) const;
  void store_variable(std::int64_t frame, const std::string& name, const std::string& value);
  void record(const std::string& dir, nlohmann::json doc);

  Scenario scenario_;
  std::size_t cursor_ = 0;
  int step_hits_ = 0;
  int stop_index_ = 0;
  nlohmann::json current_stack_ = nlohmann::json::array();
  bool finished_ = false;
  bool failed_ = false;
  std::vector<MockRecord> records_;
  std::ofstream sink_;
};

std::vector<MockRecord> load_mock_transcript(const std::filesystem::path& path);
int count_spawns(const std::vector<MockRecord>& records);
/// Messages in the given direction ("recv" or "send"), in order.
std::vector<DapMessage> transcript_messages(const std::vector<MockRecord>& records, const std::string& dir);

/// Breakpoint id the mock reports for a source line.
std::int64_t breakpoint_id(const std::string& path, int line);

/// Stack shorthand to DAP StackFrame objects.
nlohmann::json normalize_frames(const nlohmann::json& frames);

}  // namespace polydbg
