#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "polydbg/value_conv.hpp"

namespace polydbg {

/// (file, line) in a debuggee. Paths are compared after canonicalization.
struct SourceLocation {
  std::string path;
  int line = 0;

  friend bool operator==(const SourceLocation&, const SourceLocation&) = default;
};

/// Lexically normalized absolute path; symlinks are resolved when the file
/// exists.
std::string canonical_path(const std::string& path);

/// Where the runner program parks the adapter and which variables the agent
/// drives. All three breakpoints must be distinct locations.
struct RunnerContract {
  std::string runner_path;
  SourceLocation polyglot_bp;
  SourceLocation outer_standby_bp;
  SourceLocation inner_standby_bp;
  std::string var_input = "inputCode";
  std::string var_ret = "ret";
  std::string var_result = "res";
  std::string param_language = "language";
  std::string param_code = "foreignCode";

  void validate() const;
  /// Files the runner occupies (runner_path plus any breakpoint file).
  std::vector<std::string> files() const;
};

enum class TransportKind { Stdio, Tcp };

struct TransportConfig {
  TransportKind kind = TransportKind::Stdio;
  std::uint16_t port = 0;
};

struct StressTemplates {
  std::string caller;
  std::string callee;
};

struct AgentConfig {
  std::string language_id;
  std::vector<std::string> file_extensions;
  std::vector<std::string> adapter_command;
  TransportConfig transport;
  RunnerContract runner;
  std::optional<std::string> source_preprocessor;
  nlohmann::json launch_arguments = nlohmann::json::object();
  std::string evaluate_context = "repl";
  std::map<std::string, std::string> environment;
  ValueTable values;
  std::optional<StressTemplates> stress_templates;

  void validate() const;
  bool claims_extension(const std::string& extension) const;
};

struct SessionDefaults {
  std::chrono::milliseconds request_timeout{10'000};
  std::chrono::milliseconds startup_timeout{30'000};
  std::chrono::milliseconds shutdown_grace{2'000};
  int max_call_depth = 64;
  bool eager_start = false;
};

struct SessionConfig {
  SessionDefaults defaults;
  std::vector<AgentConfig> languages;
  std::filesystem::path base_dir;
};

/// Parses one language entry of the config document. Relative paths resolve
/// against `base_dir`; `${config_dir}` and `${exe_dir}` expand in the adapter
/// command.
AgentConfig parse_agent_config(const nlohmann::json& entry, const std::filesystem::path& base_dir);

SessionConfig parse_session_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Throws ConfigError for unreadable or invalid documents.
SessionConfig load_session_config(const std::filesystem::path& path);

/// Built-in stress-test templates ("python", "javascript").
std::optional<StressTemplates> builtin_stress_templates(std::string_view language);

/// Directory holding the running executable, or POLYDBG_EXE_DIR when set
/// (embedders whose process is not polydbg).
std::filesystem::path executable_dir();

}  // namespace polydbg
