#include "polydbg/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include <unistd.h>

#include "polydbg/errors.hpp"

namespace polydbg {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kPythonCaller =
    "total = 0\n"
    "for _ in range({n}):\n"
    "    total += polyglotEval(\"{callee_language}\", \"{callee_file}\")\n"
    "total\n";
constexpr const char* kPythonCallee = "1 + 1\n";
constexpr const char* kJavascriptCaller =
    "let total = 0;\n"
    "for (let i = 0; i < {n}; i++) {\n"
    "  total += polyglotEval(\"{callee_language}\", \"{callee_file}\");\n"
    "}\n"
    "module.exports = total;\n";
constexpr const char* kJavascriptCallee = "module.exports = 1 + 1;\n";

std::string expand(std::string text, const fs::path& base_dir) {
  auto replace_all = [&text](std::string_view key, const std::string& value) {
    for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
      text.replace(pos, key.size(), value);
    }
  };
  replace_all("${config_dir}", base_dir.string());
  replace_all("${exe_dir}", executable_dir().string());
  return text;
}

std::string resolve_path(const std::string& path, const fs::path& base_dir) {
  fs::path p(path);
  if (p.is_relative()) p = base_dir / p;
  return canonical_path(p.string());
}

SourceLocation parse_location(const json& doc, const std::string& default_path, const fs::path& base_dir,
                              const char* what) {
  if (doc.is_number_integer()) return {default_path, doc.get<int>()};
  if (doc.is_object()) {
    SourceLocation loc;
    loc.path = doc.contains("path") ? resolve_path(doc.at("path").get<std::string>(), base_dir) : default_path;
    loc.line = doc.at("line").get<int>();
    return loc;
  }
  throw ConfigError(std::string("runner.") + what + " must be a line number or {path, line}");
}

std::chrono::milliseconds seconds(const json& doc, const char* key, std::chrono::milliseconds fallback) {
  if (!doc.contains(key)) return fallback;
  const double s = doc.at(key).get<double>();
  if (s <= 0) throw ConfigError(std::string("defaults.") + key + " must be positive");
  return std::chrono::milliseconds(static_cast<std::int64_t>(s * 1000.0));
}

}  // namespace

std::string canonical_path(const std::string& path) {
  if (path.empty()) return path;
  std::error_code ec;
  fs::path absolute = fs::absolute(fs::path(path), ec);
  if (ec) return path;
  fs::path resolved = fs::weakly_canonical(absolute, ec);
  return (ec ? absolute.lexically_normal() : resolved).string();
}

fs::path executable_dir() {
  if (const char* dir = std::getenv("POLYDBG_EXE_DIR"); dir != nullptr && *dir != '\0') return dir;
  std::error_code ec;
  auto exe = fs::read_symlink("/proc/self/exe", ec);
  return ec ? fs::current_path() : exe.parent_path();
}

void RunnerContract::validate() const {
  if (runner_path.empty()) throw ConfigError("runner path is empty");
  if (polyglot_bp == outer_standby_bp || polyglot_bp == inner_standby_bp || outer_standby_bp == inner_standby_bp) {
    throw ConfigError("runner breakpoints must be pairwise distinct");
  }
  for (const auto* loc : {&polyglot_bp, &outer_standby_bp, &inner_standby_bp}) {
    if (loc->line <= 0) throw ConfigError("runner breakpoint lines must be positive");
  }
  for (const auto* name : {&var_input, &var_ret, &var_result, &param_language, &param_code}) {
    if (name->empty()) throw ConfigError("runner variable names must be non-empty");
  }
}

std::vector<std::string> RunnerContract::files() const {
  std::vector<std::string> out{runner_path};
  for (const auto* loc : {&polyglot_bp, &outer_standby_bp, &inner_standby_bp}) {
    if (std::find(out.begin(), out.end(), loc->path) == out.end()) out.push_back(loc->path);
  }
  return out;
}

void AgentConfig::validate() const {
  if (language_id.empty()) throw ConfigError("language_id is empty");
  if (file_extensions.empty()) throw ConfigError(language_id + ": file_extensions is empty");
  for (const auto& ext : file_extensions) {
    if (ext.size() < 2 || ext.front() != '.') throw ConfigError(language_id + ": extension '" + ext + "' must start with '.'");
  }
  if (adapter_command.empty()) throw ConfigError(language_id + ": adapter_command is empty");
  if (transport.kind == TransportKind::Tcp && transport.port == 0) throw ConfigError(language_id + ": tcp transport needs a port");
  if (source_preprocessor && *source_preprocessor != "identity" && source_preprocessor->rfind("prepend:", 0) != 0) {
    throw ConfigError(language_id + ": unknown source_preprocessor '" + *source_preprocessor + "'");
  }
  runner.validate();
}

bool AgentConfig::claims_extension(const std::string& extension) const {
  return std::find(file_extensions.begin(), file_extensions.end(), extension) != file_extensions.end();
}

std::optional<StressTemplates> builtin_stress_templates(std::string_view language) {
  if (language == "python") return StressTemplates{kPythonCaller, kPythonCallee};
  if (language == "javascript") return StressTemplates{kJavascriptCaller, kJavascriptCallee};
  return std::nullopt;
}

AgentConfig parse_agent_config(const json& entry, const fs::path& base_dir) {
  try {
    AgentConfig config;
    config.language_id = entry.at("language_id").get<std::string>();
    config.file_extensions = entry.at("extensions").get<std::vector<std::string>>();
    for (const auto& arg : entry.at("adapter_command")) config.adapter_command.push_back(expand(arg.get<std::string>(), base_dir));

    const json transport = entry.value("transport", json("stdio"));
    if (transport.is_string() && transport.get<std::string>() == "stdio") {
      config.transport.kind = TransportKind::Stdio;
    } else if (transport.is_object() && transport.value("kind", std::string()) == "tcp") {
      config.transport.kind = TransportKind::Tcp;
      config.transport.port = transport.at("port").get<std::uint16_t>();
    } else if (transport.is_object() && transport.value("kind", std::string()) == "stdio") {
      config.transport.kind = TransportKind::Stdio;
    } else {
      throw ConfigError(config.language_id + ": transport must be \"stdio\" or {\"kind\":\"tcp\",\"port\":N}");
    }

    const json& runner = entry.at("runner");
    auto& contract = config.runner;
    contract.runner_path = resolve_path(expand(runner.at("path").get<std::string>(), base_dir), base_dir);
    contract.polyglot_bp = parse_location(runner.at("polyglot_bp"), contract.runner_path, base_dir, "polyglot_bp");
    contract.outer_standby_bp = parse_location(runner.at("outer_standby_bp"), contract.runner_path, base_dir, "outer_standby_bp");
    contract.inner_standby_bp = parse_location(runner.at("inner_standby_bp"), contract.runner_path, base_dir, "inner_standby_bp");
    const json vars = runner.value("variables", json::object());
    contract.var_input = vars.value("input", contract.var_input);
    contract.var_ret = vars.value("ret", contract.var_ret);
    contract.var_result = vars.value("result", contract.var_result);
    contract.param_language = vars.value("language", contract.param_language);
    contract.param_code = vars.value("code", contract.param_code);

    if (entry.contains("source_preprocessor")) config.source_preprocessor = entry.at("source_preprocessor").get<std::string>();
    config.launch_arguments = entry.value("launch_arguments", json::object());
    config.evaluate_context = entry.value("evaluate_context", config.evaluate_context);
    config.environment = entry.value("environment", std::map<std::string, std::string>{});

    config.values = ValueTable::from_json(config.language_id, entry.value("values", json(config.language_id)));

    if (entry.contains("stress_templates")) {
      const json& t = entry.at("stress_templates");
      config.stress_templates = StressTemplates{t.at("caller").get<std::string>(), t.at("callee").get<std::string>()};
    } else {
      config.stress_templates = builtin_stress_templates(config.language_id);
    }
    config.validate();
    return config;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid language entry: ") + e.what());
  }
}

SessionConfig parse_session_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("session config must be an object");
  SessionConfig config;
  config.base_dir = base_dir;
  try {
    const json defaults = doc.value("defaults", json::object());
    config.defaults.request_timeout = seconds(defaults, "timeout_s", config.defaults.request_timeout);
    config.defaults.startup_timeout = seconds(defaults, "startup_timeout_s", config.defaults.startup_timeout);
    config.defaults.shutdown_grace = seconds(defaults, "shutdown_grace_s", config.defaults.shutdown_grace);
    config.defaults.max_call_depth = defaults.value("max_call_depth", config.defaults.max_call_depth);
    config.defaults.eager_start = defaults.value("eager_start", config.defaults.eager_start);
    if (config.defaults.max_call_depth < 1) throw ConfigError("defaults.max_call_depth must be >= 1");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid defaults: ") + e.what());
  }
  std::set<std::string> ids;
  for (const auto& entry : doc.value("languages", json::array())) {
    auto agent = parse_agent_config(entry, base_dir);
    if (!ids.insert(agent.language_id).second) throw ConfigError("duplicate language_id '" + agent.language_id + "'");
    config.languages.push_back(std::move(agent));
  }
  return config;
}

SessionConfig load_session_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config " + path.string() + " is not valid JSON");
  auto base = fs::absolute(path).parent_path();
  return parse_session_config(doc, base);
}

}  // namespace polydbg
