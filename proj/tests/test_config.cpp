#include <doctest.h>

#include <fstream>

#include "polydbg/config.hpp"
#include "polydbg/errors.hpp"
#include "support.hpp"

using namespace polydbg;

namespace {

json python_entry() {
  return {{"language_id", "python"},
          {"extensions", {".py"}},
          {"adapter_command", {"${config_dir}/adapter", "--flag"}},
          {"runner", {{"path", "runner.py"}, {"polyglot_bp", 2}, {"inner_standby_bp", 6}, {"outer_standby_bp", 12}}}};
}

}  // namespace

TEST_CASE("language entry defaults") {
  testing::TempDir dir;
  const auto a = parse_agent_config(python_entry(), dir.path());
  CHECK(a.language_id == "python");
  CHECK(a.adapter_command.front() == dir.path().string() + "/adapter");
  CHECK(a.transport.kind == TransportKind::Stdio);
  CHECK(a.runner.runner_path == canonical_path((dir.path() / "runner.py").string()));
  CHECK(a.runner.polyglot_bp.line == 2);
  CHECK(a.runner.polyglot_bp.path == a.runner.runner_path);
  CHECK(a.runner.var_input == "inputCode");
  CHECK(a.runner.var_result == "res");
  CHECK(a.evaluate_context == "repl");
  CHECK(a.values.language == "python");
  REQUIRE(a.stress_templates.has_value());
  CHECK(a.stress_templates->caller.find("{n}") != std::string::npos);
  CHECK(a.claims_extension(".py"));
  CHECK_FALSE(a.claims_extension(".js"));
}

TEST_CASE("tcp transport and explicit variables") {
  auto e = python_entry();
  e["transport"] = {{"kind", "tcp"}, {"port", 5678}};
  e["runner"]["variables"] = {{"input", "code_in"}, {"ret", "r"}, {"result", "out"}};
  e["source_preprocessor"] = "prepend:import x\n";
  const auto a = parse_agent_config(e, "/tmp");
  CHECK(a.transport.kind == TransportKind::Tcp);
  CHECK(a.transport.port == 5678);
  CHECK(a.runner.var_input == "code_in");
  CHECK(a.runner.var_ret == "r");
  CHECK(a.runner.var_result == "out");
}

TEST_CASE("invalid language entries") {
  auto bad = [](auto mutate) {
    auto e = python_entry();
    mutate(e);
    return e;
  };
  CHECK_THROWS_AS(parse_agent_config(bad([](json& e) { e["extensions"] = {"py"}; }), "/tmp"), ConfigError);
  CHECK_THROWS_AS(parse_agent_config(bad([](json& e) { e["adapter_command"] = json::array(); }), "/tmp"), ConfigError);
  CHECK_THROWS_AS(parse_agent_config(bad([](json& e) { e["runner"]["inner_standby_bp"] = 2; }), "/tmp"), ConfigError);
  CHECK_THROWS_AS(parse_agent_config(bad([](json& e) { e["runner"]["polyglot_bp"] = 0; }), "/tmp"), ConfigError);
  CHECK_THROWS_AS(parse_agent_config(bad([](json& e) { e["transport"] = "pigeon"; }), "/tmp"), ConfigError);
  CHECK_THROWS_AS(parse_agent_config(bad([](json& e) { e["transport"] = {{"kind", "tcp"}}; }), "/tmp"), ConfigError);
  CHECK_THROWS_AS(parse_agent_config(bad([](json& e) { e["source_preprocessor"] = "rot13"; }), "/tmp"), ConfigError);
  CHECK_THROWS_AS(parse_agent_config(bad([](json& e) { e["values"] = "cobol"; }), "/tmp"), ConfigError);
  CHECK_THROWS_AS(parse_agent_config(bad([](json& e) { e.erase("runner"); }), "/tmp"), ConfigError);
}

TEST_CASE("session documents") {
  auto js = python_entry();
  js["language_id"] = "javascript";
  js["extensions"] = {".js", ".mjs"};
  const json doc = {{"defaults", {{"timeout_s", 2.5}, {"max_call_depth", 4}, {"eager_start", true}}},
                    {"languages", {python_entry(), js}}};
  const auto s = parse_session_config(doc, "/tmp");
  CHECK(s.defaults.request_timeout == std::chrono::milliseconds(2500));
  CHECK(s.defaults.max_call_depth == 4);
  CHECK(s.defaults.eager_start);
  CHECK(s.languages.size() == 2);

  CHECK_THROWS_AS(parse_session_config({{"languages", {python_entry(), python_entry()}}}, "/tmp"), ConfigError);
  CHECK_THROWS_AS(parse_session_config({{"defaults", {{"max_call_depth", 0}}}}, "/tmp"), ConfigError);
  CHECK_THROWS_AS(parse_session_config({{"defaults", {{"timeout_s", -1}}}}, "/tmp"), ConfigError);
  CHECK_THROWS_AS(parse_session_config(json::array(), "/tmp"), ConfigError);
}

TEST_CASE("load resolves paths against the config file") {
  testing::TempDir dir;
  {
    std::ofstream(dir / "session.json") << json{{"languages", {python_entry()}}}.dump();
    std::ofstream(dir / "broken.json") << "{ not json";
  }
  const auto s = load_session_config(dir / "session.json");
  CHECK(s.languages.at(0).runner.runner_path == canonical_path((dir / "runner.py").string()));
  CHECK_THROWS_AS(load_session_config(dir / "broken.json"), ConfigError);
  CHECK_THROWS_AS(load_session_config(dir / "missing.json"), ConfigError);
}

TEST_CASE("shipped sample config parses") {
  const auto s = load_session_config(std::filesystem::path(POLYDBG_SOURCE_DIR) / "config" / "mock-session.json");
  CHECK(s.languages.size() >= 2);
  for (const auto& lang : s.languages) CHECK_NOTHROW(lang.validate());
}
