#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "polydbg/bench.hpp"
#include "polydbg/errors.hpp"
#include "support.hpp"

using namespace polydbg;

namespace {

SessionConfig bench_config(const testing::TempDir& dir) {
  return testing::session_config({testing::mock_language("python", "bench_python.json", dir / "py.jsonl"),
                                  testing::mock_language("javascript", "bench_javascript.json", dir / "js.jsonl")});
}

std::string run_capture(const std::string& command) {
  std::string out;
  FILE* pipe = ::popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[256];
  while (std::fgets(buf, sizeof(buf), pipe) != nullptr) out += buf;
  CHECK(::pclose(pipe) == 0);
  return out;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("generated python caller makes n calls") {
  testing::TempDir dir;
  const auto config = bench_config(dir);
  const auto program = generate_stress_program(config, "python", "python", 5, dir / "gen");
  CHECK(program.caller_file.extension() == ".py");
  CHECK(program.callee_file.extension() == ".py");
  // Run it under a real interpreter with a counting stand-in for the call.
  const auto harness = dir / "harness.py";
  std::ofstream(harness) << "calls = []\n"
                            "def polyglotEval(lang, path):\n"
                            "    calls.append(lang)\n"
                            "    return eval(open(path).read())\n"
                            "src = open(" << json(program.caller_file.string()).dump() << ").read()\n"
                            "lines = src.rstrip().split('\\n')\n"
                            "exec('\\n'.join(lines[:-1]))\n"
                            "print(eval(lines[-1]), len(calls), calls[0])\n";
  CHECK(run_capture("python3 " + harness.string()) == "10 5 python\n");
}

TEST_CASE("generated javascript caller makes n calls") {
  testing::TempDir dir;
  const auto config = bench_config(dir);
  const auto program = generate_stress_program(config, "javascript", "python", 3, dir / "gen");
  CHECK(program.caller_file.extension() == ".js");
  CHECK(program.callee_file.extension() == ".py");
  CHECK(slurp(program.caller_file).find("\"python\"") != std::string::npos);
  const auto harness = dir / "harness.js";
  std::ofstream(harness) << "let calls = 0;\n"
                            "globalThis.polyglotEval = (lang, path) => { calls++; return 2; };\n"
                            "const total = require(" << json(program.caller_file.string()).dump() << ");\n"
                            "console.log(total, calls);\n";
  CHECK(run_capture("node " + harness.string()) == "6 3\n");
}

TEST_CASE("stress generation rejects bad input") {
  testing::TempDir dir;
  auto config = bench_config(dir);
  CHECK_THROWS_AS(generate_stress_program(config, "python", "javascript", 0, dir / "gen"), PreconditionError);
  CHECK_THROWS_AS(generate_stress_program(config, "python", "ruby", 1, dir / "gen"), UnknownLanguage);
  config.languages[1].stress_templates.reset();
  CHECK_THROWS_AS(generate_stress_program(config, "python", "javascript", 1, dir / "gen"), ConfigError);
}

TEST_CASE("least squares oracle") {
  // y = 0.3 + 0.25 x exactly.
  auto fit = fit_linear({{1, 0.55}, {2, 0.8}, {5, 1.55}, {10, 2.8}});
  CHECK(fit.slope == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  // Hand-computed: x=(1,2,3), y=(1,3,2): b=0.5, a=1, R^2=0.25.
  fit = fit_linear({{1, 1}, {2, 3}, {3, 2}});
  CHECK(fit.slope == doctest::Approx(0.5));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.r_squared == doctest::Approx(0.25));
  CHECK_THROWS_AS(fit_linear({{1, 1}}), PreconditionError);
  CHECK_THROWS_AS(fit_linear({{2, 1}, {2, 3}}), PreconditionError);
}

TEST_CASE("mock overhead grows linearly with the call count") {
  testing::TempDir dir;
  const auto config = bench_config(dir);
  BenchSpec spec;
  spec.caller_language = "python";
  spec.callee_language = "javascript";
  spec.ladder = {1, 3, 6};
  spec.repetitions = 2;
  spec.output = dir / "bench.csv";
  spec.work_dir = dir / "work";
  const auto report = measure_overhead(config, spec);
  REQUIRE(report.samples.size() == 6);
  REQUIRE(report.means.size() == 3);
  CHECK(report.fit.r_squared >= 0.9);
  // Every call waits at least the callee's scripted 20 ms.
  CHECK(report.fit.slope >= 0.02);
  CHECK(report.fit.slope < 1.0);

  std::ifstream csv(spec.output);
  std::string line;
  std::getline(csv, line);
  CHECK(line == "caller,callee,n,repetition,wall_seconds");
  int rows = 0;
  while (std::getline(csv, line)) {
    CHECK(line.rfind("python,javascript,", 0) == 0);
    ++rows;
  }
  CHECK(rows == 6);
}

TEST_CASE("bench failure names n") {
  testing::TempDir dir;
  const auto runner = (testing::scenario_dir() / "runner.py").string();
  const json crash = {
      {"steps",
       {{{"on", {{"command", "configurationDone"}}},
         {"then_emit", {{{"event", "stopped"}, {"body", {{"reason", "breakpoint"}, {"threadId", 1}}}, {"stack", {{{"path", runner}, {"line", 12}}}}}}}},
        {{"on", {{"command", "continue"}}}, {"exit_after", true}}}}};
  std::ofstream(dir / "crash.json") << crash.dump();
  auto config = testing::session_config({testing::mock_language("python", (dir / "crash.json").string(), dir / "py.jsonl"),
                                         testing::mock_language("javascript", "idle_javascript.json", dir / "js.jsonl")});
  BenchSpec spec;
  spec.caller_language = "python";
  spec.callee_language = "javascript";
  spec.ladder = {2, 4};
  spec.repetitions = 1;
  spec.work_dir = dir / "work";
  try {
    measure_overhead(config, spec);
    FAIL("expected a failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("n=2") != std::string::npos);
  }
}
