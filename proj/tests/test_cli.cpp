#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "polydbg/connection.hpp"
#include "polydbg/process.hpp"
#include "support.hpp"

using namespace polydbg;

namespace {

struct CliResult {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliResult run_cli(const std::string& args) {
  testing::TempDir tmp;
  const auto err_path = tmp / "stderr";
  const std::string command = testing::polydbg_path().string() + " " + args + " 2>" + err_path.string();
  CliResult r;
  FILE* pipe = ::popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[512];
  while (std::fgets(buf, sizeof(buf), pipe) != nullptr) r.out += buf;
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.err = slurp(err_path);
  return r;
}

std::string shipped_config() { return (std::filesystem::path(POLYDBG_SOURCE_DIR) / "config" / "mock-session.json").string(); }

}  // namespace

TEST_CASE("run prints the program's final value") {
  const auto r = run_cli("run --config " + shipped_config() + " " + testing::poly_file("main4.py"));
  INFO(r.err);
  CHECK(r.status == 0);
  CHECK(r.out == "7\n");
  const auto again = run_cli("run --config " + shipped_config() + " " + testing::poly_file("main4.py"));
  CHECK(again.out == r.out);
  CHECK(again.status == r.status);
}

TEST_CASE("run rejects an unclaimed extension") {
  testing::TempDir dir;
  std::ofstream(dir / "prog.rb") << "puts 1\n";
  const auto r = run_cli("run --config " + shipped_config() + " " + (dir / "prog.rb").string());
  CHECK(r.status == 2);
  CHECK(r.err.find("no debug agent registered for 'rb'") != std::string::npos);
}

TEST_CASE("argument errors") {
  CHECK(run_cli("run " + testing::poly_file("main4.py")).status != 0);
  CHECK(run_cli("run --config /nonexistent.json " + testing::poly_file("main4.py")).status == 2);
  CHECK(run_cli("serve --config " + shipped_config() + " --stdio --port 1").status != 0);
  const auto help = run_cli("--help");
  CHECK(help.status == 0);
  for (const char* sub : {"serve", "run", "bench"}) CHECK(help.out.find(sub) != std::string::npos);
}

TEST_CASE("serve over stdio") {
  ChildProcess::Options opts;
  opts.argv = {testing::polydbg_path().string(), "serve", "--config", shipped_config(), "--stdio"};
  auto child = ChildProcess::spawn(opts);
  {
    testing::ScriptedClient c({child.release_stdout(), child.release_stdin(), true});
    const auto init = c.request("initialize", {{"clientID", "cli-test"}, {"adapterID", "polydbg"}});
    CHECK(init.success);
    CHECK(init.payload.value("supportsConfigurationDoneRequest", false));
    REQUIRE(c.wait_event("initialized"));
    CHECK(c.request("launch", {{"program", testing::poly_file("main4.py")}}).success);
    CHECK(c.request("configurationDone").success);
    REQUIRE(c.wait_event("terminated"));
    c.request("disconnect");
    const auto all = c.received();
    const bool printed = std::any_of(all.begin(), all.end(), [](const DapMessage& m) {
      return m.is_event() && m.command == "output" && m.payload.value("output", std::string()) == "7\n";
    });
    CHECK(printed);
  }
  CHECK(testing::exit_code(child, std::chrono::seconds(10)) == 0);
}

TEST_CASE("serve over tcp") {
  ChildProcess::Options opts;
  opts.argv = {testing::polydbg_path().string(), "serve", "--config", shipped_config(), "--port", "0"};
  auto child = ChildProcess::spawn(opts);
  const int err_fd = child.release_stderr();
  std::string banner;
  char ch = 0;
  while (::read(err_fd, &ch, 1) == 1 && ch != '\n') banner += ch;
  ::close(err_fd);
  const std::string prefix = "polydbg: listening on 127.0.0.1:";
  REQUIRE(banner.rfind(prefix, 0) == 0);
  const int port = std::stoi(banner.substr(prefix.size()));
  CHECK(port > 0);
  const int fd = connect_tcp(static_cast<std::uint16_t>(port), Clock::now() + std::chrono::seconds(5));
  REQUIRE(fd >= 0);
  {
    testing::ScriptedClient c({fd, ::dup(fd), true});
    CHECK(c.request("initialize").success);
    CHECK(c.request("disconnect").success);
  }
  CHECK(testing::exit_code(child, std::chrono::seconds(10)) == 0);
}

TEST_CASE("bench writes samples and a fit") {
  testing::TempDir dir;
  const auto doc = testing::session_document({testing::mock_language("python", "bench_python.json", dir / "py.jsonl"),
                                              testing::mock_language("javascript", "bench_javascript.json", dir / "js.jsonl")});
  std::ofstream(dir / "bench.json") << doc.dump(2);
  const auto csv = dir / "out.csv";
  const auto r = run_cli("bench --config " + (dir / "bench.json").string() +
                         " --caller python --callee javascript --ladder 1,3 --reps 1 --out " + csv.string() +
                         " --work-dir " + (dir / "work").string());
  INFO(r.err);
  CHECK(r.status == 0);
  CHECK(r.out.find("n=1 mean_wall_seconds=") != std::string::npos);
  CHECK(r.out.find("n=3 mean_wall_seconds=") != std::string::npos);
  CHECK(r.out.find("per_call_overhead_seconds=") != std::string::npos);
  const auto text = slurp(csv);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  CHECK(std::filesystem::exists(dir / "work"));

  CHECK(run_cli("bench --config " + (dir / "bench.json").string() + " --caller python --callee javascript --ladder 0").status == 2);
}
