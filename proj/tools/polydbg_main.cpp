// polydbg: polyglot debug coordinator. Serves DAP to one client, runs
// headless sessions, and measures polyglot call overhead.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include <CLI11.hpp>

#include "polydbg/bench.hpp"
#include "polydbg/config.hpp"
#include "polydbg/errors.hpp"
#include "polydbg/headless.hpp"

namespace {

std::vector<int> parse_ladder(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    int n = 0;
    try {
      n = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty()) throw polydbg::ConfigError("bad ladder entry '" + item + "'");
    out.push_back(n);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGPIPE, SIG_IGN);
  CLI::App app{"polydbg: polyglot debug adapter coordinator"};
  app.require_subcommand(1);

  std::string config_path;
  auto* serve = app.add_subcommand("serve", "expose the DAP endpoint to one client");
  serve->add_option("--config", config_path, "session config document")->required();
  bool use_stdio = false;
  int port = -1;
  auto* stdio_flag = serve->add_flag("--stdio", use_stdio, "speak DAP on stdin/stdout (default)");
  serve->add_option("--port", port, "listen on 127.0.0.1:<port>; 0 picks a free port")->excludes(stdio_flag);

  auto* run = app.add_subcommand("run", "run an entry file headless to termination");
  run->add_option("--config", config_path, "session config document")->required();
  std::string entry;
  run->add_option("entry", entry, "entry source file")->required();

  auto* bench = app.add_subcommand("bench", "polyglot call overhead stress test");
  bench->add_option("--config", config_path, "session config document")->required();
  polydbg::BenchSpec spec;
  std::string ladder = "1,2,5,10";
  std::string out_path;
  bench->add_option("--caller", spec.caller_language, "caller language id")->required();
  bench->add_option("--callee", spec.callee_language, "callee language id")->required();
  bench->add_option("--ladder", ladder, "comma separated iteration counts")->capture_default_str();
  bench->add_option("--reps", spec.repetitions, "sessions per ladder rung")->capture_default_str();
  bench->add_option("--out", out_path, "CSV output path");
  std::string work_dir;
  bench->add_option("--work-dir", work_dir, "where generated programs are written");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto config = polydbg::load_session_config(config_path);
    if (serve->parsed()) {
      if (port < 0) {
        polydbg::serve_client(config, {STDIN_FILENO, STDOUT_FILENO, false});
        return 0;
      }
      const int listener = polydbg::listen_tcp(static_cast<std::uint16_t>(port));
      std::cerr << "polydbg: listening on 127.0.0.1:" << polydbg::local_port(listener) << std::endl;
      const int peer = polydbg::accept_one(listener, polydbg::Clock::now() + std::chrono::hours(24));
      ::close(listener);
      if (peer < 0) {
        std::cerr << "polydbg: no client connected\n";
        return 2;
      }
      const int write_fd = ::dup(peer);
      polydbg::serve_client(config, {peer, write_fd, true});
      return 0;
    }
    if (run->parsed()) {
      const auto result = polydbg::run_headless(config, entry);
      std::cout << result.output << std::flush;
      if (!result.error.empty()) std::cerr << "polydbg: " << result.error << '\n';
      return result.exit_code;
    }
    spec.ladder = parse_ladder(ladder);
    spec.output = out_path;
    spec.work_dir = work_dir;
    const auto report = polydbg::measure_overhead(config, spec);
    for (const auto& [n, mean] : report.means) std::printf("n=%g mean_wall_seconds=%.6f\n", n, mean);
    std::printf("per_call_overhead_seconds=%.6f intercept_seconds=%.6f r_squared=%.4f\n", report.fit.slope,
                report.fit.intercept, report.fit.r_squared);
    std::printf("reference interval: 0.2-0.8 s per call (reported, not asserted)\n");
    return 0;
  } catch (const polydbg::Error& e) {
    std::cerr << "polydbg: " << e.what() << '\n';
    return 2;
  }
}
