// Scripted stand-in debug adapter. Serves one client over stdio, or over TCP
// with --listen. ${SCENARIO_DIR} in the scenario expands to its directory;
// other ${NAME}s come from the environment.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <unistd.h>

#include <CLI11.hpp>

#include "polydbg/connection.hpp"
#include "polydbg/errors.hpp"
#include "polydbg/mock_dap.hpp"

int main(int argc, char** argv) {
  CLI::App app{"polydbg-mock: scripted DAP adapter"};
  std::string scenario_path;
  std::string transcript_path;
  int listen_port = -1;
  app.add_option("--scenario", scenario_path, "scenario document")->required();
  app.add_option("--transcript", transcript_path, "append JSON-lines transcript here");
  app.add_option("--listen", listen_port, "serve one TCP client on 127.0.0.1:<port> instead of stdio");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto scenario_dir = std::filesystem::absolute(scenario_path).parent_path().lexically_normal().string();
    auto scenario = polydbg::Scenario::load(scenario_path, [&](const std::string& name) -> std::optional<std::string> {
      if (name == "SCENARIO_DIR") return scenario_dir;
      if (const char* value = std::getenv(name.c_str())) return std::string(value);
      return std::nullopt;
    });
    if (scenario.ignore_sigterm) std::signal(SIGTERM, SIG_IGN);
    std::signal(SIGPIPE, SIG_IGN);
    polydbg::MockServer server(std::move(scenario));
    if (!transcript_path.empty()) server.record_to(transcript_path);
    if (listen_port >= 0) {
      const int listener = polydbg::listen_tcp(static_cast<std::uint16_t>(listen_port));
      const int peer = polydbg::accept_one(listener, polydbg::Clock::now() + std::chrono::seconds(60));
      ::close(listener);
      if (peer < 0) {
        std::cerr << "polydbg-mock: no client connected\n";
        return 2;
      }
      const int rc = server.serve(peer, peer);
      ::close(peer);
      return rc;
    }
    return server.serve(STDIN_FILENO, STDOUT_FILENO);
  } catch (const polydbg::Error& e) {
    std::cerr << "polydbg-mock: " << e.what() << '\n';
    return 2;
  }
}
