#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <sys/types.h>

namespace polydbg {

/// A spawned child with its stdio connected to pipes. The destructor kills a
/// still-running child.
class ChildProcess {
 public:
  struct Options {
    std::vector<std::string> argv;
    std::map<std::string, std::string> extra_env;
    std::optional<std::filesystem::path> cwd;
  };

  /// Throws SystemError when the program cannot be started.
  static ChildProcess spawn(const Options& options);

  ChildProcess() = default;
  ChildProcess(ChildProcess&& other) noexcept;
  ChildProcess& operator=(ChildProcess&& other) noexcept;
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;
  ~ChildProcess();

  pid_t pid() const noexcept { return pid_; }
  bool running();

  /// Pipe ends; ownership can be released to a Connection.
  int release_stdin() noexcept;
  int release_stdout() noexcept;
  int release_stderr() noexcept;

  std::optional<int> try_wait();
  std::optional<int> wait_for(std::chrono::milliseconds timeout);

  /// SIGTERM, then SIGKILL once `grace` elapses. Returns the wait status.
  int terminate(std::chrono::milliseconds grace);

 private:
  void close_fds() noexcept;

  pid_t pid_ = -1;
  std::optional<int> status_;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  int stderr_fd_ = -1;
};

/// Resolves `name` against PATH unless it already contains a slash.
std::optional<std::filesystem::path> find_program(const std::string& name);

}  // namespace polydbg
