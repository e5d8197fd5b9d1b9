#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "polydbg/mailbox.hpp"
#include "polydbg/wire.hpp"

namespace polydbg {

/// A framed DAP link to one peer. A reader thread decodes inbound bytes and
/// pushes each message to the mailbox under `channel`; on EOF or a framing
/// error it pushes a closed marker and stops. Sending happens on the caller's
/// thread and stamps outgoing seqs.
class Connection {
 public:
  struct Fds {
    int read = -1;
    int write = -1;
    bool owned = true;  // close on destruction
  };

  Connection(Fds fds, std::shared_ptr<Mailbox> mailbox, int channel, std::string name);
  ~Connection();
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;

  /// Assigns the next seq, writes the frame, and returns the seq. Throws
  /// AgentDead when the peer is gone.
  std::int64_t send(DapMessage msg);

  /// Stops the reader and closes owned descriptors.
  void close();

  bool closed() const noexcept { return closed_.load(); }
  int channel() const noexcept { return channel_; }
  const std::string& name() const noexcept { return name_; }

  /// Observer for every frame written (after seq assignment).
  void on_sent(std::function<void(const DapMessage&)> tap) { sent_tap_ = std::move(tap); }

 private:
  void reader_loop();

  Fds fds_;
  std::shared_ptr<Mailbox> mailbox_;
  int channel_;
  std::string name_;
  SeqCounter seq_;
  std::mutex write_mutex_;
  std::atomic<bool> closed_{false};
  std::atomic<bool> stopping_{false};
  int wake_pipe_[2] = {-1, -1};
  std::thread reader_;
  std::function<void(const DapMessage&)> sent_tap_;
};

/// Writes every byte or throws SystemError.
void write_all(int fd, std::string_view bytes);

/// Connects to 127.0.0.1:port, retrying until `deadline`.
int connect_tcp(std::uint16_t port, Clock::time_point deadline);

/// Listening socket on 127.0.0.1:port (port 0 picks one).
int listen_tcp(std::uint16_t port);
std::uint16_t local_port(int socket_fd);

/// Accepts one connection; -1 on timeout.
int accept_one(int listen_fd, Clock::time_point deadline);

}  // namespace polydbg
