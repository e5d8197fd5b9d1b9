#include "polydbg/connection.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include "polydbg/errors.hpp"
#include "polydbg/log.hpp"

namespace polydbg {

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left < 0 ? 0 : static_cast<int>(left);
}

}  // namespace

void write_all(int fd, std::string_view bytes) {
  while (!bytes.empty()) {
    const ssize_t n = ::write(fd, bytes.data(), bytes.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw SystemError(std::string("write: ") + std::strerror(errno));
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

Connection::Connection(Fds fds, std::shared_ptr<Mailbox> mailbox, int channel, std::string name)
    : fds_(fds), mailbox_(std::move(mailbox)), channel_(channel), name_(std::move(name)) {
  ignore_sigpipe();
  if (::pipe2(wake_pipe_, O_CLOEXEC) != 0) throw SystemError(std::string("pipe2: ") + std::strerror(errno));
  reader_ = std::thread([this] { reader_loop(); });
}

Connection::~Connection() { close(); }

void Connection::close() {
  if (stopping_.exchange(true)) return;
  const char byte = 1;
  [[maybe_unused]] auto rc = ::write(wake_pipe_[1], &byte, 1);
  if (reader_.joinable()) reader_.join();
  closed_ = true;
  if (fds_.owned) {
    if (fds_.read >= 0) ::close(fds_.read);
    if (fds_.write >= 0 && fds_.write != fds_.read) ::close(fds_.write);
  }
  fds_.read = fds_.write = -1;
  ::close(wake_pipe_[0]);
  ::close(wake_pipe_[1]);
}

std::int64_t Connection::send(DapMessage msg) {
  std::lock_guard lock(write_mutex_);
  if (closed_ || fds_.write < 0) throw AgentDead(name_ + ": connection closed");
  msg.seq = seq_.next();
  const std::string frame = encode_frame(msg);
  try {
    write_all(fds_.write, frame);
  } catch (const SystemError& e) {
    closed_ = true;
    throw AgentDead(name_ + ": " + e.what());
  }
  PDBG_TRACE("send channel={} {}", channel_, to_document(msg).dump());
  if (sent_tap_) sent_tap_(msg);
  return msg.seq;
}

void Connection::reader_loop() {
  FrameDecoder decoder;
  char buf[64 * 1024];
  std::string reason = "end of stream";
  for (;;) {
    pollfd fds[2] = {{fds_.read, POLLIN, 0}, {wake_pipe_[0], POLLIN, 0}};
    const int rc = ::poll(fds, 2, -1);
    if (rc < 0) {
      if (errno == EINTR) continue;
      reason = std::string("poll: ") + std::strerror(errno);
      break;
    }
    if (fds[1].revents != 0) {
      reason = "closed locally";
      break;
    }
    const ssize_t n = ::read(fds_.read, buf, sizeof(buf));
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      reason = std::string("read: ") + std::strerror(errno);
      break;
    }
    if (n == 0) break;
    try {
      for (auto& msg : decoder.feed(std::string_view(buf, static_cast<std::size_t>(n)))) {
        PDBG_TRACE("recv channel={} {}", channel_, to_document(msg).dump());
        mailbox_->push({channel_, std::move(msg), {}});
      }
    } catch (const StreamError& e) {
      PDBG_ERROR("{}: {} (prefix: {})", name_, e.what(), e.offending_prefix());
      reason = std::string("stream error: ") + e.what();
      break;
    }
  }
  closed_ = true;
  mailbox_->push({channel_, std::nullopt, name_ + ": " + reason});
}

int connect_tcp(std::uint16_t port, Clock::time_point deadline) {
  ignore_sigpipe();
  for (;;) {
    const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) throw SystemError(std::string("socket: ") + std::strerror(errno));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) return fd;
    const int err = errno;
    ::close(fd);
    if (Clock::now() >= deadline) {
      throw SystemError("connect 127.0.0.1:" + std::to_string(port) + ": " + std::strerror(err));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

int listen_tcp(std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw SystemError(std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(fd, 4) != 0) {
    const int err = errno;
    ::close(fd);
    throw SystemError("listen 127.0.0.1:" + std::to_string(port) + ": " + std::strerror(err));
  }
  return fd;
}

std::uint16_t local_port(int socket_fd) {
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  if (::getsockname(socket_fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) return 0;
  return ntohs(addr.sin_port);
}

int accept_one(int listen_fd, Clock::time_point deadline) {
  pollfd pfd{listen_fd, POLLIN, 0};
  for (;;) {
    const int rc = ::poll(&pfd, 1, remaining_ms(deadline));
    if (rc < 0 && errno == EINTR) continue;
    if (rc <= 0) return -1;
    const int fd = ::accept4(listen_fd, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd >= 0) return fd;
    if (errno != EINTR && errno != EAGAIN) throw SystemError(std::string("accept: ") + std::strerror(errno));
  }
}

}  // namespace polydbg
