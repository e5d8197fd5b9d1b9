#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>

#include "polydbg/wire.hpp"

namespace polydbg {

using Clock = std::chrono::steady_clock;

/// Channel 0 is the client; agents use 1..N.
inline constexpr int kClientChannel = 0;

/// One inbound item. An empty `message` marks the channel as closed and
/// `detail` carries the reason.
struct Inbound {
  int channel = kClientChannel;
  std::optional<DapMessage> message;
  std::string detail;

  bool closed() const noexcept { return !message.has_value(); }
};

/// Ordered multi-producer queue feeding the session's control loop. Reader
/// threads push; the control thread takes, either in arrival order or the
/// first item matching a predicate (leaving the rest in place).
class Mailbox {
 public:
  void push(Inbound item);

  std::optional<Inbound> take_if(const std::function<bool(const Inbound&)>& pred, Clock::time_point deadline);
  std::optional<Inbound> take_next(Clock::time_point deadline);

  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Inbound> items_;
};

}  // namespace polydbg
