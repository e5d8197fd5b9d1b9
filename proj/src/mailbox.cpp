#include "polydbg/mailbox.hpp"

namespace polydbg {

void Mailbox::push(Inbound item) {
  {
    std::lock_guard lock(mutex_);
    items_.push_back(std::move(item));
  }
  cv_.notify_all();
}

std::optional<Inbound> Mailbox::take_if(const std::function<bool(const Inbound&)>& pred,
                                        Clock::time_point deadline) {
  std::unique_lock lock(mutex_);
  auto scan = [&]() -> std::optional<Inbound> {
    for (auto it = items_.begin(); it != items_.end(); ++it) {
      if (pred(*it)) {
        Inbound out = std::move(*it);
        items_.erase(it);
        return out;
      }
    }
    return std::nullopt;
  };
  for (;;) {
    if (auto found = scan()) return found;
    if (cv_.wait_until(lock, deadline) == std::cv_status::timeout) return scan();
  }
}

std::optional<Inbound> Mailbox::take_next(Clock::time_point deadline) {
  return take_if([](const Inbound&) { return true; }, deadline);
}

std::size_t Mailbox::size() const {
  std::lock_guard lock(mutex_);
  return items_.size();
}

}  // namespace polydbg
