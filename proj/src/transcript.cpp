#include "polydbg/transcript.hpp"

#include <map>

namespace polydbg {

void Transcript::add(TranscriptEntry entry) {
  std::lock_guard lock(mutex_);
  entries_.push_back(std::move(entry));
}

std::vector<TranscriptEntry> Transcript::snapshot() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

void Transcript::clear() {
  std::lock_guard lock(mutex_);
  entries_.clear();
}

std::string summarize(const DapMessage& msg) {
  std::string out(to_string(msg.kind));
  out += ':';
  out += msg.command;
  if (msg.is_response() && !msg.success) out += "(failed)";
  return out;
}

namespace {

// Position of the message a response answers, -1 when it is not in the list.
std::vector<long> correlation(const std::vector<DapMessage>& list) {
  std::map<std::int64_t, long> position;
  std::vector<long> out;
  out.reserve(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& msg = list[i];
    long target = -1;
    if (msg.is_response() && msg.request_seq) {
      if (auto it = position.find(*msg.request_seq); it != position.end()) target = it->second;
    }
    out.push_back(target);
    if (msg.is_request()) position[msg.seq] = static_cast<long>(i);
  }
  return out;
}

}  // namespace

TranscriptDiff assert_transcript(const std::vector<DapMessage>& actual, const std::vector<DapMessage>& expected,
                                 TranscriptCompare options) {
  const auto actual_links = correlation(actual);
  const auto expected_links = correlation(expected);
  const std::size_t common = std::min(actual.size(), expected.size());
  for (std::size_t i = 0; i < common; ++i) {
    const auto& a = actual[i];
    const auto& e = expected[i];
    std::string why;
    if (a.kind != e.kind || a.command != e.command) {
      why = "expected " + summarize(e) + ", got " + summarize(a);
    } else if (a.is_response() && a.success != e.success) {
      why = "success flag differs on " + summarize(e);
    } else if (actual_links[i] != expected_links[i]) {
      why = "response correlates with position " + std::to_string(actual_links[i]) + ", expected " +
            std::to_string(expected_links[i]);
    } else if (options.payloads && a.payload != e.payload) {
      why = summarize(e) + " payload differs: expected " + e.payload.dump() + ", got " + a.payload.dump();
    } else if (options.payloads && a.error_text != e.error_text) {
      why = summarize(e) + " error text differs";
    }
    if (!why.empty()) return {false, i, why};
  }
  if (actual.size() != expected.size()) {
    std::string why = "length differs: expected " + std::to_string(expected.size()) + ", got " +
                      std::to_string(actual.size());
    if (actual.size() > common) why += "; first extra " + summarize(actual[common]);
    if (expected.size() > common) why += "; first missing " + summarize(expected[common]);
    return {false, common, why};
  }
  return {};
}

}  // namespace polydbg
