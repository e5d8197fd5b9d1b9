#pragma once

#include <cstddef>
#include <mutex>
#include <string>
#include <vector>

#include "polydbg/wire.hpp"

namespace polydbg {

/// One message seen by an agent, in control-thread order.
struct TranscriptEntry {
  std::string agent;
  bool outbound = false;  // agent -> adapter
  DapMessage message;
};

/// Shared, append-only log of agent traffic. Safe to read from any thread.
class Transcript {
 public:
  void add(TranscriptEntry entry);
  std::vector<TranscriptEntry> snapshot() const;
  void clear();

 private:
  mutable std::mutex mutex_;
  std::vector<TranscriptEntry> entries_;
};

struct TranscriptDiff {
  bool pass = true;
  std::size_t index = 0;  // first divergent position when !pass
  std::string detail;

  explicit operator bool() const noexcept { return pass; }
};

struct TranscriptCompare {
  bool payloads = true;  // compare arguments/body and error text as well
};

/// Equality modulo seq numbers. Seqs are replaced by list positions, so two
/// transcripts that differ only in numbering compare equal while a response
/// pointing at a different request does not.
TranscriptDiff assert_transcript(const std::vector<DapMessage>& actual, const std::vector<DapMessage>& expected,
                                 TranscriptCompare options = {});

/// `kind:command` summary used in diagnostics, e.g. "request:setVariable".
std::string summarize(const DapMessage& msg);

}  // namespace polydbg
