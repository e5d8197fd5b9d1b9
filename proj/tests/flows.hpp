#pragma once

// End-to-end drivers shared by the unit tests and the acceptance binary.

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "support.hpp"

namespace testing {

struct ClientPlan {
  std::vector<std::pair<std::string, std::vector<int>>> breakpoints;  // set before launch
  bool stop_on_entry = false;
  /// Called at every surfaced stop; the driver continues afterwards.
  std::function<void(ScriptedClient&, const DapMessage& stopped)> on_stop;
};

struct FlowResult {
  bool completed = false;  // terminated event seen and the coordinator shut down
  std::string error;
  std::vector<DapMessage> client;  // everything the client received
  std::vector<DapMessage> set_breakpoint_responses;
  std::vector<polydbg::TranscriptEntry> transcript;
  polydbg::SessionStats stats;
  std::optional<json> final_value;  // data.polydbgFinalValue
  int exit_code = -1;
  int stops = 0;
};

/// Runs `entry` through a coordinator the way an IDE would.
FlowResult run_client_session(polydbg::SessionConfig config, const std::string& entry, const ClientPlan& plan = {});

/// Mock-side view of one language's adapter process.
struct MockView {
  std::vector<polydbg::MockRecord> records;
  int spawns() const { return polydbg::count_spawns(records); }
  std::vector<DapMessage> received() const { return polydbg::transcript_messages(records, "recv"); }
  bool failed() const;
};
MockView mock_view(const std::filesystem::path& transcript);

/// Transcript entries as "<agent> <out|in> <kind:command>[ detail]" where the
/// detail names the expression or variable for evaluate and setVariable.
std::vector<std::string> describe(const std::vector<polydbg::TranscriptEntry>& entries, bool requests_and_stops_only);

}  // namespace testing
