#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace polydbg {

using json = nlohmann::json;

enum class MessageKind { Request, Response, Event };

std::string_view to_string(MessageKind kind);

/// One Debug Adapter Protocol message. `command` holds the command name for
/// requests and responses and the event name for events; `payload` is the
/// request `arguments` or the response/event `body`.
struct DapMessage {
  MessageKind kind = MessageKind::Request;
  std::int64_t seq = 0;
  std::string command;
  std::optional<std::int64_t> request_seq;
  bool success = true;
  json payload;
  std::optional<std::string> error_text;

  static DapMessage request(std::string command, json arguments = json::object());
  static DapMessage event(std::string name, json body = json::object());
  static DapMessage response_to(const DapMessage& request, json body = json::object());
  static DapMessage error_response_to(const DapMessage& request, std::string message);

  bool is_request() const noexcept { return kind == MessageKind::Request; }
  bool is_response() const noexcept { return kind == MessageKind::Response; }
  bool is_event() const noexcept { return kind == MessageKind::Event; }

  friend bool operator==(const DapMessage&, const DapMessage&) = default;
};

/// DAP document form of a message (the JSON object on the wire).
json to_document(const DapMessage& msg);

/// Parses a DAP document. Throws ProtocolError when required fields are
/// missing or mistyped.
DapMessage from_document(const json& doc);

/// `Content-Length: <n>\r\n\r\n<document>` with n the UTF-8 byte length of
/// the document. Throws EncodeError for invalid messages or payloads that do
/// not serialize (e.g. strings that are not valid UTF-8).
std::string encode_frame(const DapMessage& msg);

/// Incremental decoder for a Content-Length framed stream. Accepts any
/// chunking of the input; the decoded sequence does not depend on chunk
/// boundaries. After the first framing error the decoder is poisoned and every
/// later call throws.
class FrameDecoder {
 public:
  /// Appends bytes and returns every message they complete, in order.
  /// Throws StreamError on a malformed header or document.
  std::vector<DapMessage> feed(std::string_view bytes);

  bool poisoned() const noexcept { return poisoned_; }
  std::size_t buffered() const noexcept { return pending_.size(); }

  static constexpr std::size_t kMaxHeaderBytes = 8 * 1024;
  static constexpr std::size_t kMaxBodyBytes = 256 * 1024 * 1024;

 private:
  [[noreturn]] void poison(const std::string& what, std::string_view offending);
  bool parse_header();

  std::string pending_;
  std::optional<std::size_t> body_length_;
  bool poisoned_ = false;
  std::string poison_reason_;
};

/// Tracks outstanding request seqs for one connection and matches responses
/// to them.
class Correlator {
 public:
  void track(std::int64_t request_seq);

  /// Returns the matched request seq and drops it from the outstanding set.
  /// Throws ProtocolError for unknown or duplicate responses.
  std::int64_t correlate(const DapMessage& response);

  bool outstanding(std::int64_t request_seq) const { return outstanding_.count(request_seq) != 0; }
  const std::set<std::int64_t>& pending() const noexcept { return outstanding_; }

 private:
  std::set<std::int64_t> outstanding_;
  std::set<std::int64_t> answered_;
};

/// Sender-local monotonically increasing seq source (first value is 1).
class SeqCounter {
 public:
  std::int64_t next() noexcept { return ++last_; }
  std::int64_t last() const noexcept { return last_; }

 private:
  std::int64_t last_ = 0;
};

}  // namespace polydbg
