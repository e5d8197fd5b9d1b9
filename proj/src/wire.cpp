#include "polydbg/wire.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "polydbg/errors.hpp"
#include "polydbg/log.hpp"

namespace polydbg {

namespace {

constexpr std::string_view kHeaderTerminator = "\r\n\r\n";
constexpr std::size_t kPrefixCap = 64;

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  return text;
}

std::int64_t required_integer(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || !it->is_number_integer()) {
    throw ProtocolError(std::string("DAP document field '") + key + "' missing or not an integer");
  }
  return it->get<std::int64_t>();
}

std::string required_string(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || !it->is_string()) {
    throw ProtocolError(std::string("DAP document field '") + key + "' missing or not a string");
  }
  return it->get<std::string>();
}

}  // namespace

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::Request: return "request";
    case MessageKind::Response: return "response";
    case MessageKind::Event: return "event";
  }
  return "unknown";
}

DapMessage DapMessage::request(std::string command, json arguments) {
  DapMessage msg;
  msg.kind = MessageKind::Request;
  msg.command = std::move(command);
  msg.payload = std::move(arguments);
  return msg;
}

DapMessage DapMessage::event(std::string name, json body) {
  DapMessage msg;
  msg.kind = MessageKind::Event;
  msg.command = std::move(name);
  msg.payload = std::move(body);
  return msg;
}

DapMessage DapMessage::response_to(const DapMessage& request, json body) {
  DapMessage msg;
  msg.kind = MessageKind::Response;
  msg.command = request.command;
  msg.request_seq = request.seq;
  msg.success = true;
  msg.payload = std::move(body);
  return msg;
}

DapMessage DapMessage::error_response_to(const DapMessage& request, std::string message) {
  DapMessage msg = response_to(request, json());
  msg.success = false;
  msg.error_text = std::move(message);
  return msg;
}

json to_document(const DapMessage& msg) {
  json doc = json::object();
  doc["seq"] = msg.seq;
  doc["type"] = std::string(to_string(msg.kind));
  switch (msg.kind) {
    case MessageKind::Request:
      doc["command"] = msg.command;
      if (!msg.payload.is_null()) doc["arguments"] = msg.payload;
      break;
    case MessageKind::Response:
      doc["request_seq"] = msg.request_seq.value_or(0);
      doc["success"] = msg.success;
      doc["command"] = msg.command;
      if (msg.error_text) doc["message"] = *msg.error_text;
      if (!msg.payload.is_null()) doc["body"] = msg.payload;
      break;
    case MessageKind::Event:
      doc["event"] = msg.command;
      if (!msg.payload.is_null()) doc["body"] = msg.payload;
      break;
  }
  return doc;
}

DapMessage from_document(const json& doc) {
  if (!doc.is_object()) throw ProtocolError("DAP document is not an object");
  DapMessage msg;
  msg.seq = required_integer(doc, "seq");
  if (msg.seq < 0) throw ProtocolError("DAP document has a negative seq");
  const std::string type = required_string(doc, "type");
  if (type == "request") {
    msg.kind = MessageKind::Request;
    msg.command = required_string(doc, "command");
    if (auto it = doc.find("arguments"); it != doc.end()) msg.payload = *it;
  } else if (type == "response") {
    msg.kind = MessageKind::Response;
    msg.command = required_string(doc, "command");
    msg.request_seq = required_integer(doc, "request_seq");
    auto ok = doc.find("success");
    if (ok == doc.end() || !ok->is_boolean()) throw ProtocolError("response without boolean 'success'");
    msg.success = ok->get<bool>();
    if (auto it = doc.find("message"); it != doc.end() && it->is_string()) msg.error_text = it->get<std::string>();
    if (auto it = doc.find("body"); it != doc.end()) msg.payload = *it;
  } else if (type == "event") {
    msg.kind = MessageKind::Event;
    msg.command = required_string(doc, "event");
    if (auto it = doc.find("body"); it != doc.end()) msg.payload = *it;
  } else {
    throw ProtocolError("unknown DAP message type '" + type + "'");
  }
  if (msg.command.empty()) throw ProtocolError("DAP message with empty command/event name");
  return msg;
}

std::string encode_frame(const DapMessage& msg) {
  if (msg.seq <= 0) throw EncodeError("cannot encode message with non-positive seq");
  if (msg.command.empty()) throw EncodeError("cannot encode message without command/event name");
  if (msg.kind == MessageKind::Response && (!msg.request_seq || *msg.request_seq <= 0)) {
    throw EncodeError("response without request_seq");
  }
  if (msg.kind != MessageKind::Response && msg.request_seq) {
    throw EncodeError("request_seq is only valid on responses");
  }
  std::string document;
  try {
    document = to_document(msg).dump();
  } catch (const json::exception& e) {
    throw EncodeError(std::string("payload is not serializable: ") + e.what());
  }
  std::string frame = "Content-Length: " + std::to_string(document.size()) + "\r\n\r\n";
  frame += document;
  return frame;
}

void FrameDecoder::poison(const std::string& what, std::string_view offending) {
  poisoned_ = true;
  poison_reason_ = what;
  throw StreamError(what, std::string(offending.substr(0, kPrefixCap)));
}

bool FrameDecoder::parse_header() {
  const auto end = pending_.find(kHeaderTerminator);
  if (end == std::string::npos) {
    if (pending_.size() > kMaxHeaderBytes) poison("DAP header exceeds size limit", pending_);
    return false;
  }
  std::optional<std::size_t> length;
  std::string_view headers(pending_.data(), end);
  while (!headers.empty()) {
    const auto eol = headers.find("\r\n");
    std::string_view line = headers.substr(0, eol);
    headers.remove_prefix(eol == std::string_view::npos ? headers.size() : eol + 2);
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) poison("malformed DAP header line", pending_);
    const std::string name = lowercase(trim(line.substr(0, colon)));
    const std::string_view value = trim(line.substr(colon + 1));
    if (name != "content-length") {
      PDBG_WARN("ignoring DAP header '{}'", name);
      continue;
    }
    std::size_t parsed = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), parsed);
    if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
      poison("Content-Length is not a decimal integer", pending_);
    }
    if (parsed > kMaxBodyBytes) poison("Content-Length exceeds size limit", pending_);
    length = parsed;
  }
  if (!length) poison("DAP header without Content-Length", pending_);
  body_length_ = length;
  pending_.erase(0, end + kHeaderTerminator.size());
  return true;
}

std::vector<DapMessage> FrameDecoder::feed(std::string_view bytes) {
  if (poisoned_) throw StreamError("stream poisoned: " + poison_reason_, "");
  pending_.append(bytes);
  std::vector<DapMessage> out;
  for (;;) {
    if (!body_length_ && !parse_header()) break;
    if (pending_.size() < *body_length_) break;
    std::string_view body(pending_.data(), *body_length_);
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded()) poison("DAP document is not valid JSON", body);
    try {
      out.push_back(from_document(doc));
    } catch (const ProtocolError& e) {
      poison(e.what(), body);
    }
    pending_.erase(0, *body_length_);
    body_length_.reset();
  }
  return out;
}

void Correlator::track(std::int64_t request_seq) {
  if (!outstanding_.insert(request_seq).second) {
    throw ProtocolError("request seq " + std::to_string(request_seq) + " already outstanding");
  }
}

std::int64_t Correlator::correlate(const DapMessage& response) {
  if (!response.is_response() || !response.request_seq) {
    throw ProtocolError("correlate() needs a response");
  }
  const auto seq = *response.request_seq;
  if (outstanding_.erase(seq) == 1) {
    answered_.insert(seq);
    return seq;
  }
  if (answered_.count(seq) != 0) {
    throw ProtocolError("duplicate response for request seq " + std::to_string(seq));
  }
  throw ProtocolError("response for unknown request seq " + std::to_string(seq));
}

}  // namespace polydbg
