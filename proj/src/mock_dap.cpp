#include "polydbg/mock_dap.hpp"

#include <algorithm>
#include <cerrno>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "polydbg/connection.hpp"
#include "polydbg/errors.hpp"
#include "polydbg/log.hpp"

namespace polydbg {

namespace {

constexpr std::int64_t kScopeBase = 1000;

int parse_repeat(const json& value) {
  if (value.is_number_integer()) return value.get<int>();
  if (value.is_string()) {
    try {
      return std::stoi(value.get<std::string>());
    } catch (const std::exception&) {
    }
  }
  throw ScenarioError("step.repeat must be an integer, got " + value.dump());
}

std::map<std::string, std::string> parse_variables(const json& doc) {
  std::map<std::string, std::string> out;
  if (doc.is_null()) return out;
  if (!doc.is_object()) throw ScenarioError("variables must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (key.find(':') == std::string::npos) throw ScenarioError("variable key '" + key + "' must be <frame>:<name>");
    out[key] = value.is_string() ? value.get<std::string>() : value.dump();
  }
  return out;
}

}  // namespace

std::string substitute_variables(std::string_view text,
                                 const std::function<std::optional<std::string>(const std::string&)>& lookup) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto open = text.find("${", pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    out.append(text.substr(pos, open - pos));
    const auto close = text.find('}', open + 2);
    if (close == std::string_view::npos) throw ScenarioError("unterminated ${ in scenario");
    const std::string name(text.substr(open + 2, close - open - 2));
    auto value = lookup(name);
    if (!value) throw ScenarioError("scenario variable ${" + name + "} is not set");
    out.append(*value);
    pos = close + 1;
  }
  return out;
}

bool json_subset_match(const json& pattern, const json& actual) {
  if (pattern.is_string() && pattern.get<std::string>() == "*") return true;
  if (pattern.is_object()) {
    if (!actual.is_object()) return false;
    for (const auto& [key, value] : pattern.items()) {
      auto it = actual.find(key);
      if (it == actual.end() || !json_subset_match(value, *it)) return false;
    }
    return true;
  }
  if (pattern.is_array()) {
    if (!actual.is_array() || actual.size() != pattern.size()) return false;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
      if (!json_subset_match(pattern[i], actual[i])) return false;
    }
    return true;
  }
  if (pattern.is_number() && actual.is_number()) return pattern.get<double>() == actual.get<double>();
  return pattern == actual;
}

json normalize_frames(const json& frames) {
  if (!frames.is_array()) throw ScenarioError("a stack must be an array of frames");
  json out = json::array();
  std::int64_t index = 0;
  for (const auto& frame : frames) {
    ++index;
    if (!frame.is_object()) throw ScenarioError("stack frame must be an object");
    json f = frame;
    if (!f.contains("id")) f["id"] = index;
    if (!f.contains("name")) f["name"] = "frame" + std::to_string(index);
    if (!f.contains("line")) f["line"] = 0;
    if (!f.contains("column")) f["column"] = 1;
    if (f.contains("path")) {
      const std::string path = f["path"].get<std::string>();
      f["source"] = {{"name", std::filesystem::path(path).filename().string()}, {"path", path}};
      f.erase("path");
    }
    out.push_back(std::move(f));
  }
  return out;
}

Scenario Scenario::parse(const json& doc) {
  if (!doc.is_object()) throw ScenarioError("scenario must be an object");
  Scenario s;
  try {
    s.capabilities = doc.value("capabilities", json{{"supportsConfigurationDoneRequest", true}, {"supportsSetVariable", true}});
    s.strict = doc.value("strict", false);
    s.ignore_sigterm = doc.value("ignore_sigterm", false);
    s.hang_on_disconnect = doc.value("hang_on_disconnect", false);
    s.threads = doc.value("threads", json::array({{{"id", 1}, {"name", "MainThread"}}}));
    s.variables = parse_variables(doc.value("variables", json()));
    const json stacks = doc.value("stacks", json::object());
    for (const auto& [key, frames] : stacks.items()) s.stacks[key] = normalize_frames(frames);
    for (const auto& entry : doc.value("steps", json::array())) {
      MockStep step;
      step.on = entry.at("on");
      if (!step.on.is_object() || !step.on.contains("command")) throw ScenarioError("step.on needs a command");
      const json respond = entry.value("respond", json("auto"));
      if (respond.is_string()) {
        const auto mode = respond.get<std::string>();
        if (mode == "auto") {
          step.reply = MockStep::Reply::Auto;
        } else if (mode == "silent") {
          step.reply = MockStep::Reply::Silent;
        } else {
          throw ScenarioError("step.respond must be auto, silent, or an object");
        }
      } else if (respond.is_object()) {
        step.reply = MockStep::Reply::Template;
        step.reply_template = respond;
      } else {
        throw ScenarioError("step.respond must be auto, silent, or an object");
      }
      for (const auto& ev : entry.value("then_emit", json::array())) {
        if (!ev.is_object() || !ev.contains("event")) throw ScenarioError("then_emit entries need an event name");
        step.then_emit.push_back(ev);
      }
      step.set_variables = parse_variables(entry.value("set_variables", json()));
      if (entry.contains("repeat")) step.repeat = parse_repeat(entry["repeat"]);
      if (step.repeat == 0 || step.repeat < -1) throw ScenarioError("step.repeat must be positive or -1");
      step.exit_after = entry.value("exit_after", false);
      step.delay_ms = entry.value("delay_ms", 0);
      s.steps.push_back(std::move(step));
    }
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("malformed scenario: ") + e.what());
  }
  return s;
}

Scenario Scenario::load(const std::filesystem::path& path,
                        const std::function<std::optional<std::string>(const std::string&)>& lookup) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot read scenario " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  json doc = json::parse(substitute_variables(text.str(), lookup), nullptr, false);
  if (doc.is_discarded()) throw ScenarioError("scenario " + path.string() + " is not valid JSON");
  return parse(doc);
}

MockServer::MockServer(Scenario scenario) : scenario_(std::move(scenario)) {}

void MockServer::record_to(const std::filesystem::path& path) {
  sink_.open(path, std::ios::app);
  if (!sink_) throw ScenarioError("cannot open transcript " + path.string());
  record("spawn", {{"pid", ::getpid()}});
}

void MockServer::record(const std::string& dir, json doc) {
  if (sink_.is_open()) {
    sink_ << json{{"dir", dir}, {"msg", doc}}.dump() << '\n';
    sink_.flush();
  }
  records_.push_back({dir, std::move(doc)});
}

std::optional<std::string> MockServer::lookup_variable(std::int64_t frame, const std::string& name) const {
  if (auto it = scenario_.variables.find(std::to_string(frame) + ":" + name); it != scenario_.variables.end()) {
    return it->second;
  }
  if (auto it = scenario_.variables.find("*:" + name); it != scenario_.variables.end()) return it->second;
  return std::nullopt;
}

void MockServer::store_variable(std::int64_t frame, const std::string& name, const std::string& value) {
  scenario_.variables.erase(std::to_string(frame) + ":" + name);
  scenario_.variables["*:" + name] = value;
}

// FNV-1a of "path:line", kept positive.
std::int64_t breakpoint_id(const std::string& path, int line) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : path + ":" + std::to_string(line)) {
    h ^= c;
    h *= 16777619u;
  }
  return static_cast<std::int64_t>(h & 0x7fffffffu) + 1;
}

DapMessage MockServer::auto_reply(const DapMessage& request) {
  const json& args = request.payload.is_object() ? request.payload : json::object();
  const auto& cmd = request.command;
  if (cmd == "initialize") return DapMessage::response_to(request, scenario_.capabilities);
  if (cmd == "setBreakpoints") {
    json list = json::array();
    const auto path = args.value("source", json::object()).value("path", std::string());
    for (const auto& bp : args.value("breakpoints", json::array())) {
      const int line = bp.value("line", 0);
      list.push_back({{"id", breakpoint_id(path, line)}, {"verified", true}, {"line", line}});
    }
    return DapMessage::response_to(request, {{"breakpoints", list}});
  }
  if (cmd == "threads") return DapMessage::response_to(request, {{"threads", scenario_.threads}});
  if (cmd == "stackTrace") {
    const auto start = static_cast<std::size_t>(std::max(0, args.value("startFrame", 0)));
    const auto levels = static_cast<std::size_t>(std::max(0, args.value("levels", 0)));
    json frames = json::array();
    for (std::size_t i = start; i < current_stack_.size() && (levels == 0 || frames.size() < levels); ++i) {
      frames.push_back(current_stack_[i]);
    }
    return DapMessage::response_to(request, {{"stackFrames", frames}, {"totalFrames", current_stack_.size()}});
  }
  if (cmd == "scopes") {
    const auto frame = args.value("frameId", std::int64_t{0});
    return DapMessage::response_to(
        request,
        {{"scopes", json::array({{{"name", "Locals"}, {"variablesReference", kScopeBase + frame}, {"expensive", false}}})}});
  }
  if (cmd == "variables") {
    const auto frame = args.value("variablesReference", std::int64_t{0}) - kScopeBase;
    // A frame with scripted locals shows only those; otherwise the globals.
    std::map<std::string, std::string> visible;
    for (const auto& [key, value] : scenario_.variables) {
      const auto colon = key.find(':');
      if (key.substr(0, colon) == std::to_string(frame)) visible[key.substr(colon + 1)] = value;
    }
    if (visible.empty()) {
      for (const auto& [key, value] : scenario_.variables) {
        const auto colon = key.find(':');
        if (key.substr(0, colon) == "*") visible.emplace(key.substr(colon + 1), value);
      }
    }
    json list = json::array();
    for (const auto& [name, value] : visible) {
      list.push_back({{"name", name}, {"value", value}, {"variablesReference", 0}});
    }
    return DapMessage::response_to(request, {{"variables", list}});
  }
  if (cmd == "evaluate") {
    const auto expression = args.value("expression", std::string());
    if (auto value = lookup_variable(args.value("frameId", std::int64_t{0}), expression)) {
      return DapMessage::response_to(request, {{"result", *value}, {"variablesReference", 0}});
    }
    return DapMessage::error_response_to(request, "name '" + expression + "' is not defined");
  }
  if (cmd == "setVariable") {
    const auto frame = args.value("variablesReference", std::int64_t{0}) - kScopeBase;
    const auto value = args.value("value", std::string());
    store_variable(frame, args.value("name", std::string()), value);
    return DapMessage::response_to(request, {{"value", value}});
  }
  if (cmd == "setExpression") {
    const auto value = args.value("value", std::string());
    store_variable(args.value("frameId", std::int64_t{0}), args.value("expression", std::string()), value);
    return DapMessage::response_to(request, {{"value", value}});
  }
  if (cmd == "continue") return DapMessage::response_to(request, {{"allThreadsContinued", true}});
  return DapMessage::response_to(request, json::object());
}

DapMessage MockServer::make_event(const json& spec) {
  const auto name = spec.at("event").get<std::string>();
  json body = spec.value("body", json::object());
  if (name == "stopped") {
    if (spec.contains("stack")) {
      const json& stack = spec["stack"];
      if (stack.is_string()) {
        auto it = scenario_.stacks.find(stack.get<std::string>());
        if (it == scenario_.stacks.end()) throw ScenarioError("unknown stack '" + stack.get<std::string>() + "'");
        current_stack_ = it->second;
      } else {
        current_stack_ = normalize_frames(stack);
      }
    } else if (auto it = scenario_.stacks.find(std::to_string(stop_index_)); it != scenario_.stacks.end()) {
      current_stack_ = it->second;
    }
    ++stop_index_;
  }
  return DapMessage::event(name, body);
}

bool MockServer::scripts_initialized() const {
  for (const auto& step : scenario_.steps) {
    for (const auto& ev : step.then_emit) {
      if (ev.value("event", std::string()) == "initialized") return true;
    }
  }
  return false;
}

std::vector<DapMessage> MockServer::handle(const DapMessage& request) {
  record("recv", to_document(request));
  std::vector<DapMessage> out;
  if (request.command == "disconnect" || request.command == "terminate") {
    if (scenario_.hang_on_disconnect) return out;
    out.push_back(DapMessage::response_to(request));
    if (request.command == "disconnect") finished_ = true;
    return out;
  }

  const bool has_step = cursor_ < scenario_.steps.size();
  if (has_step && json_subset_match(scenario_.steps[cursor_].on,
                                    json{{"command", request.command}, {"arguments", request.payload}})) {
    const MockStep& step = scenario_.steps[cursor_];
    ++step_hits_;
    if (step.repeat != -1 && step_hits_ >= step.repeat) {
      ++cursor_;
      step_hits_ = 0;
    }
    for (const auto& [key, value] : step.set_variables) scenario_.variables[key] = value;
    if (step.delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(step.delay_ms));
    switch (step.reply) {
      case MockStep::Reply::Auto: out.push_back(auto_reply(request)); break;
      case MockStep::Reply::Silent: break;
      case MockStep::Reply::Template: {
        const auto& t = step.reply_template;
        if (t.value("success", true)) {
          out.push_back(DapMessage::response_to(request, t.contains("body") ? t["body"] : auto_reply(request).payload));
        } else {
          out.push_back(DapMessage::error_response_to(request, t.value("message", std::string("rejected by scenario"))));
        }
        break;
      }
    }
    for (const auto& ev : step.then_emit) out.push_back(make_event(ev));
    if (step.exit_after || (scenario_.strict && cursor_ >= scenario_.steps.size())) finished_ = true;
    return out;
  }

  if (scenario_.strict) {
    const json expected = has_step ? scenario_.steps[cursor_].on : json("end of script");
    record("fail", {{"index", cursor_}, {"expected", expected}, {"actual", to_document(request)}});
    PDBG_ERROR("mock: unexpected request at step {}: expected {} got {}", cursor_, expected.dump(),
               to_document(request).dump());
    failed_ = true;
    finished_ = true;
    out.push_back(DapMessage::error_response_to(request, "unexpected request '" + request.command + "'"));
    return out;
  }
  out.push_back(auto_reply(request));
  if ((request.command == "launch" || request.command == "attach") && !scripts_initialized()) {
    out.push_back(DapMessage::event("initialized"));
  }
  return out;
}

int MockServer::serve(int in_fd, int out_fd) {
  FrameDecoder decoder;
  SeqCounter seq;
  char buf[64 * 1024];
  while (!finished_) {
    const ssize_t n = ::read(in_fd, buf, sizeof(buf));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    std::vector<DapMessage> inbound;
    try {
      inbound = decoder.feed(std::string_view(buf, static_cast<std::size_t>(n)));
    } catch (const StreamError& e) {
      PDBG_ERROR("mock: {}", e.what());
      return 2;
    }
    for (const auto& msg : inbound) {
      if (!msg.is_request()) continue;
      for (auto& reply : handle(msg)) {
        reply.seq = seq.next();
        record("send", to_document(reply));
        try {
          write_all(out_fd, encode_frame(reply));
        } catch (const SystemError&) {
          return failed_ ? 3 : 0;
        }
      }
      if (finished_) break;
    }
  }
  if (scenario_.hang_on_disconnect) {
    for (;;) std::this_thread::sleep_for(std::chrono::seconds(1));
  }
  return failed_ ? 3 : 0;
}

std::vector<MockRecord> load_mock_transcript(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<MockRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw ScenarioError("bad transcript line: " + line);
    out.push_back({doc.value("dir", std::string()), doc.value("msg", json())});
  }
  return out;
}

int count_spawns(const std::vector<MockRecord>& records) {
  return static_cast<int>(std::count_if(records.begin(), records.end(), [](const MockRecord& r) { return r.dir == "spawn"; }));
}

std::vector<DapMessage> transcript_messages(const std::vector<MockRecord>& records, const std::string& dir) {
  std::vector<DapMessage> out;
  for (const auto& r : records) {
    if (r.dir == dir) out.push_back(from_document(r.doc));
  }
  return out;
}

}  // namespace polydbg
