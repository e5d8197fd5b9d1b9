#include "polydbg/agent.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <poll.h>
#include <unistd.h>

#include "polydbg/errors.hpp"
#include "polydbg/log.hpp"

namespace polydbg {

namespace {

const std::set<std::string> kResumeCommands = {"continue", "next", "stepIn", "stepOut", "stepBack",
                                               "reverseContinue", "goto"};

bool is_resume(const std::string& command) { return kResumeCommands.count(command) != 0; }

std::string failure_text(const DapMessage& response) {
  if (response.error_text) return *response.error_text;
  if (response.payload.is_object() && response.payload.contains("error")) return response.payload["error"].dump();
  return "request failed";
}

}  // namespace

std::string_view to_string(AgentPhase phase) {
  switch (phase) {
    case AgentPhase::Starting: return "Starting";
    case AgentPhase::Standby: return "Standby";
    case AgentPhase::Running: return "Running";
    case AgentPhase::PausedAtPolyglotCall: return "PausedAtPolyglotCall";
    case AgentPhase::PausedAtUser: return "PausedAtUser";
    case AgentPhase::Terminated: return "Terminated";
  }
  return "?";
}

std::string_view to_string(StopType type) {
  switch (type) {
    case StopType::StandbyOuter: return "StandbyOuter";
    case StopType::StandbyInner: return "StandbyInner";
    case StopType::PolyglotCall: return "PolyglotCall";
    case StopType::UserBreakpoint: return "UserBreakpoint";
    case StopType::Step: return "Step";
    case StopType::Exception: return "Exception";
    case StopType::Exited: return "Exited";
  }
  return "?";
}

BreakpointTable make_breakpoint_table(const std::vector<SourceLocation>& locations) {
  BreakpointTable table;
  for (const auto& loc : locations) {
    auto& list = table[canonical_path(loc.path)];
    if (list.is_null()) list = json::array();
    list.push_back({{"line", loc.line}});
  }
  return table;
}

DebugAgent::DebugAgent(AgentConfig config, SessionDefaults defaults, std::shared_ptr<Mailbox> mailbox, int channel)
    : config_(std::move(config)), defaults_(defaults), mailbox_(std::move(mailbox)), channel_(channel) {
  for (const auto& file : config_.runner.files()) runner_files_.insert(canonical_path(file));
}

DebugAgent::~DebugAgent() {
  try {
    shutdown();
  } catch (const std::exception& e) {
    PDBG_WARN("agent={} shutdown failed: {}", language(), e.what());
  }
}

void DebugAgent::ensure_live() const {
  if (dead_ || state_.phase == AgentPhase::Terminated) {
    throw AgentDead(language() + ": agent is terminated" + (dead_reason_.empty() ? "" : " (" + dead_reason_ + ")"));
  }
  if (quarantined_) throw ClassificationError(language() + ": agent is quarantined");
  if (!connection_) throw PreconditionError(language() + ": agent not started");
}

void DebugAgent::mark_dead(const std::string& reason) {
  if (dead_) return;
  dead_ = true;
  dead_reason_ = reason;
  state_.phase = AgentPhase::Terminated;
  state_.reason = reason;
  PDBG_WARN("agent={} dead reason=\"{}\"", language(), reason);
}

void DebugAgent::note_inbound(const DapMessage& msg) {
  if (transcript_) transcript_->add({language(), false, msg});
}

void DebugAgent::start() {
  if (started()) return;
  if (dead_) throw AgentDead(language() + ": agent was shut down");
  const auto deadline = Clock::now() + defaults_.startup_timeout;
  state_ = AgentState{};
  if (!std::filesystem::exists(config_.runner.runner_path)) {
    throw InputError(language() + ": runner file not found: " + config_.runner.runner_path);
  }

  ChildProcess::Options options;
  options.argv = config_.adapter_command;
  options.extra_env = config_.environment;
  process_ = ChildProcess::spawn(options);
  ++spawn_count_;
  PDBG_INFO("agent={} spawned pid={}", language(), process_.pid());

  Connection::Fds fds;
  if (config_.transport.kind == TransportKind::Stdio) {
    fds.read = process_.release_stdout();
    fds.write = process_.release_stdin();
  } else {
    const int sock = connect_tcp(config_.transport.port, deadline);
    fds.read = fds.write = sock;
  }
  stderr_reader_ = std::thread([fd = process_.release_stderr(), name = language()] {
    std::string line;
    char buf[4096];
    for (;;) {
      const ssize_t n = ::read(fd, buf, sizeof(buf));
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      for (ssize_t i = 0; i < n; ++i) {
        if (buf[i] == '\n') {
          PDBG_DEBUG("agent={} adapter_stderr=\"{}\"", name, line);
          line.clear();
        } else {
          line.push_back(buf[i]);
        }
      }
    }
    if (!line.empty()) PDBG_DEBUG("agent={} adapter_stderr=\"{}\"", name, line);
    ::close(fd);
  });
  connection_ = std::make_unique<Connection>(fds, mailbox_, channel_, language());
  connection_->on_sent([this](const DapMessage& msg) {
    if (transcript_) transcript_->add({language(), true, msg});
  });

  try {
    const auto init = request("initialize",
                              {{"clientID", "polydbg"},
                               {"clientName", "polydbg"},
                               {"adapterID", language()},
                               {"linesStartAt1", true},
                               {"columnsStartAt1", true},
                               {"pathFormat", "path"}},
                              deadline);
    if (!init.success) throw CapabilityError("initialize");
    capabilities_ = init.payload.is_object() ? init.payload : json::object();
    if (!capabilities_.value("supportsSetExpression", false) && !capabilities_.value("supportsSetVariable", false)) {
      throw CapabilityError("setVariable");
    }

    json launch_args = config_.launch_arguments.is_object() ? config_.launch_arguments : json::object();
    if (!launch_args.contains("program")) launch_args["program"] = config_.runner.runner_path;
    const auto launch_seq = send_request("launch", launch_args);

    std::optional<DapMessage> launch_response;
    bool initialized = false;
    while (!initialized) {
      auto item = mailbox_->take_if(
          [&](const Inbound& in) {
            if (in.channel != channel_) return false;
            if (in.closed()) return true;
            const auto& m = *in.message;
            return (m.is_event() && m.command == "initialized") ||
                   (m.is_response() && m.request_seq == launch_seq);
          },
          deadline);
      if (!item) throw StartupTimeout(language() + ": no initialized event before the startup deadline");
      if (item->closed()) {
        mark_dead(item->detail);
        throw AgentDead(language() + ": adapter closed the connection during startup");
      }
      note_inbound(*item->message);
      if (item->message->is_event()) {
        initialized = true;
      } else {
        launch_response = std::move(item->message);
        if (!launch_response->success) throw CapabilityError("launch");
      }
    }

    std::map<std::string, std::set<int>> runner_lines;
    for (const auto* loc : {&config_.runner.polyglot_bp, &config_.runner.outer_standby_bp,
                            &config_.runner.inner_standby_bp}) {
      runner_lines[loc->path].insert(loc->line);
    }
    for (const auto& [path, line_set] : runner_lines) {
      json lines = json::array();
      for (const int line : line_set) lines.push_back({{"line", line}});
      const auto response = request(
          "setBreakpoints",
          {{"source", {{"path", path}, {"name", std::filesystem::path(path).filename().string()}}},
           {"breakpoints", lines}},
          deadline);
      if (!response.success) throw CapabilityError("setBreakpoints");
    }

    if (capabilities_.value("supportsConfigurationDoneRequest", false)) {
      const auto done = request("configurationDone", json::object(), deadline);
      if (!done.success) throw CapabilityError("configurationDone");
    }
    if (!launch_response) {
      launch_response = await_response(launch_seq, "launch", deadline);
      if (!launch_response->success) throw CapabilityError("launch");
    }

    for (;;) {
      auto event = await_event({"stopped", "exited", "terminated"}, deadline);
      if (!event) throw StartupTimeout(language() + ": runner did not reach the standby breakpoint in time");
      if (event->command != "stopped") throw AgentDead(language() + ": adapter " + event->command + " during startup");
      thread_id_ = event->payload.value("threadId", thread_id_);
      const auto frames = stack_trace(thread_id_);
      if (!frames.empty() && frame_location(frames.front()) == config_.runner.outer_standby_bp) {
        top_frame_id_ = frames.front().value("id", std::int64_t{0});
        break;
      }
      const auto resumed = request("continue", {{"threadId", thread_id_}}, deadline);
      if (!resumed.success) throw CapabilityError("continue");
    }
  } catch (const TimeoutError& e) {
    shutdown();
    throw StartupTimeout(language() + ": " + e.what());
  } catch (...) {
    shutdown();
    throw;
  }
  state_.phase = AgentPhase::Standby;
  state_.depth = 0;
  PDBG_INFO("agent={} standby pid={}", language(), process_.pid());
}

std::int64_t DebugAgent::send_request(const std::string& command, json arguments) {
  if (!connection_) throw PreconditionError(language() + ": agent not started");
  if (dead_) throw AgentDead(language() + ": " + dead_reason_);
  try {
    return connection_->send(DapMessage::request(command, std::move(arguments)));
  } catch (const AgentDead& e) {
    mark_dead(e.what());
    throw;
  }
}

DapMessage DebugAgent::await_response(std::int64_t seq, const std::string& command, Clock::time_point deadline) {
  auto item = mailbox_->take_if(
      [&](const Inbound& in) {
        return in.channel == channel_ &&
               (in.closed() || (in.message->is_response() && in.message->request_seq == seq));
      },
      deadline);
  if (!item) throw TimeoutError(language() + ": no response to '" + command + "' before the deadline");
  if (item->closed()) {
    mark_dead(item->detail);
    throw AgentDead(language() + ": connection closed while waiting for '" + command + "'");
  }
  note_inbound(*item->message);
  return std::move(*item->message);
}

std::optional<DapMessage> DebugAgent::await_event(const std::set<std::string>& names, Clock::time_point deadline) {
  auto item = mailbox_->take_if(
      [&](const Inbound& in) {
        return in.channel == channel_ &&
               (in.closed() || (in.message->is_event() && names.count(in.message->command) != 0));
      },
      deadline);
  if (!item) return std::nullopt;
  if (item->closed()) {
    mark_dead(item->detail);
    throw AgentDead(language() + ": connection closed: " + item->detail);
  }
  note_inbound(*item->message);
  return std::move(item->message);
}

DapMessage DebugAgent::request(const std::string& command, json arguments, Clock::time_point deadline) {
  const auto seq = send_request(command, std::move(arguments));
  return await_response(seq, command, deadline);
}

DapMessage DebugAgent::request(const std::string& command, json arguments) {
  return request(command, std::move(arguments), Clock::now() + defaults_.request_timeout);
}

SourceLocation DebugAgent::frame_location(const json& frame) const {
  SourceLocation loc;
  loc.line = frame.value("line", 0);
  auto source = frame.find("source");
  if (source != frame.end() && source->is_object()) {
    auto path = source->find("path");
    if (path != source->end() && path->is_string() && !path->get<std::string>().empty()) {
      loc.path = display_path(canonical_path(path->get<std::string>()));
    }
  }
  return loc;
}

std::string DebugAgent::display_path(const std::string& adapter_path) const {
  auto it = aliases_.find(adapter_path);
  return it == aliases_.end() ? adapter_path : it->second;
}

bool DebugAgent::is_runner_file(const std::string& path) const {
  return !path.empty() && runner_files_.count(canonical_path(path)) != 0;
}

bool DebugAgent::is_runner_location(const SourceLocation& loc) const { return is_runner_file(loc.path); }

json DebugAgent::stack_trace(std::int64_t thread) {
  const auto response = request("stackTrace", {{"threadId", thread}, {"startFrame", 0}});
  if (!response.success) throw ProtocolError(language() + ": stackTrace failed: " + failure_text(response));
  const json frames = response.payload.is_object() ? response.payload.value("stackFrames", json::array()) : json::array();
  if (!frames.is_array()) throw ProtocolError(language() + ": stackTrace without a stackFrames array");
  return frames;
}

void DebugAgent::refresh_top_frame() {
  const auto frames = stack_trace(thread_id_);
  if (frames.empty()) throw ProtocolError(language() + ": stackTrace returned no frames");
  top_frame_id_ = frames.front().value("id", std::int64_t{0});
}

StopKind DebugAgent::classify_stop(const DapMessage& event) {
  if (!event.is_event()) throw ProtocolError("classify_stop needs an event");
  StopKind kind;
  kind.event_body = event.payload.is_object() ? event.payload : json::object();
  if (event.command == "exited" || event.command == "terminated") {
    kind.type = StopType::Exited;
    kind.exit_code = kind.event_body.value("exitCode", 0);
    state_.phase = AgentPhase::Terminated;
    state_.reason = "adapter " + event.command;
    return kind;
  }
  if (event.command != "stopped") throw ProtocolError("classify_stop got a '" + event.command + "' event");
  ensure_live();

  thread_id_ = kind.event_body.value("threadId", thread_id_);
  top_frame_id_.reset();
  scope_reference_.reset();
  const json frames = stack_trace(thread_id_);
  if (frames.empty()) {
    quarantined_ = true;
    throw ClassificationError(language() + ": stopped with an empty stack");
  }
  const SourceLocation top = frame_location(frames.front());
  if (top.path.empty()) {
    quarantined_ = true;
    throw ClassificationError(language() + ": top frame has no readable source");
  }
  top_frame_id_ = frames.front().value("id", std::int64_t{0});
  kind.location = top;
  const auto& contract = config_.runner;

  if (top == contract.polyglot_bp) {
    kind.type = StopType::PolyglotCall;
    PolyglotCallSite site;
    site.thread_id = thread_id_;
    for (std::size_t i = 1; i < frames.size(); ++i) {
      auto loc = frame_location(frames[i]);
      if (!loc.path.empty() && !is_runner_file(loc.path)) {
        site.caller_location = loc;
        break;
      }
    }
    try {
      auto args = read_polyglot_args();
      site.target_language = args.target_language;
      site.target_code = args.target_code;
      kind.call = site;
    } catch (const InputError& e) {
      kind.call_error = e.what();
    }
    open_calls_.push_back(site);
    state_.phase = AgentPhase::PausedAtPolyglotCall;
    state_.call = site;
    PDBG_DEBUG("agent={} polyglot_call target={} code={} depth={}", language(), site.target_language,
               site.target_code, state_.depth);
    return kind;
  }
  if (top == contract.outer_standby_bp) {
    kind.type = StopType::StandbyOuter;
    if (!open_calls_.empty()) PDBG_WARN("agent={} outer standby with {} open calls", language(), open_calls_.size());
    state_.depth = std::max(0, state_.depth - 1);
    state_.phase = AgentPhase::Standby;
    state_.call.reset();
    return kind;
  }
  if (top == contract.inner_standby_bp) {
    kind.type = StopType::StandbyInner;
    state_.depth = std::max(0, state_.depth - 1);
    state_.phase = AgentPhase::PausedAtPolyglotCall;
    state_.call = open_calls_.empty() ? std::nullopt : std::optional(open_calls_.back());
    return kind;
  }

  const std::string reason = kind.event_body.value("reason", std::string());
  if (reason == "exception") {
    kind.type = StopType::Exception;
    kind.text = kind.event_body.value("text", kind.event_body.value("description", std::string()));
  } else if (reason == "step" || reason == "goto" || reason == "pause" || reason == "entry") {
    kind.type = StopType::Step;
  } else {
    kind.type = StopType::UserBreakpoint;
  }
  state_.phase = AgentPhase::PausedAtUser;
  state_.location = top;
  return kind;
}

StopKind DebugAgent::next_stop(Clock::time_point deadline) {
  auto event = await_event({"stopped", "exited", "terminated"}, deadline);
  if (!event) throw TimeoutError(language() + ": no stop before the deadline");
  return classify_stop(*event);
}

std::string DebugAgent::evaluate(const std::string& expression) {
  if (!top_frame_id_) refresh_top_frame();
  const auto response =
      request("evaluate", {{"expression", expression}, {"frameId", *top_frame_id_}, {"context", config_.evaluate_context}});
  if (!response.success) {
    throw ProtocolError(language() + ": evaluate '" + expression + "' failed: " + failure_text(response));
  }
  const json body = response.payload.is_object() ? response.payload : json::object();
  auto result = body.find("result");
  if (result == body.end() || !result->is_string()) throw ProtocolError(language() + ": evaluate without a result string");
  return result->get<std::string>();
}

PolyglotCallSite DebugAgent::read_polyglot_args() {
  ensure_live();
  PolyglotCallSite site;
  site.thread_id = thread_id_;
  if (state_.call) site.caller_location = state_.call->caller_location;
  const auto read_string = [&](const std::string& name) {
    const auto value = parse_value(config_.values, evaluate(name));
    if (value.kind != ValueKind::Str) {
      throw InputError(language() + ": polyglot argument '" + name + "' is not a string (" + value.describe() + ")");
    }
    if (value.lexical.empty()) throw InputError(language() + ": polyglot argument '" + name + "' is empty");
    return value.lexical;
  };
  site.target_language = read_string(config_.runner.param_language);
  site.target_code = read_string(config_.runner.param_code);
  return site;
}

void DebugAgent::write_variable(const std::string& name, const std::string& literal) {
  if (!top_frame_id_) refresh_top_frame();
  if (capabilities_.value("supportsSetExpression", false)) {
    const auto response = request("setExpression", {{"expression", name}, {"value", literal}, {"frameId", *top_frame_id_}});
    if (!response.success) throw CapabilityError("setExpression");
    return;
  }
  if (!scope_reference_) {
    const auto response = request("scopes", {{"frameId", *top_frame_id_}});
    if (!response.success) throw CapabilityError("setVariable");
    const json scopes = response.payload.is_object() ? response.payload.value("scopes", json::array()) : json::array();
    for (const auto& scope : scopes) {
      const auto scope_name = scope.value("name", std::string());
      if (scope_name.find("Local") != std::string::npos || scope_name.find("local") != std::string::npos) {
        scope_reference_ = scope.value("variablesReference", std::int64_t{0});
        break;
      }
    }
    if (!scope_reference_ && !scopes.empty()) scope_reference_ = scopes.front().value("variablesReference", std::int64_t{0});
    if (!scope_reference_) throw CapabilityError("setVariable");
  }
  const auto response = request("setVariable", {{"variablesReference", *scope_reference_}, {"name", name}, {"value", literal}});
  if (!response.success) throw CapabilityError("setVariable");
}

void DebugAgent::send_resume(const std::string& command) {
  const auto response = request(command, {{"threadId", thread_id_}});
  if (!response.success) throw CapabilityError(command);
  top_frame_id_.reset();
  scope_reference_.reset();
}

void DebugAgent::resume(const std::string& command) {
  ensure_live();
  send_resume(command);
  state_.phase = AgentPhase::Running;
}

std::string DebugAgent::prepare_program(const std::string& program) {
  const auto& preprocessor = config_.source_preprocessor;
  if (!preprocessor || *preprocessor == "identity") return program;
  constexpr std::string_view kPrepend = "prepend:";
  if (preprocessor->rfind(kPrepend, 0) != 0) throw ConfigError(language() + ": unknown source preprocessor " + *preprocessor);
  std::ifstream in(program, std::ios::binary);
  std::ostringstream text;
  text << preprocessor->substr(kPrepend.size()) << in.rdbuf();
  auto dir = temp_dir_.empty() ? std::filesystem::temp_directory_path() / ("polydbg-" + std::to_string(::getpid()))
                               : temp_dir_;
  std::filesystem::create_directories(dir);
  auto copy = dir / (std::to_string(++prepared_) + "_" + std::filesystem::path(program).filename().string());
  std::ofstream(copy, std::ios::binary) << text.str();
  const auto copy_path = canonical_path(copy.string());
  aliases_[copy_path] = program;
  return copy_path;
}

json DebugAgent::set_breakpoints(const std::string& path, const json& breakpoints) {
  ensure_live();
  std::string adapter_path = path;
  for (const auto& [copy, original] : aliases_) {
    if (original == path) adapter_path = copy;
  }
  const auto response = request(
      "setBreakpoints",
      {{"source", {{"path", adapter_path}, {"name", std::filesystem::path(path).filename().string()}}},
       {"breakpoints", breakpoints}});
  if (!response.success) throw CapabilityError("setBreakpoints");
  installed_[path] = breakpoints;
  return response.payload.is_object() ? response.payload.value("breakpoints", json::array()) : json::array();
}

void DebugAgent::sync_breakpoints(const BreakpointTable& wanted, BreakpointTable& installed_now) {
  for (const auto& [path, list] : wanted) {
    auto it = installed_.find(path);
    if (it != installed_.end() && it->second == list) continue;
    installed_now[path] = set_breakpoints(path, list);
  }
}

BreakpointTable DebugAgent::execute(const std::string& program, const BreakpointTable& breakpoints, EntryMode mode) {
  if (!std::filesystem::is_regular_file(program)) throw InputError(language() + ": program not found: " + program);
  ensure_live();
  if (state_.phase != AgentPhase::Standby && state_.phase != AgentPhase::PausedAtPolyglotCall) {
    throw PreconditionError(language() + ": execute needs Standby or PausedAtPolyglotCall, agent is " +
                            std::string(to_string(state_.phase)));
  }
  const std::string path = canonical_path(program);
  const std::string target = prepare_program(path);
  BreakpointTable installed_now;
  sync_breakpoints(breakpoints, installed_now);
  write_variable(config_.runner.var_input, render_value(config_.values, ValueEnvelope::make_str(target)));
  send_resume(mode == EntryMode::StepIn ? "stepIn" : "continue");
  ++state_.depth;
  state_.phase = AgentPhase::Running;
  state_.call.reset();
  PDBG_DEBUG("agent={} execute program={} depth={}", language(), path, state_.depth);
  return installed_now;
}

void DebugAgent::set_result(const ValueEnvelope& value, const std::string& resume_command) {
  ensure_live();
  if (state_.phase != AgentPhase::PausedAtPolyglotCall) {
    throw PreconditionError(language() + ": set_result needs PausedAtPolyglotCall, agent is " +
                            std::string(to_string(state_.phase)));
  }
  const std::string literal = render_value(config_.values, value);
  write_variable(config_.runner.var_ret, literal);
  write_variable(config_.runner.var_input, render_value(config_.values, ValueEnvelope::make_str("")));
  send_resume(resume_command);
  if (!open_calls_.empty()) open_calls_.pop_back();
  state_.phase = AgentPhase::Running;
  state_.call.reset();
}

ValueEnvelope DebugAgent::read_result() {
  ensure_live();
  return parse_value(config_.values, evaluate(config_.runner.var_result));
}

std::vector<json> DebugAgent::filtered_stacktrace(std::optional<std::int64_t> thread) {
  ensure_live();
  std::vector<json> out;
  for (auto frame : stack_trace(thread.value_or(thread_id_))) {
    const auto loc = frame_location(frame);
    if (is_runner_file(loc.path)) continue;
    if (!loc.path.empty()) frame["source"]["path"] = loc.path;
    out.push_back(std::move(frame));
  }
  return out;
}

std::vector<std::vector<json>> DebugAgent::stack_segments() {
  ensure_live();
  std::vector<std::vector<json>> segments;
  std::vector<json> current;
  for (auto frame : stack_trace(thread_id_)) {
    const auto loc = frame_location(frame);
    if (is_runner_file(loc.path)) {
      if (!current.empty()) segments.push_back(std::move(current));
      current.clear();
      continue;
    }
    if (!loc.path.empty()) frame["source"]["path"] = loc.path;
    current.push_back(std::move(frame));
  }
  if (!current.empty()) segments.push_back(std::move(current));
  return segments;
}

DapMessage DebugAgent::forward(const DapMessage& request_msg) {
  if (!request_msg.is_request()) throw ProtocolError("forward needs a request");
  if (request_msg.command == "execute" || request_msg.command == "setResult") {
    throw PreconditionError("'" + request_msg.command + "' has a dedicated operation");
  }
  ensure_live();
  auto response = request(request_msg.command, request_msg.payload);
  if (response.success && is_resume(request_msg.command)) {
    top_frame_id_.reset();
    scope_reference_.reset();
    state_.phase = AgentPhase::Running;
  }
  return response;
}

void DebugAgent::shutdown() {
  if (state_.phase == AgentPhase::Terminated && !connection_) return;
  if (connection_) {
    if (!dead_ && !connection_->closed()) {
      try {
        const auto seq = send_request("disconnect", {{"terminateDebuggee", true}});
        await_response(seq, "disconnect", Clock::now() + defaults_.shutdown_grace);
      } catch (const Error& e) {
        PDBG_DEBUG("agent={} disconnect: {}", language(), e.what());
      }
    }
    const int status = process_.terminate(defaults_.shutdown_grace);
    PDBG_INFO("agent={} terminated status={}", language(), status);
    connection_->close();
    connection_.reset();
  }
  if (stderr_reader_.joinable()) stderr_reader_.join();
  dead_ = true;
  if (dead_reason_.empty()) dead_reason_ = "shut down";
  open_calls_.clear();
  state_.phase = AgentPhase::Terminated;
  state_.reason = dead_reason_;
}

}  // namespace polydbg
