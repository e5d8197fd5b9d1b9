#include "polydbg/session.hpp"

#include <algorithm>
#include <fstream>

#include <unistd.h>

#include "polydbg/errors.hpp"
#include "polydbg/log.hpp"

namespace polydbg {

namespace {

const std::set<std::string> kStepCommands = {"next", "stepIn", "stepOut", "stepBack"};
const std::set<std::string> kResumeRequests = {"continue", "next", "stepIn", "stepOut", "stepBack", "reverseContinue"};
const std::set<std::string> kSuppressedEvents = {"initialized", "continued", "thread", "process", "capabilities"};
constexpr int kMaxRunnerSteps = 10'000;

std::string extension_of(const std::string& token) {
  if (token.find('/') == std::string::npos && token.find('.') == std::string::npos) return "." + token;
  return std::filesystem::path(token).extension().string();
}

std::atomic<int> session_counter{0};

}  // namespace

std::string_view to_string(SessionPhase phase) {
  switch (phase) {
    case SessionPhase::Idle: return "Idle";
    case SessionPhase::Running: return "Running";
    case SessionPhase::Stopped: return "Stopped";
    case SessionPhase::Terminated: return "Terminated";
  }
  return "?";
}

std::int64_t Session::IdMap::fresh() {
  while (forward_.count(next_) != 0) ++next_;
  return next_++;
}

std::int64_t Session::IdMap::map(DebugAgent* agent, std::int64_t original) {
  if (auto it = reverse_.find({agent, original}); it != reverse_.end()) return it->second;
  const std::int64_t id = (original > 0 && forward_.count(original) == 0) ? original : fresh();
  forward_[id] = RemoteRef{agent, original};
  reverse_[{agent, original}] = id;
  return id;
}

std::int64_t Session::IdMap::synthetic() {
  const auto id = fresh();
  forward_[id] = std::nullopt;
  return id;
}

const std::optional<Session::RemoteRef>* Session::IdMap::find(std::int64_t id) const {
  auto it = forward_.find(id);
  return it == forward_.end() ? nullptr : &it->second;
}

void Session::IdMap::clear() {
  forward_.clear();
  reverse_.clear();
  next_ = 1'000'000'000;
}

Session::Session(SessionConfig config, std::shared_ptr<Mailbox> mailbox, ClientSink sink)
    : config_(std::move(config)), mailbox_(std::move(mailbox)), sink_(std::move(sink)) {
  auto languages = config_.languages;
  config_.languages.clear();
  for (auto& lang : languages) register_agent(std::move(lang));
}

Session::~Session() {
  shutdown_agents();
  if (!temp_dir_.empty()) {
    std::error_code ec;
    std::filesystem::remove_all(temp_dir_, ec);
  }
}

void Session::register_agent(AgentConfig config) {
  config.validate();
  std::lock_guard lock(registry_mutex_);
  for (const auto& entry : entries_) {
    if (entry->config.language_id == config.language_id) {
      throw RegistrationError("language '" + config.language_id + "' is already registered");
    }
  }
  for (const auto& ext : config.file_extensions) {
    if (auto it = extension_index_.find(ext); it != extension_index_.end()) {
      throw RegistrationError("extension " + ext + " is already claimed by '" + it->second + "'");
    }
  }
  for (const auto& ext : config.file_extensions) extension_index_[ext] = config.language_id;
  auto entry = std::make_unique<Entry>();
  entry->config = config;
  entry->agent = std::make_unique<DebugAgent>(std::move(config), config_.defaults, mailbox_, next_channel_++);
  PDBG_INFO("registered language={} channel={}", entry->config.language_id, entry->agent->channel());
  entries_.push_back(std::move(entry));
}

Session::Entry* Session::find_entry(const std::string& path_or_language, std::string* token) {
  std::lock_guard lock(registry_mutex_);
  for (auto& entry : entries_) {
    if (entry->config.language_id == path_or_language) return entry.get();
  }
  const std::string ext = extension_of(path_or_language);
  if (token) *token = ext.empty() ? path_or_language : ext.substr(1);
  auto it = extension_index_.find(ext);
  if (it == extension_index_.end()) return nullptr;
  for (auto& entry : entries_) {
    if (entry->config.language_id == it->second) return entry.get();
  }
  return nullptr;
}

DebugAgent& Session::resolve_agent(const std::string& path_or_language) {
  std::string token;
  Entry* entry = find_entry(path_or_language, &token);
  if (!entry) throw UnknownLanguage(token);
  DebugAgent& agent = *entry->agent;
  if (!agent.started()) {
    agent.set_transcript(transcript_);
    agent.start();
  }
  return agent;
}

DebugAgent* Session::agent(const std::string& language) {
  std::lock_guard lock(registry_mutex_);
  for (auto& entry : entries_) {
    if (entry->config.language_id == language) return entry->agent.get();
  }
  return nullptr;
}

DebugAgent* Session::agent_by_channel(int channel) {
  std::lock_guard lock(registry_mutex_);
  for (auto& entry : entries_) {
    if (entry->agent->channel() == channel) return entry->agent.get();
  }
  return nullptr;
}

std::vector<DebugAgent*> Session::all_agents() {
  std::lock_guard lock(registry_mutex_);
  std::vector<DebugAgent*> out;
  for (auto& entry : entries_) out.push_back(entry->agent.get());
  return out;
}

std::vector<std::string> Session::languages() const {
  std::lock_guard lock(registry_mutex_);
  std::vector<std::string> out;
  for (const auto& entry : entries_) out.push_back(entry->config.language_id);
  return out;
}

SessionStats Session::stats() const {
  std::lock_guard lock(stats_mutex_);
  return stats_;
}

void Session::respond(const DapMessage& req, json body) { sink_(DapMessage::response_to(req, std::move(body))); }

void Session::respond_error(const DapMessage& req, const std::string& message) {
  sink_(DapMessage::error_response_to(req, message));
}

void Session::emit(const std::string& event, json body) { sink_(DapMessage::event(event, std::move(body))); }

void Session::stop() { mailbox_->push({kControlChannel, std::nullopt, "stop requested"}); }

void Session::run() {
  if (config_.defaults.eager_start) {
    for (auto* agent : all_agents()) {
      try {
        agent->set_transcript(transcript_);
        agent->start();
      } catch (const Error& e) {
        PDBG_WARN("eager start of {} failed: {}", agent->language(), e.what());
      }
    }
  }
  while (!done_) {
    auto item = mailbox_->take_next(Clock::now() + std::chrono::hours(1));
    if (!item) continue;
    if (item->channel == kControlChannel) break;
    dispatch(std::move(*item));
  }
  shutdown_agents();
}

void Session::dispatch(Inbound item) {
  if (item.channel == kClientChannel) {
    if (item.closed()) {
      PDBG_INFO("client closed: {}", item.detail);
      done_ = true;
      return;
    }
    const DapMessage& req = *item.message;
    if (!req.is_request()) {
      PDBG_DEBUG("ignoring client {}", summarize(req));
      return;
    }
    try {
      handle_client(req);
    } catch (const Error& e) {
      PDBG_WARN("client request {} failed: {}", req.command, e.what());
      respond_error(req, e.what());
      if (active_ && active_->state().phase == AgentPhase::Terminated && phase_ != SessionPhase::Terminated) {
        fail_session(std::string("debug agent failed: ") + e.what());
      }
    }
    return;
  }
  DebugAgent* agent = agent_by_channel(item.channel);
  if (!agent) return;
  if (item.closed()) {
    handle_agent_closed(*agent, item.detail);
    return;
  }
  agent->note_inbound(*item.message);
  try {
    handle_agent_message(*agent, *item.message);
  } catch (const Error& e) {
    PDBG_ERROR("agent={} handling {} failed: {}", agent->language(), summarize(*item.message), e.what());
    fail_session(agent->language() + ": " + e.what());
  }
}

void Session::handle_client(const DapMessage& req) {
  const auto& cmd = req.command;
  if (cmd == "initialize") {
    respond(req, {{"supportsConfigurationDoneRequest", true},
                  {"supportsSetVariable", true},
                  {"supportsSetExpression", true},
                  {"supportsEvaluateForHovers", true},
                  {"supportsTerminateRequest", true}});
    emit("initialized");
  } else if (cmd == "launch") {
    on_launch(req);
  } else if (cmd == "attach") {
    respond_error(req, "attach is not supported; use launch");
  } else if (cmd == "configurationDone") {
    respond(req);
    configuration_done_ = true;
    if (entry_ && phase_ == SessionPhase::Idle) begin_session();
  } else if (cmd == "setBreakpoints") {
    on_set_breakpoints(req);
  } else if (cmd == "setExceptionBreakpoints" || cmd == "setFunctionBreakpoints") {
    json body = json::object();
    for (auto* agent : all_agents()) {
      if (agent->started() && agent->state().phase != AgentPhase::Terminated) body = agent->forward(req).payload;
    }
    respond(req, body.is_object() ? body : json::object());
  } else if (cmd == "disconnect" || cmd == "terminate") {
    on_disconnect(req);
  } else if (kResumeRequests.count(cmd) != 0 || cmd == "pause") {
    on_resume(req);
  } else if (cmd == "threads") {
    on_threads(req);
  } else if (cmd == "stackTrace") {
    on_stack_trace(req);
  } else if (cmd == "scopes" || cmd == "evaluate" || cmd == "setExpression" || cmd == "restartFrame" ||
             cmd == "gotoTargets" || cmd == "completions") {
    on_frame_request(req);
  } else if (cmd == "variables" || cmd == "setVariable") {
    on_variables_request(req);
  } else {
    if (!active_) {
      respond_error(req, "no active debug agent for '" + cmd + "'");
      return;
    }
    forward_to(*active_, req, req.payload);
  }
}

void Session::forward_to(DebugAgent& agent, const DapMessage& req, json arguments) {
  if (arguments.is_object() && arguments.contains("threadId")) arguments["threadId"] = agent.thread_id();
  auto forwarded = req;
  forwarded.payload = std::move(arguments);
  auto response = agent.forward(forwarded);
  auto reply = DapMessage::response_to(req, response.payload);
  reply.success = response.success;
  reply.error_text = response.error_text;
  sink_(std::move(reply));
}

void Session::on_launch(const DapMessage& req) {
  if (phase_ != SessionPhase::Idle || entry_) {
    respond_error(req, "session already launched");
    return;
  }
  const json args = req.payload.is_object() ? req.payload : json::object();
  const std::string program = args.value("program", std::string());
  if (program.empty()) {
    respond_error(req, "launch needs a 'program'");
    return;
  }
  if (!std::filesystem::is_regular_file(program)) {
    respond_error(req, InputError("entry file not found: " + program).what());
    return;
  }
  std::string token;
  if (!find_entry(program, &token)) {
    respond_error(req, UnknownLanguage(token).what());
    return;
  }
  if (args.value("stopOnEntry", false)) last_resume_ = "stepIn";
  entry_ = canonical_path(program);
  respond(req);
  if (configuration_done_) begin_session();
}

void Session::begin_session() {
  try {
    DebugAgent& agent = resolve_agent(*entry_);
    active_ = &agent;
    phase_ = SessionPhase::Running;
    announce_breakpoints(agent.execute(*entry_, share_for(agent), entry_mode()));
    note_agent_depth(agent);
  } catch (const Error& e) {
    fail_session(e.what());
  }
}

void Session::on_set_breakpoints(const DapMessage& req) {
  const json args = req.payload.is_object() ? req.payload : json::object();
  const std::string raw_path = args.value("source", json::object()).value("path", std::string());
  if (raw_path.empty()) {
    respond_error(req, "setBreakpoints needs source.path");
    return;
  }
  const std::string path = canonical_path(raw_path);
  json breakpoints = args.value("breakpoints", json::array());
  if (!breakpoints.is_array()) breakpoints = json::array();
  client_breakpoints_[path] = breakpoints;

  Entry* owner = find_entry(path);
  if (!owner) {
    json list = json::array();
    for (const auto& bp : breakpoints) {
      list.push_back({{"verified", false}, {"line", bp.value("line", 0)}, {"message", "no debug agent for this file type"}});
    }
    respond(req, {{"breakpoints", list}});
    return;
  }
  DebugAgent& agent = *owner->agent;
  if (agent.started() && agent.state().phase != AgentPhase::Terminated) {
    respond(req, {{"breakpoints", agent.set_breakpoints(path, breakpoints)}});
    return;
  }
  json list = json::array();
  auto& ids = pending_breakpoint_ids_[path];
  ids.clear();
  for (const auto& bp : breakpoints) {
    ids.push_back(next_pending_id_);
    list.push_back({{"id", next_pending_id_++},
                    {"verified", false},
                    {"line", bp.value("line", 0)},
                    {"message", "pending until the " + agent.language() + " agent starts"}});
  }
  respond(req, {{"breakpoints", list}});
}

void Session::announce_breakpoints(const BreakpointTable& installed) {
  for (const auto& [path, list] : installed) {
    auto it = pending_breakpoint_ids_.find(path);
    if (it == pending_breakpoint_ids_.end()) continue;
    for (std::size_t i = 0; i < list.size() && i < it->second.size(); ++i) {
      json bp = list[i];
      bp["id"] = it->second[i];
      emit("breakpoint", {{"reason", "changed"}, {"breakpoint", bp}});
    }
    pending_breakpoint_ids_.erase(it);
  }
}

BreakpointTable Session::share_for(const DebugAgent& agent) const {
  BreakpointTable share;
  for (const auto& [path, list] : client_breakpoints_) {
    if (agent.config().claims_extension(std::filesystem::path(path).extension().string())) share[path] = list;
  }
  return share;
}

void Session::on_resume(const DapMessage& req) {
  if (!active_ || (phase_ != SessionPhase::Stopped && req.command != "pause")) {
    respond_error(req, "'" + req.command + "' needs a stopped session");
    return;
  }
  if (req.command != "pause") {
    last_resume_ = req.command;
    runner_steps_ = 0;
  }
  forward_to(*active_, req, req.payload.is_object() ? req.payload : json::object());
  if (req.command != "pause") {
    frames_.clear();
    variables_.clear();
    phase_ = SessionPhase::Running;
  }
}

void Session::on_threads(const DapMessage& req) {
  std::string name = "main";
  if (active_ && active_->started() && active_->state().phase != AgentPhase::Terminated) {
    auto response = active_->forward(DapMessage::request("threads", json::object()));
    if (response.success && response.payload.is_object()) {
      for (const auto& thread : response.payload.value("threads", json::array())) {
        if (thread.value("id", std::int64_t{-1}) == active_->thread_id()) name = thread.value("name", name);
      }
    }
  }
  respond(req, {{"threads", json::array({{{"id", kClientThreadId}, {"name", name}}})}});
}

void Session::on_stack_trace(const DapMessage& req) {
  std::vector<json> frames;
  if (phase_ == SessionPhase::Stopped) frames = composed_stacktrace();
  const json args = req.payload.is_object() ? req.payload : json::object();
  const auto start = static_cast<std::size_t>(std::max(0, args.value("startFrame", 0)));
  const auto levels = static_cast<std::size_t>(std::max(0, args.value("levels", 0)));
  json list = json::array();
  for (std::size_t i = start; i < frames.size() && (levels == 0 || list.size() < levels); ++i) list.push_back(frames[i]);
  respond(req, {{"stackFrames", list}, {"totalFrames", frames.size()}});
}

std::vector<json> Session::composed_stacktrace() {
  std::vector<json> out;
  if (!active_) return out;
  std::map<DebugAgent*, std::vector<std::vector<json>>> segments;
  std::map<DebugAgent*, std::size_t> cursor;
  const auto append_segment = [&](DebugAgent* agent) {
    if (!agent) return;
    try {
      if (segments.count(agent) == 0) segments[agent] = agent->stack_segments();
    } catch (const Error& e) {
      segments[agent] = {};
      out.push_back({{"id", frames_.synthetic()},
                     {"name", "<" + agent->language() + " stack unavailable: " + e.what() + ">"},
                     {"line", 0},
                     {"column", 0},
                     {"presentationHint", "label"}});
      return;
    }
    const auto index = cursor[agent]++;
    if (index >= segments[agent].size()) return;
    for (auto frame : segments[agent][index]) {
      frame["id"] = frames_.map(agent, frame.value("id", std::int64_t{0}));
      out.push_back(std::move(frame));
    }
  };
  append_segment(active_);
  for (auto it = call_stack_.rbegin(); it != call_stack_.rend(); ++it) {
    const auto& site = it->call_site;
    json boundary = {{"id", frames_.synthetic()},
                     {"name", "polyglotEval(" + site.target_language + ")"},
                     {"line", site.caller_location.line},
                     {"column", 1},
                     {"presentationHint", "label"}};
    if (!site.caller_location.path.empty()) {
      boundary["source"] = {{"name", std::filesystem::path(site.caller_location.path).filename().string()},
                            {"path", site.caller_location.path}};
    }
    out.push_back(std::move(boundary));
    append_segment(agent_by_channel(it->caller_agent));
  }
  return out;
}

void Session::remap_variables_reference(DebugAgent& agent, json& object) {
  if (!object.is_object()) return;
  auto it = object.find("variablesReference");
  if (it != object.end() && it->is_number_integer() && it->get<std::int64_t>() > 0) {
    *it = variables_.map(&agent, it->get<std::int64_t>());
  }
}

void Session::on_frame_request(const DapMessage& req) {
  json args = req.payload.is_object() ? req.payload : json::object();
  DebugAgent* target = active_;
  if (args.contains("frameId")) {
    const auto id = args.value("frameId", std::int64_t{0});
    const auto* ref = frames_.find(id);
    if (!ref) throw InvalidFrame("unknown frame id " + std::to_string(id));
    if (!ref->has_value()) {
      if (req.command == "scopes") {
        respond(req, {{"scopes", json::array()}});
      } else {
        respond_error(req, "frame " + std::to_string(id) + " is a polyglot boundary");
      }
      return;
    }
    target = (*ref)->agent;
    args["frameId"] = (*ref)->id;
  }
  if (!target) {
    respond_error(req, "no active debug agent for '" + req.command + "'");
    return;
  }
  auto forwarded = req;
  forwarded.payload = args;
  auto response = target->forward(forwarded);
  json body = response.payload;
  if (body.is_object()) {
    remap_variables_reference(*target, body);
    if (body.contains("scopes") && body["scopes"].is_array()) {
      for (auto& scope : body["scopes"]) remap_variables_reference(*target, scope);
    }
  }
  auto reply = DapMessage::response_to(req, body);
  reply.success = response.success;
  reply.error_text = response.error_text;
  sink_(std::move(reply));
}

void Session::on_variables_request(const DapMessage& req) {
  json args = req.payload.is_object() ? req.payload : json::object();
  const auto id = args.value("variablesReference", std::int64_t{0});
  const auto* ref = variables_.find(id);
  if (!ref || !ref->has_value()) throw InvalidFrame("unknown variablesReference " + std::to_string(id));
  DebugAgent* target = (*ref)->agent;
  args["variablesReference"] = (*ref)->id;
  auto forwarded = req;
  forwarded.payload = args;
  auto response = target->forward(forwarded);
  json body = response.payload;
  if (body.is_object()) {
    remap_variables_reference(*target, body);
    if (body.contains("variables") && body["variables"].is_array()) {
      for (auto& var : body["variables"]) remap_variables_reference(*target, var);
    }
  }
  auto reply = DapMessage::response_to(req, body);
  reply.success = response.success;
  reply.error_text = response.error_text;
  sink_(std::move(reply));
}

void Session::on_disconnect(const DapMessage& req) {
  shutdown_agents();
  if (!terminated_sent_ && req.command == "terminate") {
    emit("terminated");
    terminated_sent_ = true;
  }
  phase_ = SessionPhase::Terminated;
  respond(req);
  if (req.command == "disconnect") done_ = true;
}

void Session::handle_agent_closed(DebugAgent& agent, const std::string& detail) {
  agent.mark_dead(detail);
  if (phase_ == SessionPhase::Terminated) return;
  const bool involved = &agent == active_ || std::any_of(call_stack_.begin(), call_stack_.end(), [&](const auto& f) {
                          return f.caller_agent == agent.channel();
                        });
  if (involved && phase_ != SessionPhase::Idle) fail_session("debug adapter for " + agent.language() + " closed: " + detail);
}

void Session::handle_agent_message(DebugAgent& agent, const DapMessage& msg) {
  if (msg.is_response()) {
    PDBG_DEBUG("agent={} late response to request_seq={}", agent.language(), msg.request_seq.value_or(0));
    return;
  }
  if (msg.is_request()) {
    PDBG_DEBUG("agent={} reverse request {} ignored", agent.language(), msg.command);
    return;
  }
  if (msg.command == "stopped") {
    if (&agent != active_ || phase_ != SessionPhase::Running) {
      PDBG_WARN("agent={} stopped while not the running agent; ignored", agent.language());
      return;
    }
    on_agent_stop(agent, agent.classify_stop(msg));
    return;
  }
  if (msg.command == "exited" || msg.command == "terminated") {
    if (agent.state().phase == AgentPhase::Terminated || phase_ == SessionPhase::Terminated) return;
    const bool involved = &agent == active_ || std::any_of(call_stack_.begin(), call_stack_.end(), [&](const auto& f) {
                            return f.caller_agent == agent.channel();
                          });
    if (involved && phase_ != SessionPhase::Idle) on_agent_stop(agent, agent.classify_stop(msg));
    return;
  }
  if (kSuppressedEvents.count(msg.command) != 0) return;
  emit(msg.command, msg.payload);
}

void Session::on_agent_stop(DebugAgent& agent, const StopKind& kind) {
  PDBG_DEBUG("agent={} stop={} at {}:{}", agent.language(), to_string(kind.type), kind.location.path, kind.location.line);
  switch (kind.type) {
    case StopType::PolyglotCall:
      begin_call(agent, kind);
      return;
    case StopType::StandbyOuter:
    case StopType::StandbyInner:
      finish_execute(agent);
      return;
    case StopType::Step:
      if (agent.is_runner_location(kind.location)) {
        const bool step_in = last_resume_ == "stepIn" && ++runner_steps_ < kMaxRunnerSteps;
        agent.resume(step_in ? "stepIn" : "continue");
        return;
      }
      surface_stop(kind);
      return;
    case StopType::UserBreakpoint:
    case StopType::Exception:
      surface_stop(kind);
      return;
    case StopType::Exited:
      fail_session("debug adapter for " + agent.language() + " exited with code " + std::to_string(kind.exit_code));
      return;
  }
}

std::string Session::caller_resume_command() const {
  return kStepCommands.count(last_resume_) != 0 ? "stepOut" : "continue";
}

EntryMode Session::entry_mode() const { return last_resume_ == "stepIn" ? EntryMode::StepIn : EntryMode::Continue; }

void Session::note_depth() {
  depth_ = call_stack_.size();
  std::lock_guard lock(stats_mutex_);
  stats_.depth_trace.push_back(call_stack_.size());
  stats_.max_call_depth = std::max(stats_.max_call_depth, call_stack_.size());
}

void Session::note_agent_depth(const DebugAgent& agent) {
  std::lock_guard lock(stats_mutex_);
  auto& seen = stats_.max_agent_depth[agent.language()];
  seen = std::max(seen, agent.state().depth);
}

void Session::begin_call(DebugAgent& caller, const StopKind& kind) {
  const auto resume = caller_resume_command();
  const auto abort_call = [&](const std::string& message) {
    PDBG_INFO("polyglot call from {} aborted: {}", caller.language(), message);
    caller.set_result(ValueEnvelope::make_error(message), resume);
  };
  if (!kind.call) {
    abort_call(kind.call_error.empty() ? "invalid polyglot call" : kind.call_error);
    return;
  }
  const PolyglotCallSite& site = *kind.call;
  if (static_cast<int>(call_stack_.size()) >= config_.defaults.max_call_depth) {
    abort_call("maximum polyglot call depth (" + std::to_string(config_.defaults.max_call_depth) + ") exceeded");
    return;
  }
  DebugAgent* callee = nullptr;
  std::string program;
  try {
    callee = &resolve_agent(site.target_language);
    program = resolve_target(site, *callee);
  } catch (const Error& e) {
    abort_call(e.what());
    return;
  }

  call_stack_.push_back({caller.language(), caller.channel(), callee->language(), site, caller.state().depth});
  note_depth();
  {
    std::lock_guard lock(stats_mutex_);
    stats_.call_log.push_back("call " + caller.language() + "->" + callee->language());
  }
  try {
    const auto installed = callee->execute(program, share_for(*callee), entry_mode());
    active_ = callee;
    note_agent_depth(*callee);
    announce_breakpoints(installed);
  } catch (const InputError& e) {
    call_stack_.pop_back();
    note_depth();
    abort_call(e.what());
  } catch (const PreconditionError& e) {
    call_stack_.pop_back();
    note_depth();
    abort_call(e.what());
  }
}

std::string Session::resolve_target(const PolyglotCallSite& site, const DebugAgent& callee) {
  const std::filesystem::path code(site.target_code);
  std::vector<std::filesystem::path> candidates;
  if (code.is_absolute()) {
    candidates.push_back(code);
  } else {
    if (!site.caller_location.path.empty()) {
      candidates.push_back(std::filesystem::path(site.caller_location.path).parent_path() / code);
    }
    candidates.push_back(std::filesystem::current_path() / code);
  }
  std::error_code ec;
  for (const auto& candidate : candidates) {
    if (std::filesystem::is_regular_file(candidate, ec)) return canonical_path(candidate.string());
  }
  if (temp_dir_.empty()) {
    temp_dir_ = std::filesystem::temp_directory_path() /
                ("polydbg-" + std::to_string(::getpid()) + "-" + std::to_string(session_counter++));
    std::filesystem::create_directories(temp_dir_);
  }
  const auto file = temp_dir_ / ("inline_" + std::to_string(++inline_files_) + callee.config().file_extensions.front());
  std::ofstream(file, std::ios::binary) << site.target_code;
  return canonical_path(file.string());
}

void Session::finish_execute(DebugAgent& agent) {
  ValueEnvelope value;
  try {
    value = agent.read_result();
  } catch (const ProtocolError& e) {
    value = ValueEnvelope::make_error(e.what());
  }
  if (call_stack_.empty()) {
    finish_session(value);
    return;
  }
  const PolyglotCallFrame frame = call_stack_.back();
  call_stack_.pop_back();
  note_depth();
  DebugAgent* caller = agent_by_channel(frame.caller_agent);
  if (!caller) throw ProtocolError("caller agent vanished");
  {
    std::lock_guard lock(stats_mutex_);
    stats_.call_log.push_back("return " + agent.language() + "->" + caller->language());
  }
  active_ = caller;
  ValueEnvelope transfer = value;
  try {
    render_value(caller->config().values, value);
  } catch (const LossyTransfer& e) {
    transfer = ValueEnvelope::make_error(e.what());
  }
  caller->set_result(transfer, caller_resume_command());
}

void Session::finish_session(const ValueEnvelope& value) {
  {
    std::lock_guard lock(stats_mutex_);
    stats_.final_value = value;
  }
  emit("output", {{"category", "console"},
                  {"output", value.lexical + "\n"},
                  {"data", {{"polydbgFinalValue", {{"kind", std::string(to_string(value.kind))}, {"lexical", value.lexical}}}}}});
  emit("exited", {{"exitCode", value.kind == ValueKind::Error ? 1 : 0}});
  emit("terminated");
  terminated_sent_ = true;
  phase_ = SessionPhase::Terminated;
}

void Session::fail_session(const std::string& message) {
  if (phase_ == SessionPhase::Terminated) return;
  PDBG_ERROR("session failed: {}", message);
  {
    std::lock_guard lock(stats_mutex_);
    stats_.failure = message;
  }
  emit("output", {{"category", "stderr"}, {"output", message + "\n"}, {"data", {{"polydbgError", message}}}});
  emit("exited", {{"exitCode", 2}});
  emit("terminated");
  terminated_sent_ = true;
  phase_ = SessionPhase::Terminated;
}

void Session::surface_stop(const StopKind& kind) {
  phase_ = SessionPhase::Stopped;
  frames_.clear();
  variables_.clear();
  json body = kind.event_body;
  body["threadId"] = kClientThreadId;
  emit("stopped", body);
}

void Session::shutdown_agents() {
  for (auto* agent : all_agents()) agent->shutdown();
}

}  // namespace polydbg
