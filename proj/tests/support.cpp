#include "support.hpp"

#include <cstdlib>

#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include "polydbg/errors.hpp"

namespace testing {

std::filesystem::path mock_path() { return POLYDBG_MOCK_PATH; }
std::filesystem::path polydbg_path() { return POLYDBG_CLI_PATH; }
std::filesystem::path scenario_dir() { return POLYDBG_SCENARIO_DIR; }
std::filesystem::path scenario(const std::string& name) { return scenario_dir() / name; }
std::string poly_file(const std::string& name) { return polydbg::canonical_path((scenario_dir() / "poly" / name).string()); }

TempDir::TempDir() {
  std::string pattern = (std::filesystem::temp_directory_path() / "polydbg-test-XXXXXX").string();
  if (::mkdtemp(pattern.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
  path_ = pattern;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

json langx_values() {
  return json::parse(R"json({
    "rules": [
      {"match": "^-?[0-9]+$", "kind": "Int", "normalize": "integer"},
      {"match": "^-?[0-9]*\\.[0-9]*(?:[eE][-+]?[0-9]+)?$", "kind": "Float", "normalize": "float"},
      {"match": "^-?[0-9]+[eE][-+]?[0-9]+$", "kind": "Float", "normalize": "float"},
      {"match": "^\\+inf$", "kind": "Float", "normalize": "constant", "value": "inf"},
      {"match": "^-inf$", "kind": "Float", "normalize": "constant", "value": "-inf"},
      {"match": "^nan$", "kind": "Float", "normalize": "constant", "value": "nan"},
      {"match": "^yes$", "kind": "Bool", "normalize": "constant", "value": "true"},
      {"match": "^no$", "kind": "Bool", "normalize": "constant", "value": "false"},
      {"match": "^nil$", "kind": "Null", "normalize": "constant"},
      {"match": "^'[\\s\\S]*'$", "kind": "Error", "normalize": "tagged_error", "prefix": "!err:"},
      {"match": "^'[\\s\\S]*'$", "kind": "Str", "normalize": "quoted"}
    ],
    "render": {"true": "yes", "false": "no", "null": "nil", "inf": "+inf", "-inf": "-inf", "nan": "nan",
               "quote": "'", "escape": "doubled", "error_prefix": "!err:"}
  })json");
}

json mock_language(const std::string& language, const std::string& scenario_file,
                   const std::filesystem::path& transcript) {
  std::string ext;
  json values = language;
  if (language == "python") {
    ext = ".py";
  } else if (language == "javascript") {
    ext = ".js";
  } else if (language == "langX") {
    ext = ".lx";
    values = langx_values();
  } else {
    throw std::invalid_argument("no mock layout for " + language);
  }
  return {{"language_id", language},
          {"extensions", {ext}},
          {"adapter_command",
           {mock_path().string(), "--scenario", scenario(scenario_file).string(), "--transcript", transcript.string()}},
          {"runner",
           {{"path", (scenario_dir() / ("runner" + ext)).string()},
            {"polyglot_bp", 2},
            {"inner_standby_bp", 6},
            {"outer_standby_bp", 12}}},
          {"values", values}};
}

json session_document(const std::vector<json>& languages, json defaults) {
  json d = {{"timeout_s", 5}, {"startup_timeout_s", 10}, {"shutdown_grace_s", 1}};
  for (auto& [key, value] : defaults.items()) d[key] = value;
  return {{"defaults", d}, {"languages", languages}};
}

polydbg::SessionConfig session_config(const std::vector<json>& languages, json defaults) {
  return polydbg::parse_session_config(session_document(languages, std::move(defaults)), scenario_dir());
}

ScriptedClient::ScriptedClient(polydbg::Connection::Fds fds, std::string name)
    : mailbox_(std::make_shared<polydbg::Mailbox>()),
      connection_(std::make_unique<polydbg::Connection>(fds, mailbox_, polydbg::kClientChannel, std::move(name))) {
  connection_->on_sent([this](const DapMessage& msg) { sent_.push_back(msg); });
}

ScriptedClient::~ScriptedClient() { close(); }

void ScriptedClient::close() {
  if (connection_) connection_->close();
}

std::optional<DapMessage> ScriptedClient::take(const std::function<bool(const DapMessage&)>& pred,
                                               std::chrono::milliseconds timeout) {
  for (auto it = pending_.begin(); it != pending_.end(); ++it) {
    if (pred(*it)) {
      DapMessage msg = *it;
      pending_.erase(it);
      return msg;
    }
  }
  const auto deadline = polydbg::Clock::now() + timeout;
  while (!closed_) {
    auto item = mailbox_->take_next(deadline);
    if (!item) return std::nullopt;
    if (item->closed()) {
      closed_ = true;
      break;
    }
    received_.push_back(*item->message);
    if (pred(*item->message)) return *item->message;
    pending_.push_back(*item->message);
  }
  return std::nullopt;
}

DapMessage ScriptedClient::request(const std::string& command, json arguments, std::chrono::milliseconds timeout) {
  const auto seq = connection_->send(DapMessage::request(command, std::move(arguments)));
  auto response = take([&](const DapMessage& m) { return m.is_response() && m.request_seq == seq; }, timeout);
  if (!response) throw std::runtime_error("no response to " + command);
  return *response;
}

std::optional<DapMessage> ScriptedClient::wait_event(const std::string& name, std::chrono::milliseconds timeout) {
  return take([&](const DapMessage& m) { return m.is_event() && m.command == name; }, timeout);
}

std::optional<DapMessage> ScriptedClient::take_event(const std::set<std::string>& names,
                                                    std::chrono::milliseconds timeout) {
  return take([&](const DapMessage& m) { return m.is_event() && names.count(m.command) != 0; }, timeout);
}

bool ScriptedClient::wait_closed(std::chrono::milliseconds timeout) {
  take([](const DapMessage&) { return false; }, timeout);
  return closed_;
}

CoordinatorHarness::CoordinatorHarness(polydbg::SessionConfig config)
    : config_(std::make_shared<polydbg::SessionConfig>(std::move(config))) {
  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, sv) != 0) throw std::runtime_error("socketpair failed");
  client_ = std::make_unique<ScriptedClient>(polydbg::Connection::Fds{sv[0], ::dup(sv[0]), true});
  server_ = std::thread([config = config_, transcript = transcript_, finished = finished_, stats = stats_, fd = sv[1]] {
    auto mailbox = std::make_shared<polydbg::Mailbox>();
    polydbg::Connection link({fd, ::dup(fd), true}, mailbox, polydbg::kClientChannel, "coordinator");
    {
      polydbg::Session session(*config, mailbox, [&](DapMessage msg) {
        try {
          link.send(std::move(msg));
        } catch (const polydbg::Error&) {
        }
      });
      session.set_transcript(transcript);
      session.run();
      *stats = session.stats();
    }
    link.close();
    finished->store(true);
  });
}

CoordinatorHarness::~CoordinatorHarness() {
  client_->close();
  if (server_.joinable()) server_.join();
}

bool CoordinatorHarness::join(std::chrono::milliseconds timeout) {
  const auto deadline = polydbg::Clock::now() + timeout;
  while (!finished_->load() && polydbg::Clock::now() < deadline) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  if (!finished_->load()) return false;
  if (server_.joinable()) server_.join();
  return true;
}

std::optional<int> exit_code(polydbg::ChildProcess& child, std::chrono::milliseconds timeout) {
  const auto status = child.wait_for(timeout);
  if (!status) return std::nullopt;
  if (WIFEXITED(*status)) return WEXITSTATUS(*status);
  return -WTERMSIG(*status);
}

std::vector<std::string> agent_requests(const std::vector<polydbg::TranscriptEntry>& entries, const std::string& agent) {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    if (e.agent == agent && e.outbound && e.message.is_request()) out.push_back(e.message.command);
  }
  return out;
}

std::vector<std::string> flatten(const std::vector<polydbg::TranscriptEntry>& entries) {
  std::vector<std::string> out;
  for (const auto& e : entries) out.push_back(e.agent + ":" + polydbg::summarize(e.message));
  return out;
}

}  // namespace testing
