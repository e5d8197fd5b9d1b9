#include "polydbg/headless.hpp"

#include "polydbg/errors.hpp"
#include "polydbg/log.hpp"

namespace polydbg {

HeadlessResult run_headless(const SessionConfig& config, const std::filesystem::path& entry,
                            const HeadlessOptions& options) {
  HeadlessResult result;
  auto mailbox = std::make_shared<Mailbox>();
  SeqCounter seqs;
  std::optional<Clock::time_point> t0;
  std::optional<Clock::time_point> t1;

  const auto send = [&](const std::string& command, json arguments = json::object()) {
    auto req = DapMessage::request(command, std::move(arguments));
    req.seq = seqs.next();
    mailbox->push({kClientChannel, std::move(req), {}});
  };

  auto sink = [&](DapMessage msg) {
    if (options.observer) options.observer(msg);
    if (msg.is_response()) {
      if (msg.command == "initialize") t0 = Clock::now();
      if (msg.command == "launch" && !msg.success) {
        result.error = msg.error_text.value_or("launch failed");
        result.exit_code = 2;
        send("disconnect");
      }
      return;
    }
    if (!msg.is_event()) return;
    const json& body = msg.payload;
    if (msg.command == "initialized") {
      send("configurationDone");
    } else if (msg.command == "stopped") {
      send("continue", {{"threadId", kClientThreadId}});
    } else if (msg.command == "output") {
      const auto category = body.value("category", std::string("console"));
      if (body.contains("data") && body["data"].contains("polydbgError")) {
        result.error = body["data"]["polydbgError"].get<std::string>();
      } else if (category != "stderr" && category != "telemetry") {
        result.output += body.value("output", std::string());
      }
      if (body.contains("data") && body["data"].contains("polydbgFinalValue")) {
        const auto& fv = body["data"]["polydbgFinalValue"];
        ValueEnvelope value;
        value.kind = value_kind_from_string(fv.value("kind", std::string("Opaque"))).value_or(ValueKind::Opaque);
        value.lexical = fv.value("lexical", std::string());
        result.final_value = value;
      }
    } else if (msg.command == "exited") {
      const int code = body.value("exitCode", 0);
      if (result.exit_code == 0) result.exit_code = code == 0 ? 0 : (code == 1 ? 1 : 2);
    } else if (msg.command == "terminated") {
      t1 = Clock::now();
      send("disconnect");
    }
  };

  try {
    Session session(config, mailbox, sink);
    session.set_transcript(options.transcript);
    send("initialize", {{"clientID", "polydbg-run"}, {"adapterID", "polydbg"}, {"linesStartAt1", true}});
    send("launch", {{"program", entry.string()}});
    session.run();
    result.stats = session.stats();
  } catch (const Error& e) {
    result.error = e.what();
    result.exit_code = 2;
  }
  if (!result.error.empty() && result.exit_code == 0) result.exit_code = 2;
  if (t0 && t1) result.wall_seconds = std::chrono::duration<double>(*t1 - *t0).count();
  return result;
}

void serve_client(const SessionConfig& config, Connection::Fds fds, std::shared_ptr<Transcript> transcript) {
  auto mailbox = std::make_shared<Mailbox>();
  Connection client(fds, mailbox, kClientChannel, "client");
  Session session(config, mailbox, [&](DapMessage msg) {
    try {
      client.send(std::move(msg));
    } catch (const Error& e) {
      PDBG_WARN("dropping message for closed client: {}", e.what());
    }
  });
  session.set_transcript(std::move(transcript));
  session.run();
  client.close();
}

}  // namespace polydbg
