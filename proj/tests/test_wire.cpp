#include <doctest.h>

#include "generators.hpp"
#include "polydbg/errors.hpp"
#include "polydbg/wire.hpp"

using namespace polydbg;

namespace {

// Byte length of a UTF-8 string counted by lead bytes, not by std::string::size.
std::size_t utf8_bytes(const std::string& s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    const std::size_t width = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : 4;
    n += width;
    i += width;
  }
  return n;
}

}  // namespace

TEST_CASE("next request frame matches the frozen bytes") {
  // Frozen from an independent serializer (sorted keys, compact separators): 58 bytes.
  auto m = DapMessage::request("next");
  m.seq = 1;
  CHECK(encode_frame(m) == "Content-Length: 58\r\n\r\n{\"arguments\":{},\"command\":\"next\",\"seq\":1,\"type\":\"request\"}");
}

TEST_CASE("content length counts bytes of non-ascii bodies") {
  // 93 bytes from the same independent serializer; the document has 89 characters.
  auto m = DapMessage::event("stopped", {{"reason", "breakpoint"}, {"text", "h\xc3\xa9llo \xe2\x98\x83"}});
  m.seq = 3;
  const auto frame = encode_frame(m);
  CHECK(frame.rfind("Content-Length: 93\r\n\r\n", 0) == 0);
  FrameDecoder d;
  auto out = d.feed(frame);
  REQUIRE(out.size() == 1);
  CHECK(out[0].is_event());
  CHECK_FALSE(out[0].request_seq.has_value());
  CHECK(out[0] == m);
}

TEST_CASE("header length equals document byte count") {
  gen::Rng rng(11);
  for (int i = 1; i <= 300; ++i) {
    const auto m = gen::message(rng, i);
    const auto frame = encode_frame(m);
    const auto sep = frame.find("\r\n\r\n");
    REQUIRE(sep != std::string::npos);
    const auto declared = std::stoul(frame.substr(16, sep - 16));
    CHECK(declared == utf8_bytes(frame.substr(sep + 4)));
  }
}

TEST_CASE("single frame split at every byte boundary") {
  auto m = DapMessage::request("setBreakpoints", {{"source", {{"path", "/tmp/a.py"}}}, {"lines", {1, 2}}});
  m.seq = 7;
  const auto frame = encode_frame(m);
  FrameDecoder whole;
  const auto expected = whole.feed(frame);
  REQUIRE(expected.size() == 1);
  for (std::size_t cut = 0; cut <= frame.size(); ++cut) {
    FrameDecoder d;
    auto got = d.feed(std::string_view(frame).substr(0, cut));
    auto rest = d.feed(std::string_view(frame).substr(cut));
    got.insert(got.end(), rest.begin(), rest.end());
    REQUIRE(got == expected);
    CHECK(d.buffered() == 0);
  }
}

TEST_CASE("two frames in one chunk decode in order") {
  auto a = DapMessage::request("threads");
  a.seq = 1;
  auto b = DapMessage::event("output", {{"output", "x"}});
  b.seq = 2;
  FrameDecoder d;
  auto out = d.feed(encode_frame(a) + encode_frame(b));
  REQUIRE(out.size() == 2);
  CHECK(out[0] == a);
  CHECK(out[1] == b);
}

TEST_CASE("round trip over random messages and random chunking") {
  gen::Rng rng(20240611);
  for (int round = 0; round < 50; ++round) {
    std::vector<DapMessage> msgs;
    std::string stream;
    for (int i = 1; i <= 20; ++i) {
      msgs.push_back(gen::message(rng, i));
      stream += encode_frame(msgs.back());
    }
    FrameDecoder d;
    std::vector<DapMessage> out;
    for (std::size_t pos = 0; pos < stream.size();) {
      const std::size_t len = std::min<std::size_t>(stream.size() - pos, gen::uniform(rng, 1, 97));
      auto got = d.feed(std::string_view(stream).substr(pos, len));
      out.insert(out.end(), got.begin(), got.end());
      pos += len;
    }
    REQUIRE(out == msgs);
  }
}

TEST_CASE("other header lines are ignored") {
  const std::string body = R"({"seq":1,"type":"event","event":"initialized"})";
  FrameDecoder d;
  auto out = d.feed("X-Extra: 1\r\nContent-Length: " + std::to_string(body.size()) + "\r\n\r\n" + body);
  REQUIRE(out.size() == 1);
  CHECK(out[0].command == "initialized");
}

TEST_CASE("malformed input poisons the decoder") {
  SUBCASE("bad header") {
    FrameDecoder d;
    CHECK_THROWS_AS(d.feed("Content-Length: abc\r\n\r\n{}"), StreamError);
    CHECK(d.poisoned());
    CHECK_THROWS_AS(d.feed("Content-Length: 2\r\n\r\n{}"), StreamError);
  }
  SUBCASE("invalid document carries the offending prefix") {
    FrameDecoder d;
    try {
      d.feed("Content-Length: 5\r\n\r\n{nope");
      FAIL("expected StreamError");
    } catch (const StreamError& e) {
      CHECK(e.offending_prefix().find("{nope") != std::string::npos);
    }
  }
  SUBCASE("missing content length") {
    FrameDecoder d;
    CHECK_THROWS_AS(d.feed("Foo: 1\r\n\r\n"), StreamError);
  }
}

TEST_CASE("encode rejects invalid messages") {
  auto m = DapMessage::request("x");
  m.seq = 0;
  CHECK_THROWS_AS(encode_frame(m), EncodeError);
  m.seq = 1;
  m.payload = {{"bad", std::string("\xff\xfe")}};
  CHECK_THROWS_AS(encode_frame(m), EncodeError);
  auto e = DapMessage::event("stopped");
  e.seq = 2;
  e.request_seq = 1;
  CHECK_THROWS_AS(encode_frame(e), EncodeError);
}

TEST_CASE("from_document validates required fields") {
  CHECK_THROWS_AS(from_document(json::array()), ProtocolError);
  CHECK_THROWS_AS(from_document({{"seq", 1}}), ProtocolError);
  CHECK_THROWS_AS(from_document({{"seq", 1}, {"type", "response"}, {"command", "x"}}), ProtocolError);
  CHECK_THROWS_AS(from_document({{"seq", 1}, {"type", "bogus"}}), ProtocolError);
}

TEST_CASE("correlator matches responses to outstanding requests") {
  Correlator c;
  const auto response = [](std::int64_t rs) {
    DapMessage m;
    m.kind = MessageKind::Response;
    m.seq = 100;
    m.command = "x";
    m.request_seq = rs;
    return m;
  };
  SUBCASE("single") {
    c.track(4);
    CHECK(c.correlate(response(4)) == 4);
    CHECK(c.pending().empty());
  }
  SUBCASE("unknown") { CHECK_THROWS_AS(c.correlate(response(9)), ProtocolError); }
  SUBCASE("one of two") {
    c.track(2);
    c.track(5);
    CHECK(c.correlate(response(5)) == 5);
    CHECK(c.pending() == std::set<std::int64_t>{2});
  }
  SUBCASE("duplicate") {
    c.track(3);
    c.correlate(response(3));
    CHECK_THROWS_AS(c.correlate(response(3)), ProtocolError);
  }
}

TEST_CASE("seq counter strictly increases from 1") {
  SeqCounter s;
  std::int64_t prev = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto v = s.next();
    CHECK(v > prev);
    prev = v;
  }
  CHECK(s.last() == 1000);
}
