#include <doctest.h>

#include "polydbg/transcript.hpp"

using namespace polydbg;

namespace {

std::vector<DapMessage> exchange(std::int64_t base) {
  auto a = DapMessage::request("setVariable", {{"name", "ret"}, {"value", "7"}});
  a.seq = base + 1;
  auto b = DapMessage::request("continue", {{"threadId", 1}});
  b.seq = base + 2;
  auto ra = DapMessage::response_to(a);
  ra.seq = base + 10;
  auto rb = DapMessage::response_to(b, {{"allThreadsContinued", true}});
  rb.seq = base + 11;
  return {a, b, ra, rb};
}

}  // namespace

TEST_CASE("identical transcripts pass") { CHECK(assert_transcript(exchange(0), exchange(0))); }

TEST_CASE("different seqs with the same structure pass") { CHECK(assert_transcript(exchange(0), exchange(500))); }

TEST_CASE("reordered setVariable and continue fail at the divergence") {
  auto swapped = exchange(0);
  std::swap(swapped[0], swapped[1]);
  const auto diff = assert_transcript(swapped, exchange(0));
  CHECK_FALSE(diff);
  CHECK(diff.index == 0);
  CHECK(diff.detail.find("setVariable") != std::string::npos);
}

TEST_CASE("a response pointing at another request fails") {
  auto actual = exchange(0);
  actual[2].request_seq = actual[1].seq;
  const auto diff = assert_transcript(actual, exchange(0));
  CHECK_FALSE(diff);
  CHECK(diff.index == 2);
}

TEST_CASE("length and payload differences") {
  auto shorter = exchange(0);
  shorter.pop_back();
  CHECK_FALSE(assert_transcript(shorter, exchange(0)));
  auto other = exchange(0);
  other[0].payload["value"] = "8";
  CHECK_FALSE(assert_transcript(other, exchange(0)));
  CHECK(assert_transcript(other, exchange(0), {.payloads = false}));
}

TEST_CASE("transcript log is append only") {
  Transcript t;
  t.add({"python", true, exchange(0)[0]});
  t.add({"javascript", false, exchange(0)[2]});
  const auto snap = t.snapshot();
  REQUIRE(snap.size() == 2);
  CHECK(snap[0].agent == "python");
  CHECK(summarize(snap[1].message) == "response:setVariable");
  t.clear();
  CHECK(t.snapshot().empty());
}
