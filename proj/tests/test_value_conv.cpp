#include <doctest.h>

#include <bit>
#include <cmath>

#include "generators.hpp"
#include "polydbg/errors.hpp"
#include "polydbg/value_conv.hpp"
#include "support.hpp"

using namespace polydbg;

namespace {

ValueConverter converter() {
  ValueConverter c;
  c.add(*builtin_value_table("python"));
  c.add(*builtin_value_table("javascript"));
  c.add(ValueTable::from_json("langX", testing::langx_values()));
  return c;
}

std::uint64_t bits(double d) { return std::bit_cast<std::uint64_t>(d); }

}  // namespace

TEST_CASE("parse examples") {
  const auto c = converter();
  auto v = c.parse_value("python", "42");  // the exported value in the two-language example
  CHECK(v.kind == ValueKind::Int);
  CHECK(v.integer == 42);
  CHECK(c.parse_value("python", "None").kind == ValueKind::Null);
  v = c.parse_value("javascript", "'abc'");
  CHECK(v.kind == ValueKind::Str);
  CHECK(v.lexical == "abc");
  CHECK(c.parse_value("python", "True").lexical == "true");
  CHECK(c.parse_value("javascript", "undefined").kind == ValueKind::Null);
  v = c.parse_value("javascript", "12345678901234567890n");
  CHECK(v.kind == ValueKind::Int);
  CHECK(v.lexical == "12345678901234567890");
  CHECK_FALSE(v.integer.has_value());
  CHECK(c.parse_value("python", "1_000").integer == 1000);
  CHECK(c.parse_value("python", "float('inf')").real == std::numeric_limits<double>::infinity());
}

TEST_CASE("render examples") {
  const auto c = converter();
  CHECK(c.render_value("javascript", ValueEnvelope::make_int(7)) == "7");  // the callee's return value
  CHECK(c.render_value("python", ValueEnvelope::make_bool(true)) == "True");
  CHECK(c.render_value("python", ValueEnvelope::make_null()) == "None");
  CHECK(c.render_value("javascript", ValueEnvelope::make_int("9007199254740993")) == "9007199254740993n");
  CHECK(c.render_value("python", ValueEnvelope::make_float(1.0)) == "1.0");
  CHECK(c.render_value("langX", ValueEnvelope::make_str("it's")) == "'it''s'");
  CHECK(c.render_value("python", ValueEnvelope::make_str("a\"b\\c\n")) == "\"a\\\"b\\\\c\\n\"");
}

TEST_CASE("errors travel as tagged strings") {
  const auto c = converter();
  const auto e = ValueEnvelope::make_error("boom");
  for (const auto& lang : c.languages()) {
    const auto back = c.parse_value(lang, c.render_value(lang, e));
    CHECK(back.kind == ValueKind::Error);
    CHECK(back.lexical == "boom");
  }
}

TEST_CASE("opaque values stay in their language") {
  const auto c = converter();
  const auto v = c.parse_value("python", "<object at 0x1>");
  CHECK(v.kind == ValueKind::Opaque);
  CHECK(v.lossy);
  CHECK(v.lexical == "<object at 0x1>");
  CHECK(c.render_value("python", v) == "<object at 0x1>");
  CHECK_THROWS_AS(c.render_value("javascript", v), LossyTransfer);
  CHECK(c.parse_value("javascript", "[1, 2]").kind == ValueKind::Opaque);
}

TEST_CASE("parse is total") {
  const auto c = converter();
  gen::Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const auto raw = gen::text(rng, 16);
    for (const auto& lang : c.languages()) CHECK_NOTHROW(c.parse_value(lang, raw));
  }
}

TEST_CASE("the adversarial double set has 64 distinct values") {
  const auto values = gen::adversarial_doubles();
  REQUIRE(values.size() == 64);
  std::set<std::uint64_t> seen;
  for (double d : values) seen.insert(bits(d));
  CHECK(seen.size() == 64);
}

TEST_CASE("floats are bit exact across every language pair") {
  const auto c = converter();
  for (const auto& a : c.languages()) {
    for (const auto& b : c.languages()) {
      for (double d : gen::adversarial_doubles()) {
        const auto back = c.round_trip(a, b, ValueEnvelope::make_float(d));
        INFO(a << "->" << b << " " << format_float(d));
        REQUIRE(back.kind == ValueKind::Float);
        if (std::isnan(d)) {
          CHECK(std::isnan(*back.real));
        } else {
          CHECK(bits(*back.real) == bits(d));
        }
      }
    }
  }
}

TEST_CASE("random floats survive rendering bit exactly") {
  const auto c = converter();
  gen::Rng rng(77);
  for (int i = 0; i < 5000; ++i) {
    const double d = gen::finite_double(rng);
    for (const auto& lang : c.languages()) {
      const auto back = c.parse_value(lang, c.render_value(lang, ValueEnvelope::make_float(d)));
      REQUIRE(back.kind == ValueKind::Float);
      REQUIRE(bits(*back.real) == bits(d));
    }
  }
}

TEST_CASE("kind and value preserved for scalars across every pair") {
  const auto c = converter();
  gen::Rng rng(99);
  std::vector<ValueEnvelope> samples = {ValueEnvelope::make_int(0),
                                        ValueEnvelope::make_int(42),
                                        ValueEnvelope::make_int(-7),
                                        ValueEnvelope::make_int(std::numeric_limits<std::int64_t>::max()),
                                        ValueEnvelope::make_int(std::numeric_limits<std::int64_t>::min()),
                                        ValueEnvelope::make_int("123456789012345678901234567890"),
                                        ValueEnvelope::make_bool(true),
                                        ValueEnvelope::make_bool(false),
                                        ValueEnvelope::make_null(),
                                        ValueEnvelope::make_str(""),
                                        ValueEnvelope::make_str("it's \"quoted\" \\ \n\t"),
                                        ValueEnvelope::make_str("__polyglot_error__ lookalike")};
  for (int i = 0; i < 300; ++i) {
    samples.push_back(ValueEnvelope::make_str(gen::text(rng)));
    samples.push_back(ValueEnvelope::make_int(static_cast<std::int64_t>(rng())));
  }
  for (const auto& a : c.languages()) {
    for (const auto& b : c.languages()) {
      for (const auto& v : samples) {
        const auto back = c.round_trip(a, b, v);
        INFO(a << "->" << b << " " << v.describe() << " got " << back.describe());
        REQUIRE(back.same_value(v));
      }
    }
  }
}

TEST_CASE("format_float always reads back as a float") {
  CHECK(format_float(1.0) == "1.0");
  CHECK(format_float(-0.0) == "-0.0");
  CHECK(format_float(1e22) == "1e+22");
  CHECK(format_float(0.1) == "0.1");
  CHECK(format_float(5e-324) == "5e-324");
}

TEST_CASE("table documents round trip through json") {
  const auto t = *builtin_value_table("javascript");
  const auto again = ValueTable::from_json("javascript", t.to_json());
  CHECK(again.to_json() == t.to_json());
  CHECK_THROWS_AS(ValueTable::from_json("x", json("cobol")), ConfigError);
  CHECK_THROWS_AS(ValueTable::from_json("x", {{"rules", {{{"match", "("}, {"kind", "Int"}}}}}), ConfigError);
}
