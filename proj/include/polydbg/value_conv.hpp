#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace polydbg {

enum class ValueKind { Int, Float, Bool, Str, Null, Error, Opaque };

std::string_view to_string(ValueKind kind);
std::optional<ValueKind> value_kind_from_string(std::string_view name);

/// Language-neutral form of a value crossing a polyglot boundary.
///
/// `lexical` is canonical per kind: base-10 integer for Int, shortest
/// round-trip decimal for Float ("inf", "-inf", "nan" for the specials),
/// "true"/"false" for Bool, "null" for Null, the decoded text for Str, the
/// message for Error, and the adapter's raw text for Opaque.
struct ValueEnvelope {
  ValueKind kind = ValueKind::Null;
  std::string lexical = "null";
  std::optional<std::int64_t> integer;  // Int that fits in 64 bits
  std::optional<double> real;           // Float
  bool lossy = false;
  std::string origin;  // language that produced an Opaque value

  static ValueEnvelope make_int(std::int64_t value);
  /// Throws InputError unless `digits` is a base-10 integer literal.
  static ValueEnvelope make_int(std::string_view digits);
  static ValueEnvelope make_float(double value);
  static ValueEnvelope make_bool(bool value);
  static ValueEnvelope make_str(std::string text);
  static ValueEnvelope make_null();
  static ValueEnvelope make_error(std::string message);
  static ValueEnvelope make_opaque(std::string language, std::string raw);

  /// Kind and value equality; Float compares bit patterns.
  bool same_value(const ValueEnvelope& other) const;

  std::string describe() const;
};

/// Shortest round-trip decimal for a binary64 value, always carrying a
/// decimal point or exponent so it reads back as a float.
std::string format_float(double value);

enum class Normalizer { Integer, Float, Constant, Quoted, TaggedError };
enum class QuoteEscape { Backslash, Doubled };

struct LexicalRule {
  std::string pattern;
  ValueKind kind = ValueKind::Opaque;
  Normalizer normalizer = Normalizer::Constant;
  std::string constant;  // Constant: "true"/"false" for Bool, "inf"/"-inf"/"nan" for Float
  std::string prefix;    // TaggedError
  std::regex compiled;
};

struct LiteralRenderer {
  std::string true_literal = "true";
  std::string false_literal = "false";
  std::string null_literal = "null";
  std::string inf_literal = "Infinity";
  std::string neg_inf_literal = "-Infinity";
  std::string nan_literal = "NaN";
  char quote = '"';
  QuoteEscape escape = QuoteEscape::Backslash;
  std::string error_prefix = "__polyglot_error__:";
  // Integers outside [-max_safe_integer, max_safe_integer] get this suffix.
  std::string bigint_suffix;
  std::optional<std::int64_t> max_safe_integer;
};

/// Per-language mapping table between the adapter's lexical rendering and
/// ValueEnvelope. Tables are data: loaded from the session config, never
/// hard-coded per language in the engine.
struct ValueTable {
  std::string language;
  std::vector<LexicalRule> rules;
  LiteralRenderer render;

  static ValueTable from_json(std::string language, const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

/// Built-in tables ("python", "javascript"); nullopt for other names.
std::optional<ValueTable> builtin_value_table(std::string_view name);

/// Total: unmatched input yields an Opaque envelope flagged lossy.
ValueEnvelope parse_value(const ValueTable& table, std::string_view raw);

/// Literal in the table's language that evaluates to `value`. Opaque values
/// render only into their origin language; otherwise throws LossyTransfer.
std::string render_value(const ValueTable& table, const ValueEnvelope& value);

/// Registry of tables keyed by language id.
class ValueConverter {
 public:
  void add(ValueTable table);
  bool has(std::string_view language) const;
  const ValueTable& table(std::string_view language) const;
  std::vector<std::string> languages() const;

  ValueEnvelope parse_value(std::string_view language, std::string_view raw) const;
  std::string render_value(std::string_view language, const ValueEnvelope& value) const;

  /// Sender `a` to receiver `b` and back to `a`: each hop renders in the
  /// hop's language and parses the literal with the same table.
  ValueEnvelope round_trip(std::string_view language_a, std::string_view language_b,
                           const ValueEnvelope& value) const;

 private:
  std::map<std::string, ValueTable, std::less<>> tables_;
};

}  // namespace polydbg
