#include "polydbg/value_conv.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <limits>

#include "polydbg/errors.hpp"

namespace polydbg {

using json = nlohmann::json;

namespace {

constexpr const char* kPythonTable = R"json({
  "rules": [
    {"match": "^[-+]?[0-9][0-9_]*$", "kind": "Int", "normalize": "integer"},
    {"match": "^[-+]?(?:[0-9][0-9_]*)?\\.[0-9_]*(?:[eE][-+]?[0-9]+)?$", "kind": "Float", "normalize": "float"},
    {"match": "^[-+]?[0-9][0-9_]*[eE][-+]?[0-9]+$", "kind": "Float", "normalize": "float"},
    {"match": "^(?:inf|float\\('inf'\\))$", "kind": "Float", "normalize": "constant", "value": "inf"},
    {"match": "^(?:-inf|float\\('-inf'\\))$", "kind": "Float", "normalize": "constant", "value": "-inf"},
    {"match": "^(?:nan|float\\('nan'\\))$", "kind": "Float", "normalize": "constant", "value": "nan"},
    {"match": "^True$", "kind": "Bool", "normalize": "constant", "value": "true"},
    {"match": "^False$", "kind": "Bool", "normalize": "constant", "value": "false"},
    {"match": "^None$", "kind": "Null", "normalize": "constant"},
    {"match": "^(?:'[\\s\\S]*'|\"[\\s\\S]*\")$", "kind": "Error", "normalize": "tagged_error", "prefix": "__polyglot_error__:"},
    {"match": "^(?:'[\\s\\S]*'|\"[\\s\\S]*\")$", "kind": "Str", "normalize": "quoted"}
  ],
  "render": {
    "true": "True", "false": "False", "null": "None",
    "inf": "float('inf')", "-inf": "float('-inf')", "nan": "float('nan')",
    "quote": "\"", "escape": "backslash", "error_prefix": "__polyglot_error__:"
  }
})json";

constexpr const char* kJavascriptTable = R"json({
  "rules": [
    {"match": "^-?[0-9]+n?$", "kind": "Int", "normalize": "integer"},
    {"match": "^-?(?:[0-9]+)?\\.[0-9]*(?:[eE][-+]?[0-9]+)?$", "kind": "Float", "normalize": "float"},
    {"match": "^-?[0-9]+[eE][-+]?[0-9]+$", "kind": "Float", "normalize": "float"},
    {"match": "^Infinity$", "kind": "Float", "normalize": "constant", "value": "inf"},
    {"match": "^-Infinity$", "kind": "Float", "normalize": "constant", "value": "-inf"},
    {"match": "^NaN$", "kind": "Float", "normalize": "constant", "value": "nan"},
    {"match": "^true$", "kind": "Bool", "normalize": "constant", "value": "true"},
    {"match": "^false$", "kind": "Bool", "normalize": "constant", "value": "false"},
    {"match": "^(?:null|undefined)$", "kind": "Null", "normalize": "constant"},
    {"match": "^(?:'[\\s\\S]*'|\"[\\s\\S]*\")$", "kind": "Error", "normalize": "tagged_error", "prefix": "__polyglot_error__:"},
    {"match": "^(?:'[\\s\\S]*'|\"[\\s\\S]*\")$", "kind": "Str", "normalize": "quoted"}
  ],
  "render": {
    "true": "true", "false": "false", "null": "null",
    "inf": "Infinity", "-inf": "-Infinity", "nan": "NaN",
    "quote": "\"", "escape": "backslash", "error_prefix": "__polyglot_error__:",
    "bigint_suffix": "n", "max_safe_integer": 9007199254740991
  }
})json";

bool is_canonical_integer(std::string_view digits) {
  if (digits.empty()) return false;
  std::size_t i = digits.front() == '-' ? 1 : 0;
  if (i == digits.size()) return false;
  if (digits[i] == '0' && digits.size() != i + 1) return false;
  for (; i < digits.size(); ++i) {
    if (digits[i] < '0' || digits[i] > '9') return false;
  }
  return digits != "-0";
}

// "+0012", "1_000", "42n" -> canonical base-10 text; nullopt when not an integer.
std::optional<std::string> normalize_integer(std::string_view raw) {
  std::string text;
  bool negative = false;
  std::size_t i = 0;
  if (!raw.empty() && (raw[0] == '-' || raw[0] == '+')) {
    negative = raw[0] == '-';
    i = 1;
  }
  for (; i < raw.size(); ++i) {
    const char c = raw[i];
    if (c == '_') continue;
    if (c == 'n' && i + 1 == raw.size()) break;
    if (c < '0' || c > '9') return std::nullopt;
    text.push_back(c);
  }
  const auto first = text.find_first_not_of('0');
  if (text.empty()) return std::nullopt;
  text = first == std::string::npos ? "0" : text.substr(first);
  if (negative && text != "0") text.insert(text.begin(), '-');
  return text;
}

std::optional<double> normalize_float(std::string_view raw) {
  std::string text;
  for (char c : raw) {
    if (c != '_') text.push_back(c);
  }
  if (!text.empty() && text.front() == '+') text.erase(text.begin());
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::optional<char32_t> read_hex(std::string_view body, std::size_t& i, std::size_t count) {
  if (i + count > body.size()) return std::nullopt;
  char32_t value = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const char c = body[i + k];
    value <<= 4;
    if (c >= '0' && c <= '9') value |= static_cast<char32_t>(c - '0');
    else if (c >= 'a' && c <= 'f') value |= static_cast<char32_t>(c - 'a' + 10);
    else if (c >= 'A' && c <= 'F') value |= static_cast<char32_t>(c - 'A' + 10);
    else return std::nullopt;
  }
  i += count;
  return value;
}

bool is_surrogate(char32_t cp) { return cp >= 0xD800 && cp <= 0xDFFF; }

// Decodes backslash escapes accepted by Python and JavaScript literals.
std::optional<std::string> unescape_backslash(std::string_view body, char quote) {
  std::string out;
  out.reserve(body.size());
  for (std::size_t i = 0; i < body.size();) {
    const char c = body[i];
    if (c == quote) return std::nullopt;
    if (c != '\\') {
      out.push_back(c);
      ++i;
      continue;
    }
    if (++i == body.size()) return std::nullopt;
    const char e = body[i++];
    switch (e) {
      case '\\': out.push_back('\\'); break;
      case '\'': out.push_back('\''); break;
      case '"': out.push_back('"'); break;
      case '`': out.push_back('`'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      case 't': out.push_back('\t'); break;
      case 'b': out.push_back('\b'); break;
      case 'f': out.push_back('\f'); break;
      case 'v': out.push_back('\v'); break;
      case 'a': out.push_back('\a'); break;
      case '\n': break;
      case 'x': {
        auto cp = read_hex(body, i, 2);
        if (!cp) return std::nullopt;
        append_utf8(out, *cp);
        break;
      }
      case 'u': {
        std::optional<char32_t> cp;
        if (i < body.size() && body[i] == '{') {
          const auto close = body.find('}', i);
          if (close == std::string_view::npos || close == i + 1 || close - i - 1 > 6) return std::nullopt;
          ++i;
          cp = read_hex(body, i, close - i);
          ++i;
        } else {
          cp = read_hex(body, i, 4);
          if (cp && *cp >= 0xD800 && *cp <= 0xDBFF && i + 1 < body.size() && body[i] == '\\' &&
              body[i + 1] == 'u') {
            std::size_t j = i + 2;
            auto low = read_hex(body, j, 4);
            if (low && *low >= 0xDC00 && *low <= 0xDFFF) {
              cp = 0x10000 + ((*cp - 0xD800) << 10) + (*low - 0xDC00);
              i = j;
            }
          }
        }
        if (!cp || is_surrogate(*cp) || *cp > 0x10FFFF) return std::nullopt;
        append_utf8(out, *cp);
        break;
      }
      case 'U': {
        auto cp = read_hex(body, i, 8);
        if (!cp || is_surrogate(*cp) || *cp > 0x10FFFF) return std::nullopt;
        append_utf8(out, *cp);
        break;
      }
      default:
        if (e >= '0' && e <= '7') {
          char32_t cp = static_cast<char32_t>(e - '0');
          for (int k = 0; k < 2 && i < body.size() && body[i] >= '0' && body[i] <= '7'; ++k) {
            cp = cp * 8 + static_cast<char32_t>(body[i++] - '0');
          }
          append_utf8(out, cp);
          break;
        }
        return std::nullopt;
    }
  }
  return out;
}

std::optional<std::string> unescape_doubled(std::string_view body, char quote) {
  std::string out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == quote) {
      if (i + 1 == body.size() || body[i + 1] != quote) return std::nullopt;
      ++i;
    }
    out.push_back(body[i]);
  }
  return out;
}

std::optional<std::string> unquote(std::string_view raw, QuoteEscape escape) {
  if (raw.size() < 2) return std::nullopt;
  const char quote = raw.front();
  if ((quote != '\'' && quote != '"' && quote != '`') || raw.back() != quote) return std::nullopt;
  const std::string_view body = raw.substr(1, raw.size() - 2);
  return escape == QuoteEscape::Backslash ? unescape_backslash(body, quote) : unescape_doubled(body, quote);
}

std::string quote_literal(std::string_view text, const LiteralRenderer& render) {
  std::string out(1, render.quote);
  for (const char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (render.escape == QuoteEscape::Doubled) {
      if (c == render.quote) out.push_back(c);
      out.push_back(c);
      continue;
    }
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c == render.quote) {
          out.push_back('\\');
          out.push_back(c);
        } else if (u < 0x20 || u == 0x7F) {
          static constexpr char kHex[] = "0123456789abcdef";
          out += "\\x";
          out.push_back(kHex[u >> 4]);
          out.push_back(kHex[u & 0xF]);
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back(render.quote);
  return out;
}

std::optional<ValueEnvelope> apply_rule(const LexicalRule& rule, const ValueTable& table, std::string_view raw) {
  switch (rule.normalizer) {
    case Normalizer::Integer: {
      auto digits = normalize_integer(raw);
      if (!digits) return std::nullopt;
      return ValueEnvelope::make_int(*digits);
    }
    case Normalizer::Float: {
      auto value = normalize_float(raw);
      if (!value) return std::nullopt;
      return ValueEnvelope::make_float(*value);
    }
    case Normalizer::Constant:
      switch (rule.kind) {
        case ValueKind::Bool: return ValueEnvelope::make_bool(rule.constant == "true");
        case ValueKind::Null: return ValueEnvelope::make_null();
        case ValueKind::Float: {
          if (rule.constant == "inf") return ValueEnvelope::make_float(std::numeric_limits<double>::infinity());
          if (rule.constant == "-inf") return ValueEnvelope::make_float(-std::numeric_limits<double>::infinity());
          if (rule.constant == "nan") return ValueEnvelope::make_float(std::numeric_limits<double>::quiet_NaN());
          if (auto v = normalize_float(rule.constant)) return ValueEnvelope::make_float(*v);
          return std::nullopt;
        }
        case ValueKind::Int:
          if (auto digits = normalize_integer(rule.constant)) return ValueEnvelope::make_int(*digits);
          return std::nullopt;
        case ValueKind::Str: return ValueEnvelope::make_str(rule.constant);
        default: return std::nullopt;
      }
    case Normalizer::Quoted: {
      auto text = unquote(raw, table.render.escape);
      if (!text) return std::nullopt;
      if (rule.kind == ValueKind::Str) return ValueEnvelope::make_str(std::move(*text));
      return std::nullopt;
    }
    case Normalizer::TaggedError: {
      auto text = unquote(raw, table.render.escape);
      if (!text || text->rfind(rule.prefix, 0) != 0) return std::nullopt;
      std::string message = text->substr(rule.prefix.size());
      if (!message.empty() && message.front() == ' ') message.erase(message.begin());
      return ValueEnvelope::make_error(std::move(message));
    }
  }
  return std::nullopt;
}

Normalizer normalizer_from_string(const std::string& name) {
  if (name == "integer") return Normalizer::Integer;
  if (name == "float") return Normalizer::Float;
  if (name == "constant") return Normalizer::Constant;
  if (name == "quoted") return Normalizer::Quoted;
  if (name == "tagged_error") return Normalizer::TaggedError;
  throw ConfigError("unknown value normalizer '" + name + "'");
}

std::string_view normalizer_name(Normalizer n) {
  switch (n) {
    case Normalizer::Integer: return "integer";
    case Normalizer::Float: return "float";
    case Normalizer::Constant: return "constant";
    case Normalizer::Quoted: return "quoted";
    case Normalizer::TaggedError: return "tagged_error";
  }
  return "constant";
}

}  // namespace

std::string_view to_string(ValueKind kind) {
  switch (kind) {
    case ValueKind::Int: return "Int";
    case ValueKind::Float: return "Float";
    case ValueKind::Bool: return "Bool";
    case ValueKind::Str: return "Str";
    case ValueKind::Null: return "Null";
    case ValueKind::Error: return "Error";
    case ValueKind::Opaque: return "Opaque";
  }
  return "Opaque";
}

std::optional<ValueKind> value_kind_from_string(std::string_view name) {
  for (auto kind : {ValueKind::Int, ValueKind::Float, ValueKind::Bool, ValueKind::Str, ValueKind::Null,
                    ValueKind::Error, ValueKind::Opaque}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

std::string format_float(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  std::string text(buf, ptr);
  if (text.find_first_of(".e") == std::string::npos) text += ".0";
  return text;
}

ValueEnvelope ValueEnvelope::make_int(std::int64_t value) {
  ValueEnvelope v;
  v.kind = ValueKind::Int;
  v.lexical = std::to_string(value);
  v.integer = value;
  return v;
}

ValueEnvelope ValueEnvelope::make_int(std::string_view digits) {
  if (!is_canonical_integer(digits)) {
    auto normalized = normalize_integer(digits);
    if (!normalized) throw InputError("not an integer literal: " + std::string(digits));
    return make_int(std::string_view(*normalized));
  }
  ValueEnvelope v;
  v.kind = ValueKind::Int;
  v.lexical = std::string(digits);
  std::int64_t parsed = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), parsed);
  if (ec == std::errc() && ptr == digits.data() + digits.size()) v.integer = parsed;
  return v;
}

ValueEnvelope ValueEnvelope::make_float(double value) {
  ValueEnvelope v;
  v.kind = ValueKind::Float;
  v.lexical = format_float(value);
  v.real = value;
  return v;
}

ValueEnvelope ValueEnvelope::make_bool(bool value) {
  ValueEnvelope v;
  v.kind = ValueKind::Bool;
  v.lexical = value ? "true" : "false";
  return v;
}

ValueEnvelope ValueEnvelope::make_str(std::string text) {
  ValueEnvelope v;
  v.kind = ValueKind::Str;
  v.lexical = std::move(text);
  return v;
}

ValueEnvelope ValueEnvelope::make_null() { return ValueEnvelope{}; }

ValueEnvelope ValueEnvelope::make_error(std::string message) {
  ValueEnvelope v;
  v.kind = ValueKind::Error;
  v.lexical = std::move(message);
  return v;
}

ValueEnvelope ValueEnvelope::make_opaque(std::string language, std::string raw) {
  ValueEnvelope v;
  v.kind = ValueKind::Opaque;
  v.lexical = std::move(raw);
  v.lossy = true;
  v.origin = std::move(language);
  return v;
}

bool ValueEnvelope::same_value(const ValueEnvelope& other) const {
  if (kind != other.kind) return false;
  if (kind == ValueKind::Float) {
    if (!real || !other.real) return false;
    if (std::isnan(*real) && std::isnan(*other.real)) return true;
    return std::bit_cast<std::uint64_t>(*real) == std::bit_cast<std::uint64_t>(*other.real);
  }
  if (kind == ValueKind::Opaque) return lexical == other.lexical && origin == other.origin;
  return lexical == other.lexical;
}

std::string ValueEnvelope::describe() const {
  return std::string(to_string(kind)) + "(" + lexical + ")";
}

ValueTable ValueTable::from_json(std::string language, const json& doc) {
  if (doc.is_string()) {
    auto builtin = builtin_value_table(doc.get<std::string>());
    if (!builtin) throw ConfigError("unknown built-in value table '" + doc.get<std::string>() + "'");
    builtin->language = std::move(language);
    return *builtin;
  }
  if (!doc.is_object()) throw ConfigError("value table for '" + language + "' must be an object or a name");
  ValueTable table;
  table.language = std::move(language);
  for (const auto& entry : doc.value("rules", json::array())) {
    LexicalRule rule;
    rule.pattern = entry.at("match").get<std::string>();
    auto kind = value_kind_from_string(entry.at("kind").get<std::string>());
    if (!kind) throw ConfigError("unknown value kind '" + entry.at("kind").get<std::string>() + "'");
    rule.kind = *kind;
    rule.normalizer = normalizer_from_string(entry.value("normalize", std::string("constant")));
    rule.constant = entry.value("value", std::string());
    rule.prefix = entry.value("prefix", std::string());
    try {
      rule.compiled = std::regex(rule.pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw ConfigError("invalid value pattern '" + rule.pattern + "': " + e.what());
    }
    table.rules.push_back(std::move(rule));
  }
  const json render = doc.value("render", json::object());
  auto& r = table.render;
  r.true_literal = render.value("true", r.true_literal);
  r.false_literal = render.value("false", r.false_literal);
  r.null_literal = render.value("null", r.null_literal);
  r.inf_literal = render.value("inf", r.inf_literal);
  r.neg_inf_literal = render.value("-inf", r.neg_inf_literal);
  r.nan_literal = render.value("nan", r.nan_literal);
  const std::string quote = render.value("quote", std::string(1, r.quote));
  if (quote.size() != 1) throw ConfigError("render.quote must be a single character");
  r.quote = quote.front();
  const std::string escape = render.value("escape", std::string("backslash"));
  if (escape == "backslash") r.escape = QuoteEscape::Backslash;
  else if (escape == "doubled") r.escape = QuoteEscape::Doubled;
  else throw ConfigError("render.escape must be 'backslash' or 'doubled'");
  r.error_prefix = render.value("error_prefix", r.error_prefix);
  r.bigint_suffix = render.value("bigint_suffix", std::string());
  if (auto it = render.find("max_safe_integer"); it != render.end() && it->is_number_integer()) {
    r.max_safe_integer = it->get<std::int64_t>();
  }
  return table;
}

json ValueTable::to_json() const {
  json rules_doc = json::array();
  for (const auto& rule : rules) {
    json entry = {{"match", rule.pattern},
                  {"kind", std::string(to_string(rule.kind))},
                  {"normalize", std::string(normalizer_name(rule.normalizer))}};
    if (!rule.constant.empty()) entry["value"] = rule.constant;
    if (!rule.prefix.empty()) entry["prefix"] = rule.prefix;
    rules_doc.push_back(std::move(entry));
  }
  json r = {{"true", render.true_literal},   {"false", render.false_literal},
            {"null", render.null_literal},   {"inf", render.inf_literal},
            {"-inf", render.neg_inf_literal}, {"nan", render.nan_literal},
            {"quote", std::string(1, render.quote)},
            {"escape", render.escape == QuoteEscape::Backslash ? "backslash" : "doubled"},
            {"error_prefix", render.error_prefix}};
  if (!render.bigint_suffix.empty()) r["bigint_suffix"] = render.bigint_suffix;
  if (render.max_safe_integer) r["max_safe_integer"] = *render.max_safe_integer;
  return {{"rules", rules_doc}, {"render", r}};
}

std::optional<ValueTable> builtin_value_table(std::string_view name) {
  const char* source = nullptr;
  if (name == "python") source = kPythonTable;
  else if (name == "javascript") source = kJavascriptTable;
  if (source == nullptr) return std::nullopt;
  return ValueTable::from_json(std::string(name), json::parse(source));
}

ValueEnvelope parse_value(const ValueTable& table, std::string_view raw) {
  for (const auto& rule : table.rules) {
    if (!std::regex_match(raw.begin(), raw.end(), rule.compiled)) continue;
    if (auto value = apply_rule(rule, table, raw)) return *value;
  }
  return ValueEnvelope::make_opaque(table.language, std::string(raw));
}

std::string render_value(const ValueTable& table, const ValueEnvelope& value) {
  const auto& r = table.render;
  switch (value.kind) {
    case ValueKind::Int: {
      bool big = !value.integer.has_value();
      if (r.max_safe_integer && value.integer) {
        big = *value.integer > *r.max_safe_integer || *value.integer < -*r.max_safe_integer;
      }
      return big ? value.lexical + r.bigint_suffix : value.lexical;
    }
    case ValueKind::Float: {
      const double d = value.real.value_or(0.0);
      if (std::isnan(d)) return r.nan_literal;
      if (std::isinf(d)) return d > 0 ? r.inf_literal : r.neg_inf_literal;
      return format_float(d);
    }
    case ValueKind::Bool: return value.lexical == "true" ? r.true_literal : r.false_literal;
    case ValueKind::Null: return r.null_literal;
    case ValueKind::Str: return quote_literal(value.lexical, r);
    case ValueKind::Error: return quote_literal(r.error_prefix + " " + value.lexical, r);
    case ValueKind::Opaque:
      if (value.origin == table.language) return value.lexical;
      throw LossyTransfer("opaque value from '" + value.origin + "' cannot be transferred to '" + table.language +
                          "': " + value.lexical);
  }
  throw LossyTransfer("unrenderable value");
}

void ValueConverter::add(ValueTable table) {
  auto language = table.language;
  tables_.insert_or_assign(std::move(language), std::move(table));
}

bool ValueConverter::has(std::string_view language) const { return tables_.find(language) != tables_.end(); }

const ValueTable& ValueConverter::table(std::string_view language) const {
  auto it = tables_.find(language);
  if (it == tables_.end()) throw UnknownLanguage(std::string(language));
  return it->second;
}

std::vector<std::string> ValueConverter::languages() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : tables_) out.push_back(name);
  return out;
}

ValueEnvelope ValueConverter::parse_value(std::string_view language, std::string_view raw) const {
  return polydbg::parse_value(table(language), raw);
}

std::string ValueConverter::render_value(std::string_view language, const ValueEnvelope& value) const {
  return polydbg::render_value(table(language), value);
}

ValueEnvelope ValueConverter::round_trip(std::string_view language_a, std::string_view language_b,
                                         const ValueEnvelope& value) const {
  auto hop = [this](std::string_view language, const ValueEnvelope& v) {
    return parse_value(language, render_value(language, v));
  };
  return hop(language_a, hop(language_b, hop(language_a, value)));
}

}  // namespace polydbg
