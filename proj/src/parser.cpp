#include "loom/parser.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>

namespace loom {
namespace {

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

void rtrim_in_place(std::string& s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// A located key marker: delimiter+name+delimiter, possibly wrapped in quotes.
struct Marker {
  std::size_t start;  // includes the wrapping quote, when present
  std::size_t end;    // one past the marker (and its closing quote)
  std::string field;
};

std::vector<Marker> find_markers(const std::string& raw, const OutputSchema& schema,
                                 const std::string& delim) {
  std::vector<Marker> markers;
  for (const auto& [name, spec] : schema.fields()) {
    const std::string pattern = delim + name + delim;
    std::size_t from = 0;
    while (true) {
      std::size_t pos = raw.find(pattern, from);
      if (pos == std::string::npos) break;
      Marker m{pos, pos + pattern.size(), name};
      // Either quote style (or none) may wrap the marker.
      if (pos > 0 && (raw[pos - 1] == '"' || raw[pos - 1] == '\'')) {
        m.start = pos - 1;
        if (m.end < raw.size() && raw[m.end] == raw[pos - 1]) ++m.end;
      } else if (m.end < raw.size() && (raw[m.end] == '"' || raw[m.end] == '\'')) {
        ++m.end;
      }
      markers.push_back(m);
      from = pos + pattern.size();
    }
  }
  std::sort(markers.begin(), markers.end(),
            [](const Marker& a, const Marker& b) { return a.start < b.start; });
  return markers;
}

long long brace_balance(const std::string& s) {
  long long balance = 0;
  for (char c : s) {
    if (c == '{') ++balance;
    if (c == '}') --balance;
  }
  return balance;
}

// Trims a raw value region down to the value text. `final_region` marks the
// region that runs to end-of-text, where the closing brace of the response
// envelope may trail the value.
std::string clean_region(std::string text, bool final_region) {
  text = trim(text);
  if (!text.empty() && text.front() == ':') text = trim(text.substr(1));

  while (true) {
    rtrim_in_place(text);
    if (!text.empty() && text.back() == ',') {
      text.pop_back();
      continue;
    }
    if (final_region && !text.empty() && text.back() == '}' && brace_balance(text) < 0) {
      text.pop_back();
      continue;
    }
    break;
  }

  if (text.size() >= 2 && text.front() == '<' && text.back() == '>') {
    text = text.substr(1, text.size() - 2);
  }
  if (text.size() >= 2 && text.front() == text.back() &&
      (text.front() == '"' || text.front() == '\'')) {
    text = text.substr(1, text.size() - 2);
  }
  return text;
}

bool is_integer_text(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  return std::all_of(s.begin() + static_cast<long>(i), s.end(),
                     [](unsigned char c) { return std::isdigit(c); });
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + s.size()) return std::nullopt;
  return v;
}

std::string strip_code_fences(const std::string& raw) {
  std::string text = trim(raw);
  if (text.rfind("```", 0) != 0) return raw;
  std::size_t body_start = text.find('\n');
  if (body_start == std::string::npos) return raw;
  ++body_start;
  std::size_t closing = text.rfind("```");
  if (closing <= body_start) return raw;
  std::string body = text.substr(body_start, closing - body_start);
  if (!body.empty() && body.back() == '\n') body.pop_back();
  return body;
}

// Minimal repairs for LLM-flavoured JSON: single quotes to double quotes and
// trailing commas removed. Applied once when the strict parse fails.
std::string repair_jsonish(const std::string& text) {
  std::string repaired;
  repaired.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\'') {
      repaired += '"';
      continue;
    }
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (j < text.size() && (text[j] == '}' || text[j] == ']')) continue;
    }
    repaired += c;
  }
  return repaired;
}

std::optional<Value> try_parse_structure(const std::string& text) {
  Value v = Value::parse(text, nullptr, false);
  if (!v.is_discarded()) return v;
  v = Value::parse(repair_jsonish(text), nullptr, false);
  if (!v.is_discarded()) return v;
  return std::nullopt;
}

std::string json_type_name(const Value& v) {
  if (v.is_null()) return "null";
  if (v.is_boolean()) return "bool";
  if (v.is_number_integer() || v.is_number_unsigned()) return "int";
  if (v.is_number_float()) return "float";
  if (v.is_string()) return "str";
  if (v.is_array()) return "list";
  return "dict";
}

Value coerce_bool(const std::string& raw) {
  static const std::set<std::string> truthy = {"true", "True", "TRUE", "yes"};
  static const std::set<std::string> falsy = {"false", "False", "FALSE", "no"};
  std::string text = trim(raw);
  if (truthy.count(text)) return Value(true);
  if (falsy.count(text)) return Value(false);
  throw TypeMismatchError("bool", "unrecognized boolean text", raw);
}

Value coerce_int(const std::string& raw) {
  std::string text = trim(raw);
  if (is_integer_text(text)) {
    errno = 0;
    long long v = std::strtoll(text.c_str(), nullptr, 10);
    if (errno == ERANGE) throw TypeMismatchError("int", "integer out of range", raw);
    return Value(v);
  }
  // Float-shaped text with zero fraction is accepted ("5.0" -> 5).
  if (auto d = parse_double(text)) {
    double integral_part = 0.0;
    if (std::modf(*d, &integral_part) == 0.0 && *d >= -9.007199254740992e15 &&
        *d <= 9.007199254740992e15) {
      return Value(static_cast<long long>(*d));
    }
    throw TypeMismatchError("int", "non-integral number", raw);
  }
  throw TypeMismatchError("int", "non-numeric text", raw);
}

Value coerce_float(const std::string& raw) {
  std::string text = trim(raw);
  if (auto d = parse_double(text)) return Value(*d);
  throw TypeMismatchError("float", "non-numeric text", raw);
}

Value coerce_enum(const std::string& raw, const TypeExpr& type) {
  std::string text = trim(raw);
  for (const auto& literal : type.literals) {
    if (text == literal) return Value(literal);
  }
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
  };
  std::string folded = lower(text);
  for (const auto& literal : type.literals) {
    if (folded == lower(literal)) return Value(literal);
  }
  std::vector<std::string> quoted;
  for (const auto& literal : type.literals) quoted.push_back("'" + literal + "'");
  throw TypeMismatchError("one of [" + join(quoted, ", ") + "]", "unlisted value", raw);
}

}  // namespace

std::string render_output_instructions(const OutputSchema& schema, const ParseConfig& config) {
  validate_schema(schema, config);
  const std::string& d = config.delimiter;
  std::ostringstream out;
  out << "Output in the following json format, enclosing each key with \"" << d
      << "\" and each value with <>:\n{\n";
  const auto& fields = schema.fields();
  for (std::size_t i = 0; i < fields.size(); ++i) {
    out << "\"" << d << fields[i].first << d << "\": <" << fields[i].second.description << ">";
    if (i + 1 < fields.size()) out << ",";
    out << "\n";
  }
  out << "}\n"
      << "Update the text enclosed in <> with the actual content for each field and remove the "
         "<> markers. Keep every key exactly as written. Begin the output with { and end it "
         "with }.";
  return out.str();
}

std::map<std::string, std::string> extract_fields_partial(const std::string& raw,
                                                          const OutputSchema& schema,
                                                          const ParseConfig& config,
                                                          std::vector<std::string>* missing) {
  std::vector<Marker> markers = find_markers(raw, schema, config.delimiter);

  std::map<std::string, std::string> extracted;
  for (std::size_t i = 0; i < markers.size(); ++i) {
    const Marker& m = markers[i];
    if (extracted.count(m.field)) continue;  // first occurrence wins
    std::size_t value_end = (i + 1 < markers.size()) ? markers[i + 1].start : raw.size();
    bool final_region = i + 1 == markers.size();
    extracted[m.field] = clean_region(raw.substr(m.end, value_end - m.end), final_region);
  }

  if (missing) {
    missing->clear();
    for (const auto& [name, spec] : schema.fields()) {
      if (!extracted.count(name)) missing->push_back(config.delimiter + name + config.delimiter);
    }
  }
  return extracted;
}

std::map<std::string, std::string> extract_fields(const std::string& raw,
                                                  const OutputSchema& schema,
                                                  const ParseConfig& config) {
  std::vector<std::string> missing;
  auto extracted = extract_fields_partial(raw, schema, config, &missing);
  if (!missing.empty()) throw MissingFieldError(missing);
  return extracted;
}

void check_dict_keys(const Value& value, const TypeExpr& type) {
  if (!value.is_object()) {
    throw TypeMismatchError(to_string(type), json_type_name(value), display(value));
  }
  for (const auto& key : type.keys) {
    if (!value.contains(key)) throw MissingDictKeyError(key);
  }
}

Value coerce_value(const Value& value, const TypeExpr& type) {
  using Kind = TypeExpr::Kind;
  switch (type.kind) {
    case Kind::Any:
      return value;
    case Kind::Int:
      if (value.is_number_integer() || value.is_number_unsigned()) return value;
      if (value.is_number_float()) return coerce_int(value.dump());
      if (value.is_string()) return coerce_int(value.get<std::string>());
      throw TypeMismatchError("int", json_type_name(value), display(value));
    case Kind::Float:
      if (value.is_number()) return Value(value.get<double>());
      if (value.is_string()) return coerce_float(value.get<std::string>());
      throw TypeMismatchError("float", json_type_name(value), display(value));
    case Kind::Bool:
      if (value.is_boolean()) return value;
      if (value.is_string()) return coerce_bool(value.get<std::string>());
      throw TypeMismatchError("bool", json_type_name(value), display(value));
    case Kind::Str:
      if (value.is_string()) return value;
      if (value.is_number() || value.is_boolean()) return Value(display(value));
      throw TypeMismatchError("str", json_type_name(value), display(value));
    case Kind::Code:
      if (value.is_string()) return Value(strip_code_fences(value.get<std::string>()));
      throw TypeMismatchError("code", json_type_name(value), display(value));
    case Kind::List:
    case Kind::Array: {
      if (value.is_string()) return coerce(value.get<std::string>(), type);
      if (!value.is_array()) {
        throw TypeMismatchError(to_string(type), json_type_name(value), display(value));
      }
      Value out = Value::array();
      for (std::size_t i = 0; i < value.size(); ++i) {
        try {
          out.push_back(coerce_value(value[i], type.element()));
        } catch (const TypeMismatchError& e) {
          throw TypeMismatchError(to_string(type.element()),
                                  "mismatch at element " + std::to_string(i) + " (" + e.got + ")",
                                  e.raw);
        }
      }
      return out;
    }
    case Kind::DictAny:
      if (value.is_string()) return coerce(value.get<std::string>(), type);
      if (!value.is_object()) {
        throw TypeMismatchError("dict", json_type_name(value), display(value));
      }
      return value;
    case Kind::DictWithKeys:
      if (value.is_string()) return coerce(value.get<std::string>(), type);
      check_dict_keys(value, type);
      return value;
    case Kind::Enum:
      if (value.is_string()) return coerce_enum(value.get<std::string>(), type);
      return coerce_enum(display(value), type);
  }
  throw TypeMismatchError(to_string(type), json_type_name(value), display(value));
}

Value coerce(const std::string& raw, const TypeExpr& type) {
  using Kind = TypeExpr::Kind;
  switch (type.kind) {
    case Kind::Str:
      return Value(raw);
    case Kind::Code:
      return Value(strip_code_fences(raw));
    case Kind::Int:
      return coerce_int(raw);
    case Kind::Float:
      return coerce_float(raw);
    case Kind::Bool:
      return coerce_bool(raw);
    case Kind::Enum:
      return coerce_enum(raw, type);
    case Kind::Any: {
      if (auto parsed = try_parse_structure(trim(raw))) return *parsed;
      return Value(raw);
    }
    case Kind::List:
    case Kind::Array:
    case Kind::DictAny:
    case Kind::DictWithKeys: {
      auto parsed = try_parse_structure(trim(raw));
      if (!parsed) {
        throw TypeMismatchError(to_string(type), "unparseable structure", raw);
      }
      if (parsed->is_string()) {
        // A quoted structure ("[1, 2]") is unwrapped once.
        auto reparsed = try_parse_structure(parsed->get<std::string>());
        if (reparsed && !reparsed->is_string()) parsed = reparsed;
      }
      return coerce_value(*parsed, type);
    }
  }
  throw TypeMismatchError(to_string(type), "unsupported", raw);
}

ExhaustedRetriesError::ExhaustedRetriesError(ParseOutcome outcome_)
    : Error("no valid structured output after " + std::to_string(outcome_.calls_made) +
            " attempt(s); last errors: " +
            (outcome_.attempts.empty() ? std::string("none")
                                       : join(outcome_.attempts.back().errors, "; "))),
      outcome(std::move(outcome_)) {}

ParseOutcome strict_json(const std::string& system_prompt, const std::string& user_prompt,
                         const OutputSchema& schema, Provider& provider,
                         const ParseConfig& config) {
  validate_schema(schema, config);
  const std::string full_system = system_prompt + "\n\n" + render_output_instructions(schema, config);

  ParseOutcome outcome;
  std::string feedback;
  for (int attempt = 0; attempt < config.num_tries; ++attempt) {
    const std::string full_user = user_prompt + feedback;
    if (config.verbose) {
      std::cerr << "[strict_json] system prompt:\n" << full_system << "\n"
                << "[strict_json] user prompt:\n" << full_user << "\n";
    }
    const std::string raw = provider.complete(full_system, full_user);
    if (config.verbose) std::cerr << "[strict_json] response:\n" << raw << "\n";

    ParseAttempt att{raw, {}};
    std::vector<std::string> missing;
    auto extracted = extract_fields_partial(raw, schema, config, &missing);
    if (!missing.empty()) att.errors.push_back(MissingFieldError(missing).what());

    Value result = Value::object();
    for (const auto& [name, spec] : schema.fields()) {
      auto it = extracted.find(name);
      if (it == extracted.end()) continue;
      try {
        result[name] = coerce(it->second, spec.type);
      } catch (const Error& e) {
        att.errors.push_back("field " + config.delimiter + name + config.delimiter + ": " +
                             e.what());
      }
    }

    outcome.attempts.push_back(att);
    outcome.calls_made = static_cast<int>(outcome.attempts.size());
    if (att.errors.empty()) {
      outcome.result = std::move(result);
      outcome.success = true;
      return outcome;
    }
    feedback = "\n\nYour previous response:\n" + raw + "\n\nErrors in your previous response:\n- " +
               join(att.errors, "\n- ") + "\nRegenerate the output and fix these errors.";
  }
  throw ExhaustedRetriesError(std::move(outcome));
}

}  // namespace loom
