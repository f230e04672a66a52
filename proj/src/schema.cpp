#include "loom/schema.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace loom {
namespace {

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Splits the inside of a bracketed list on top-level commas, honoring quotes
// and nested brackets.
std::vector<std::string> split_top_level(const std::string& text, std::size_t base_pos) {
  std::vector<std::string> parts;
  std::string current;
  int depth = 0;
  char quote = '\0';
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quote != '\0') {
      current += c;
      if (c == quote) quote = '\0';
      continue;
    }
    if (c == '\'' || c == '"') {
      quote = c;
      current += c;
    } else if (c == '[') {
      ++depth;
      current += c;
    } else if (c == ']') {
      --depth;
      if (depth < 0) throw GrammarError("unexpected ']' in type expression", base_pos + i);
      current += c;
    } else if (c == ',' && depth == 0) {
      parts.push_back(trim(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (quote != '\0') throw GrammarError("unterminated quote in type expression", base_pos + text.size());
  parts.push_back(trim(current));
  return parts;
}

std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

TypeExpr parse_inner(const std::string& raw, std::size_t base_pos, std::vector<std::string>* warnings);

TypeExpr parse_bracketed(const std::string& head, const std::string& body, std::size_t body_pos,
                         std::vector<std::string>* warnings) {
  std::string h = lower(head);
  if (h == "list" || h == "array") {
    TypeExpr element = trim(body).empty() ? TypeExpr::simple(TypeExpr::Kind::Any)
                                          : parse_inner(body, body_pos, warnings);
    return TypeExpr::list_of(std::move(element), h == "array");
  }
  if (h == "dict") {
    if (trim(body).empty()) return TypeExpr::simple(TypeExpr::Kind::DictAny);
    std::vector<std::string> keys;
    for (const auto& part : split_top_level(body, body_pos)) {
      if (part.empty()) throw GrammarError("empty dictionary key", body_pos);
      keys.push_back(strip_quotes(part));
    }
    return TypeExpr::dict_with_keys(std::move(keys));
  }
  if (h == "enum") {
    if (trim(body).empty()) throw GrammarError("Enum[] requires at least one literal", body_pos);
    std::vector<std::string> literals;
    for (const auto& part : split_top_level(body, body_pos)) {
      if (part.empty()) throw GrammarError("empty enum literal", body_pos);
      literals.push_back(strip_quotes(part));
    }
    return TypeExpr::enum_of(std::move(literals));
  }
  if (warnings) {
    warnings->push_back("unrecognized type expression '" + head + "[...]', treated as any");
  }
  return TypeExpr::simple(TypeExpr::Kind::Any);
}

TypeExpr parse_inner(const std::string& raw, std::size_t base_pos, std::vector<std::string>* warnings) {
  std::string text = trim(raw);
  std::size_t open = text.find('[');
  if (open != std::string::npos) {
    // Find the matching close bracket for the first open.
    int depth = 0;
    std::size_t close = std::string::npos;
    char quote = '\0';
    for (std::size_t i = open; i < text.size(); ++i) {
      char c = text[i];
      if (quote != '\0') {
        if (c == quote) quote = '\0';
        continue;
      }
      if (c == '\'' || c == '"') {
        quote = c;
      } else if (c == '[') {
        ++depth;
      } else if (c == ']') {
        --depth;
        if (depth == 0) {
          close = i;
          break;
        }
      }
    }
    if (close == std::string::npos) {
      throw GrammarError("unbalanced '[' in type expression", base_pos + open);
    }
    if (close != text.size() - 1) {
      throw GrammarError("trailing text after ']' in type expression", base_pos + close + 1);
    }
    std::string head = trim(text.substr(0, open));
    std::string body = text.substr(open + 1, close - open - 1);
    return parse_bracketed(head, body, base_pos + open + 1, warnings);
  }
  if (text.find(']') != std::string::npos) {
    throw GrammarError("unexpected ']' in type expression", base_pos + text.find(']'));
  }

  std::string word = lower(text);
  if (word == "int" || word == "integer") return TypeExpr::simple(TypeExpr::Kind::Int);
  if (word == "float" || word == "number") return TypeExpr::simple(TypeExpr::Kind::Float);
  if (word == "str" || word == "string") return TypeExpr::simple(TypeExpr::Kind::Str);
  if (word == "bool" || word == "boolean") return TypeExpr::simple(TypeExpr::Kind::Bool);
  if (word == "code") return TypeExpr::simple(TypeExpr::Kind::Code);
  if (word == "dict") return TypeExpr::simple(TypeExpr::Kind::DictAny);
  if (word == "list") return TypeExpr::list_of(TypeExpr::simple(TypeExpr::Kind::Any));
  if (word == "array") return TypeExpr::list_of(TypeExpr::simple(TypeExpr::Kind::Any), true);
  if (word == "any") return TypeExpr::simple(TypeExpr::Kind::Any);

  if (warnings) warnings->push_back("unrecognized type expression '" + text + "', treated as any");
  return TypeExpr::simple(TypeExpr::Kind::Any);
}

}  // namespace

TypeExpr TypeExpr::list_of(TypeExpr element, bool spelled_array) {
  TypeExpr t;
  t.kind = spelled_array ? Kind::Array : Kind::List;
  t.inner.push_back(std::move(element));
  return t;
}

TypeExpr TypeExpr::dict_with_keys(std::vector<std::string> keys) {
  if (keys.empty()) throw GrammarError("Dict[...] requires at least one key", 0);
  TypeExpr t;
  t.kind = Kind::DictWithKeys;
  t.keys = std::move(keys);
  return t;
}

TypeExpr TypeExpr::enum_of(std::vector<std::string> literals) {
  if (literals.empty()) throw GrammarError("Enum[...] requires at least one literal", 0);
  TypeExpr t;
  t.kind = Kind::Enum;
  t.literals = std::move(literals);
  return t;
}

bool TypeExpr::operator==(const TypeExpr& other) const {
  // Array is an alias of List.
  auto canon = [](Kind k) { return k == Kind::Array ? Kind::List : k; };
  if (canon(kind) != canon(other.kind)) return false;
  if (keys != other.keys || literals != other.literals) return false;
  return inner == other.inner;
}

std::string to_string(const TypeExpr& type) {
  using Kind = TypeExpr::Kind;
  switch (type.kind) {
    case Kind::Int: return "int";
    case Kind::Float: return "float";
    case Kind::Str: return "str";
    case Kind::Bool: return "bool";
    case Kind::Code: return "code";
    case Kind::DictAny: return "dict";
    case Kind::Any: return "any";
    case Kind::List: return "List[" + to_string(type.element()) + "]";
    case Kind::Array: return "Array[" + to_string(type.element()) + "]";
    case Kind::DictWithKeys: {
      std::string out = "Dict[";
      for (std::size_t i = 0; i < type.keys.size(); ++i) {
        if (i) out += ", ";
        out += "'" + type.keys[i] + "'";
      }
      return out + "]";
    }
    case Kind::Enum: {
      std::string out = "Enum[";
      for (std::size_t i = 0; i < type.literals.size(); ++i) {
        if (i) out += ", ";
        out += "'" + type.literals[i] + "'";
      }
      return out + "]";
    }
  }
  return "any";
}

TypeExpr parse_type_expr(const std::string& text, std::vector<std::string>* warnings) {
  if (trim(text).empty()) throw GrammarError("empty type expression", 0);
  return parse_inner(text, 0, warnings);
}

bool conforms(const Value& value, const TypeExpr& type) {
  using Kind = TypeExpr::Kind;
  switch (type.kind) {
    case Kind::Int:
      return value.is_number_integer() || value.is_number_unsigned();
    case Kind::Float:
      return value.is_number();
    case Kind::Str:
    case Kind::Code:
      return value.is_string();
    case Kind::Bool:
      return value.is_boolean();
    case Kind::List:
    case Kind::Array: {
      if (!value.is_array()) return false;
      return std::all_of(value.begin(), value.end(),
                         [&](const Value& e) { return conforms(e, type.element()); });
    }
    case Kind::DictAny:
      return value.is_object();
    case Kind::DictWithKeys: {
      if (!value.is_object()) return false;
      return std::all_of(type.keys.begin(), type.keys.end(),
                         [&](const std::string& k) { return value.contains(k); });
    }
    case Kind::Enum: {
      if (!value.is_string()) return false;
      const auto& s = value.get_ref<const std::string&>();
      return std::find(type.literals.begin(), type.literals.end(), s) != type.literals.end();
    }
    case Kind::Any:
      return true;
  }
  return false;
}

FieldSpec FieldSpec::from_description(const std::string& description,
                                      std::vector<std::string>* warnings) {
  FieldSpec spec;
  spec.description = description;

  // The last "type:" marker wins; it must not sit inside a longer word
  // ("prototype:" is not a marker).
  std::size_t pos = std::string::npos;
  std::size_t search = description.rfind("type:");
  while (search != std::string::npos) {
    bool boundary = search == 0 || !(std::isalnum(static_cast<unsigned char>(description[search - 1])) ||
                                     description[search - 1] == '_');
    if (boundary) {
      pos = search;
      break;
    }
    if (search == 0) break;
    search = description.rfind("type:", search - 1);
  }
  if (pos != std::string::npos) {
    std::string type_text = trim(description.substr(pos + 5));
    if (!type_text.empty()) spec.type = parse_type_expr(type_text, warnings);
  }
  return spec;
}

void OutputSchema::add(std::string name, FieldSpec spec) {
  if (trim(name).empty()) throw SchemaError("field name must be non-empty");
  if (trim(spec.description).empty()) {
    throw SchemaError("description of field '" + name + "' must be non-empty");
  }
  if (has_field(name)) throw SchemaError("duplicate field name '" + name + "'");
  fields_.emplace_back(std::move(name), std::move(spec));
}

void OutputSchema::add(std::string name, const std::string& description) {
  add(std::move(name), FieldSpec::from_description(description));
}

OutputSchema OutputSchema::from_document(const Value& doc) {
  if (!doc.is_object()) throw SchemaError("schema document must be an object of field: description");
  OutputSchema schema;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!it.value().is_string()) {
      throw SchemaError("description of field '" + it.key() + "' must be a string");
    }
    schema.add(it.key(), it.value().get<std::string>());
  }
  return schema;
}

bool OutputSchema::has_field(const std::string& name) const {
  return std::any_of(fields_.begin(), fields_.end(),
                     [&](const auto& f) { return f.first == name; });
}

const FieldSpec& OutputSchema::at(const std::string& name) const {
  for (const auto& [field, spec] : fields_) {
    if (field == name) return spec;
  }
  throw SchemaError("no such field '" + name + "'");
}

void validate_schema(const OutputSchema& schema, const ParseConfig& config) {
  if (schema.empty()) throw SchemaError("schema must contain at least one field");
  if (config.delimiter.empty()) throw SchemaError("delimiter must be non-empty");
  if (config.num_tries < 1) throw SchemaError("num_tries must be >= 1");

  std::set<char> delim_chars(config.delimiter.begin(), config.delimiter.end());
  for (const auto& [name, spec] : schema.fields()) {
    for (char c : name) {
      if (delim_chars.count(c)) {
        throw SchemaError("delimiter '" + config.delimiter + "' shares character '" +
                          std::string(1, c) + "' with field name '" + name + "'");
      }
    }
    if (name.find(config.delimiter) != std::string::npos) {
      throw SchemaError("field name '" + name + "' contains the delimiter");
    }
    if (spec.description.find(config.delimiter) != std::string::npos) {
      throw SchemaError("description of field '" + name +
                        "' contains the delimiter; such schemas are ambiguous");
    }
  }
}

}  // namespace loom
