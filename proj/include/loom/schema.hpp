#pragma once

#include "loom/error.hpp"
#include "loom/value.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace loom {

// Recursive semantic-type descriptor for schema fields.
//
// The surface grammar accepts: int, float, str, bool, code, dict, list,
// array, any, List[T], Array[T], Dict[k1, k2, ...], Enum[v1, v2, ...].
// List/Array may nest arbitrarily. Array is an alias of List and equality
// treats them as the same type.
struct TypeExpr {
  enum class Kind {
    Int,
    Float,
    Str,
    Bool,
    Code,
    List,
    Array,
    DictAny,
    DictWithKeys,
    Enum,
    Any,
  };

  Kind kind = Kind::Any;
  std::vector<TypeExpr> inner;          // exactly one element for List/Array
  std::vector<std::string> keys;        // DictWithKeys: required keys (>= 1)
  std::vector<std::string> literals;    // Enum: allowed literals (>= 1)

  static TypeExpr simple(Kind kind) { return TypeExpr{kind, {}, {}, {}}; }
  static TypeExpr list_of(TypeExpr element, bool spelled_array = false);
  static TypeExpr dict_with_keys(std::vector<std::string> keys);
  static TypeExpr enum_of(std::vector<std::string> literals);

  bool is_list() const { return kind == Kind::List || kind == Kind::Array; }
  const TypeExpr& element() const { return inner.front(); }

  bool operator==(const TypeExpr& other) const;
  bool operator!=(const TypeExpr& other) const { return !(*this == other); }
};

// Renders the type back to its surface form ("List[int]", "Enum['a', 'b']").
std::string to_string(const TypeExpr& type);

// Parses a type expression. Unrecognized text yields Any and, when `warnings`
// is given, appends a note about it. Malformed bracket nesting throws
// GrammarError naming the offending position.
TypeExpr parse_type_expr(const std::string& text, std::vector<std::string>* warnings = nullptr);

// True iff `value` satisfies `type`. Coerced values always conform.
bool conforms(const Value& value, const TypeExpr& type);

// One schema field: the human description plus the declared type. The type is
// taken from the last "type:" marker in the description ("the answer,
// type: int"); without a marker the type is Any. The description keeps the
// marker text, so prompts show the type to the LLM as written.
struct FieldSpec {
  std::string description;
  TypeExpr type = TypeExpr::simple(TypeExpr::Kind::Any);

  static FieldSpec from_description(const std::string& description,
                                    std::vector<std::string>* warnings = nullptr);
};

// Ordered field_name -> FieldSpec map driving prompt rendering, extraction
// and coercion. Field names are unique; order is preserved from construction
// through rendering and result.
class OutputSchema {
 public:
  OutputSchema() = default;

  // Throws SchemaError on duplicate or empty field names.
  void add(std::string name, FieldSpec spec);
  void add(std::string name, const std::string& description);

  // Builds a schema from an object document {field: description, ...}.
  static OutputSchema from_document(const Value& doc);

  bool empty() const { return fields_.empty(); }
  std::size_t size() const { return fields_.size(); }
  const std::vector<std::pair<std::string, FieldSpec>>& fields() const { return fields_; }
  bool has_field(const std::string& name) const;
  const FieldSpec& at(const std::string& name) const;

 private:
  std::vector<std::pair<std::string, FieldSpec>> fields_;
};

// Knobs for the delimiter protocol and the retry loop.
struct ParseConfig {
  std::string delimiter = "###";
  int num_tries = 3;
  bool verbose = false;
};

// Enforces the joint invariants of a schema and config before any LLM call:
// non-empty schema and delimiter, num_tries >= 1, no field name sharing
// characters with the delimiter, and no field name or description containing
// the delimiter itself (such schemas are ambiguous and rejected).
void validate_schema(const OutputSchema& schema, const ParseConfig& config);

}  // namespace loom
