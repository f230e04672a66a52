#include <doctest.h>

#include "loom/parser.hpp"

#include "support/gen.hpp"

using namespace loom;

namespace {

OutputSchema answer_schema() {
  OutputSchema schema;
  schema.add("Answer", "the answer, type: int");
  return schema;
}

}  // namespace

TEST_SUITE_BEGIN("parser");

TEST_CASE("render_output_instructions carries delimited keys and <> placeholders") {
  OutputSchema schema = answer_schema();
  std::string text = render_output_instructions(schema, ParseConfig{});
  CHECK(text.find("###Answer###") != std::string::npos);
  CHECK(text.find("<the answer, type: int>") != std::string::npos);
  CHECK(text == render_output_instructions(schema, ParseConfig{}));  // deterministic
}

TEST_CASE("render_output_instructions lists fields in schema order") {
  OutputSchema schema;
  schema.add("First", "first field");
  schema.add("Second", "second field");
  std::string text = render_output_instructions(schema, ParseConfig{});
  CHECK(text.find("###First###") < text.find("###Second###"));
}

TEST_CASE("extract_fields reads a single well-formed field") {
  auto fields = extract_fields("###Answer###: <42>", answer_schema(), ParseConfig{});
  CHECK(fields.at("Answer") == "42");
}

TEST_CASE("extract_fields recovers values with unclosed quotes verbatim") {
  OutputSchema schema;
  schema.add("Quote", "a quote, type: str");
  schema.add("Count", "a count, type: int");
  std::string raw =
      "{\"###Quote###\": its a \"wonderful day, \"###Count###\": 3}";
  auto fields = extract_fields(raw, schema, ParseConfig{});
  CHECK(fields.at("Quote") == "its a \"wonderful day");
  CHECK(fields.at("Count") == "3");
  // the same text defeats a standard JSON parse
  CHECK(Value::parse(raw, nullptr, false).is_discarded());
}

TEST_CASE("extract_fields is order independent") {
  OutputSchema schema;
  schema.add("A", "first");
  schema.add("B", "second");
  auto forward = extract_fields("###A###: 1, ###B###: 2", schema, ParseConfig{});
  auto reversed = extract_fields("###B###: 2, ###A###: 1", schema, ParseConfig{});
  CHECK(forward == reversed);
}

TEST_CASE("extract_fields reports every missing field") {
  OutputSchema schema;
  schema.add("A", "first");
  schema.add("B", "second");
  schema.add("C", "third");
  try {
    extract_fields("###B###: 2", schema, ParseConfig{});
    FAIL("expected MissingFieldError");
  } catch (const MissingFieldError& e) {
    CHECK(e.missing == std::vector<std::string>{"###A###", "###C###"});
  }
}

TEST_CASE("extraction tolerates either quote style or none around the marker") {
  OutputSchema schema;
  schema.add("A", "field");
  for (const std::string raw :
       {std::string("\"###A###\": 7"), std::string("'###A###': 7"), std::string("###A###: 7")}) {
    auto fields = extract_fields(raw, schema, ParseConfig{});
    CHECK(fields.at("A") == "7");
  }
}

TEST_CASE("unknown delimiter-wrapped tokens inside values stay value content") {
  OutputSchema schema;
  schema.add("A", "field");
  schema.add("B", "field too");
  auto fields =
      extract_fields("###A###: keep ###NotAKey### here, ###B###: 2", schema, ParseConfig{});
  CHECK(fields.at("A") == "keep ###NotAKey### here");
  CHECK(fields.at("B") == "2");
}

TEST_CASE("coerce handles the scalar types") {
  CHECK(coerce("5", parse_type_expr("int")) == Value(5));
  CHECK(coerce("5.0", parse_type_expr("int")) == Value(5));
  CHECK(coerce(" -17 ", parse_type_expr("int")) == Value(-17));
  CHECK_THROWS_AS(coerce("5.5", parse_type_expr("int")), TypeMismatchError);
  CHECK_THROWS_AS(coerce("abc", parse_type_expr("int")), TypeMismatchError);

  CHECK(coerce("3.25", parse_type_expr("float")) == Value(3.25));
  CHECK(coerce("8", parse_type_expr("float")) == Value(8.0));

  CHECK(coerce("True", parse_type_expr("bool")) == Value(true));
  CHECK(coerce("true", parse_type_expr("bool")) == Value(true));
  CHECK(coerce("FALSE", parse_type_expr("bool")) == Value(false));
  CHECK(coerce("yes", parse_type_expr("bool")) == Value(true));
  CHECK(coerce("no", parse_type_expr("bool")) == Value(false));
  CHECK_THROWS_AS(coerce("nope", parse_type_expr("bool")), TypeMismatchError);

  CHECK(coerce("anything at all", parse_type_expr("str")) == Value("anything at all"));
}

TEST_CASE("coerce re-parses structures with quote repair") {
  CHECK(coerce("[1, 2, 3]", parse_type_expr("List[int]")) == Value::parse("[1,2,3]"));
  CHECK(coerce("['a', 'b']", parse_type_expr("List[str]")) == Value::parse("[\"a\",\"b\"]"));
  CHECK(coerce("[1, 2,]", parse_type_expr("List[int]")) == Value::parse("[1,2]"));
  CHECK(coerce("{'a': 1,}", parse_type_expr("dict")) == Value::parse("{\"a\":1}"));

  try {
    coerce("[1, 2, 'a']", parse_type_expr("List[int]"));
    FAIL("expected TypeMismatchError");
  } catch (const TypeMismatchError& e) {
    CHECK(std::string(e.what()).find("element 2") != std::string::npos);
  }
}

TEST_CASE("coerce strips code fences") {
  CHECK(coerce("```\nx = 1\n```", parse_type_expr("code")) == Value("x = 1"));
  CHECK(coerce("```python\nx = 1\n```", parse_type_expr("code")) == Value("x = 1"));
  CHECK(coerce("x = 1", parse_type_expr("code")) == Value("x = 1"));
}

TEST_CASE("coerce matches enums exactly first, then case-insensitively") {
  TypeExpr type = parse_type_expr("Enum['Positive','Negative']");
  CHECK(coerce("Positive", type) == Value("Positive"));
  CHECK(coerce("negative", type) == Value("Negative"));
  try {
    coerce("Neutral", type);
    FAIL("expected TypeMismatchError");
  } catch (const TypeMismatchError& e) {
    CHECK(std::string(e.what()).find("'Positive'") != std::string::npos);
  }
}

TEST_CASE("check_dict_keys enforces required keys") {
  TypeExpr type = parse_type_expr("Dict['a', 'b']");
  CHECK_NOTHROW(check_dict_keys(Value::parse("{\"a\":1,\"b\":2}"), type));
  try {
    check_dict_keys(Value::parse("{\"a\":1}"), type);
    FAIL("expected MissingDictKeyError");
  } catch (const MissingDictKeyError& e) {
    CHECK(e.key == "b");
  }
}

TEST_CASE("coerced values satisfy their type") {
  loomtest::SchemaValueGen gen(11);
  for (int i = 0; i < 300; ++i) {
    TypeExpr type = gen.random_type(2);
    Value value = gen.random_value(type);
    std::string wire = loomtest::render_wire_value(value, type);
    // mimic the extraction cleanup for quoted/fenced wire forms
    if (wire.size() >= 2 && wire.front() == '"' && wire.back() == '"') {
      wire = wire.substr(1, wire.size() - 2);
    }
    Value coerced = coerce(wire, type);
    CHECK(conforms(coerced, type));
  }
}

TEST_CASE("round trip: render then extract+coerce reproduces values") {
  loomtest::SchemaValueGen gen(23);
  ParseConfig config;
  for (int i = 0; i < 200; ++i) {
    OutputSchema schema = gen.random_schema(1, 5, 3);
    Value values = Value::object();
    for (const auto& [name, spec] : schema.fields()) values[name] = gen.random_value(spec.type);

    std::string raw = loomtest::render_synthetic_response(schema, values, config, &gen);
    auto extracted = extract_fields(raw, schema, config);
    for (const auto& [name, spec] : schema.fields()) {
      Value coerced = coerce(extracted.at(name), spec.type);
      if (coerced != values.at(name)) {
        CAPTURE(raw);
        CAPTURE(name);
        CAPTURE(values.at(name).dump());
        CAPTURE(coerced.dump());
        FAIL("round trip mismatch");
      }
    }
  }
}

TEST_CASE("malformation inside one value region never touches other fields") {
  loomtest::SchemaValueGen gen(31);
  ParseConfig config;
  const std::vector<std::string> garbage = {"\"", "'", "[", "{", "]]", "quote\" bracket["};
  for (int i = 0; i < 200; ++i) {
    OutputSchema schema = gen.random_schema(2, 5, 2);
    Value values = Value::object();
    for (const auto& [name, spec] : schema.fields()) values[name] = gen.random_value(spec.type);
    std::string raw = loomtest::render_synthetic_response(schema, values, config, nullptr);
    auto baseline = extract_fields(raw, schema, config);

    // corrupt strictly inside the value region of one field
    const auto& [victim, victim_spec] = schema.fields()[static_cast<std::size_t>(
        gen.pick(0, static_cast<int>(schema.size()) - 1))];
    std::string marker = config.delimiter + victim + config.delimiter;
    std::size_t value_start = raw.find(marker) + marker.size() + 3;
    std::string corrupted = raw;
    corrupted.insert(value_start,
                     garbage[static_cast<std::size_t>(gen.pick(0, static_cast<int>(garbage.size()) - 1))]);

    auto result = extract_fields(corrupted, schema, config);
    for (const auto& [name, spec] : schema.fields()) {
      if (name == victim) continue;
      CHECK(result.at(name) == baseline.at(name));
    }
  }
}

TEST_CASE("extraction and coercion are pure") {
  OutputSchema schema;
  schema.add("A", "field, type: List[int]");
  std::string raw = "###A###: [1, 2, 3]";
  auto first = extract_fields(raw, schema, ParseConfig{});
  auto second = extract_fields(raw, schema, ParseConfig{});
  CHECK(first == second);
  CHECK(coerce(first.at("A"), schema.at("A").type) == coerce(second.at("A"), schema.at("A").type));
}

TEST_SUITE_END();
