#include <doctest.h>

#include "loom/schema.hpp"

#include "support/gen.hpp"

using namespace loom;

TEST_SUITE_BEGIN("schema");

TEST_CASE("parse_type_expr handles the base words") {
  CHECK(parse_type_expr("int") == TypeExpr::simple(TypeExpr::Kind::Int));
  CHECK(parse_type_expr("float") == TypeExpr::simple(TypeExpr::Kind::Float));
  CHECK(parse_type_expr("str") == TypeExpr::simple(TypeExpr::Kind::Str));
  CHECK(parse_type_expr("bool") == TypeExpr::simple(TypeExpr::Kind::Bool));
  CHECK(parse_type_expr("code") == TypeExpr::simple(TypeExpr::Kind::Code));
  CHECK(parse_type_expr("dict") == TypeExpr::simple(TypeExpr::Kind::DictAny));
  CHECK(parse_type_expr("list") == TypeExpr::list_of(TypeExpr::simple(TypeExpr::Kind::Any)));
  CHECK(parse_type_expr("array") == TypeExpr::list_of(TypeExpr::simple(TypeExpr::Kind::Any)));
}

TEST_CASE("parse_type_expr handles nesting") {
  CHECK(parse_type_expr("List[int]") == TypeExpr::list_of(TypeExpr::simple(TypeExpr::Kind::Int)));
  CHECK(parse_type_expr("List[List[str]]") ==
        TypeExpr::list_of(TypeExpr::list_of(TypeExpr::simple(TypeExpr::Kind::Str))));
  CHECK(parse_type_expr("Array[bool]") ==
        TypeExpr::list_of(TypeExpr::simple(TypeExpr::Kind::Bool), true));
}

TEST_CASE("Array is an alias of List for equality") {
  CHECK(parse_type_expr("Array[int]") == parse_type_expr("List[int]"));
  CHECK(parse_type_expr("array") == parse_type_expr("list"));
}

TEST_CASE("parse_type_expr handles Enum and Dict") {
  TypeExpr sentiment = parse_type_expr("Enum['Positive','Negative']");
  REQUIRE(sentiment.kind == TypeExpr::Kind::Enum);
  CHECK(sentiment.literals == std::vector<std::string>{"Positive", "Negative"});

  TypeExpr keys = parse_type_expr("Dict['a', 'b']");
  REQUIRE(keys.kind == TypeExpr::Kind::DictWithKeys);
  CHECK(keys.keys == std::vector<std::string>{"a", "b"});

  CHECK(parse_type_expr("Dict[]") == TypeExpr::simple(TypeExpr::Kind::DictAny));
}

TEST_CASE("unrecognized text yields Any with a warning") {
  std::vector<std::string> warnings;
  CHECK(parse_type_expr("sentence", &warnings) == TypeExpr::simple(TypeExpr::Kind::Any));
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("sentence") != std::string::npos);
}

TEST_CASE("malformed brackets raise a grammar error naming the position") {
  CHECK_THROWS_AS(parse_type_expr("List[int"), GrammarError);
  CHECK_THROWS_AS(parse_type_expr("List[int]]"), GrammarError);
  CHECK_THROWS_AS(parse_type_expr("int]"), GrammarError);
  CHECK_THROWS_AS(parse_type_expr("Enum[]"), GrammarError);
  CHECK_THROWS_AS(TypeExpr::dict_with_keys({}), GrammarError);
  CHECK_THROWS_AS(TypeExpr::enum_of({}), GrammarError);
  try {
    parse_type_expr("List[int");
    FAIL("expected GrammarError");
  } catch (const GrammarError& e) {
    CHECK(e.position == 4);
  }
}

TEST_CASE("type rendering round-trips through the grammar") {
  loomtest::SchemaValueGen gen(7);
  for (int i = 0; i < 200; ++i) {
    TypeExpr type = gen.random_type(3);
    CHECK(parse_type_expr(to_string(type)) == type);
  }
}

TEST_CASE("field spec takes the type from the last type: marker") {
  FieldSpec spec = FieldSpec::from_description("the answer, type: int");
  CHECK(spec.type == TypeExpr::simple(TypeExpr::Kind::Int));
  CHECK(spec.description == "the answer, type: int");

  spec = FieldSpec::from_description("kind of type: thing, type: List[str]");
  CHECK(spec.type == TypeExpr::list_of(TypeExpr::simple(TypeExpr::Kind::Str)));

  // "prototype:" is not a marker
  spec = FieldSpec::from_description("the prototype: of a widget");
  CHECK(spec.type == TypeExpr::simple(TypeExpr::Kind::Any));

  spec = FieldSpec::from_description("no annotation here");
  CHECK(spec.type == TypeExpr::simple(TypeExpr::Kind::Any));
}

TEST_CASE("schema preserves order and rejects duplicates") {
  OutputSchema schema;
  schema.add("B", "second field");
  schema.add("A", "first field");
  CHECK(schema.fields()[0].first == "B");
  CHECK(schema.fields()[1].first == "A");
  CHECK_THROWS_AS(schema.add("A", "again"), SchemaError);
  CHECK_THROWS_AS(schema.add("C", ""), SchemaError);
}

TEST_CASE("validate_schema enforces the delimiter invariants") {
  OutputSchema schema;
  schema.add("Answer", "the answer, type: int");

  CHECK_NOTHROW(validate_schema(schema, ParseConfig{}));
  CHECK_THROWS_AS(validate_schema(schema, ParseConfig{"", 3, false}), SchemaError);
  CHECK_THROWS_AS(validate_schema(schema, ParseConfig{"###", 0, false}), SchemaError);
  // delimiter sharing characters with a field name
  CHECK_THROWS_AS(validate_schema(schema, ParseConfig{"Ans", 3, false}), SchemaError);
  CHECK_THROWS_AS(validate_schema(OutputSchema{}, ParseConfig{}), SchemaError);

  OutputSchema with_delim;
  with_delim.add("Answer", "uses ### inside the description");
  CHECK_THROWS_AS(validate_schema(with_delim, ParseConfig{}), SchemaError);
}

TEST_CASE("conforms matches values to types") {
  CHECK(conforms(Value(5), parse_type_expr("int")));
  CHECK_FALSE(conforms(Value(5.5), parse_type_expr("int")));
  CHECK(conforms(Value(5), parse_type_expr("float")));
  CHECK(conforms(Value("x"), parse_type_expr("str")));
  CHECK_FALSE(conforms(Value(1), parse_type_expr("str")));
  CHECK(conforms(Value::parse("[1, 2]"), parse_type_expr("List[int]")));
  CHECK_FALSE(conforms(Value::parse("[1, \"a\"]"), parse_type_expr("List[int]")));
  CHECK(conforms(Value::parse("{\"a\": 1}"), parse_type_expr("Dict['a']")));
  CHECK_FALSE(conforms(Value::parse("{\"b\": 1}"), parse_type_expr("Dict['a']")));
  CHECK(conforms(Value("Positive"), parse_type_expr("Enum['Positive','Negative']")));
  CHECK_FALSE(conforms(Value("Neutral"), parse_type_expr("Enum['Positive','Negative']")));
  CHECK(conforms(Value::parse("{\"anything\": [1]}"), parse_type_expr("any")));
}

TEST_SUITE_END();
