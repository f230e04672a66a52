#include <doctest.h>

#include "loom/function.hpp"
#include "loom/provider.hpp"

#include <algorithm>

using namespace loom;

namespace {

SignatureMeta binary_to_decimal_meta() {
  SignatureMeta meta;
  meta.name = "binary_to_decimal";
  meta.params = {{"x", "int"}};
  meta.return_type = "int";
  meta.callable = [](const Value& args, SharedVariables&) -> std::optional<Value> {
    long long digits = args.at("x").get<long long>();
    long long result = 0, base = 1;
    while (digits > 0) {
      result += (digits % 10) * base;
      base *= 2;
      digits /= 10;
    }
    return Value(result);
  };
  return meta;
}

ExternalFunctionDef two_param_example() {
  ExternalFunctionDef def;
  def.name = "get_weather_forecast";
  def.description = "Gets the weather forecast for a location on a day";
  def.params.push_back({"location", TypeExpr::simple(TypeExpr::Kind::Str),
                        "the city and state, e.g. San Francisco, CA"});
  def.params.push_back({"day", TypeExpr::simple(TypeExpr::Kind::Str),
                        "the day of the week, e.g. Monday"});
  def.output_fields.push_back({"output_1", TypeExpr::simple(TypeExpr::Kind::Str), ""});
  return def;
}

// The verbose schema-object rendering of the same function, as mainstream
// function-calling APIs would declare it.
std::string json_schema_rendering(const ExternalFunctionDef& def) {
  Value schema;
  schema["name"] = def.name;
  schema["description"] = def.description;
  schema["parameters"]["type"] = "object";
  for (const auto& param : def.params) {
    schema["parameters"]["properties"][param.name]["type"] = "string";
    schema["parameters"]["properties"][param.name]["description"] = param.description;
  }
  Value required = Value::array();
  for (const auto& param : def.params) required.push_back(param.name);
  schema["parameters"]["required"] = required;
  schema["returns"]["type"] = "string";
  return schema.dump();
}

}  // namespace

TEST_SUITE_BEGIN("function");

TEST_CASE("derive_external_metadata reads params, types and doc markers") {
  ExternalFunctionDef def = derive_external_metadata(
      binary_to_decimal_meta(), "Convert input <x: a binary number in base 2> to base 10");
  CHECK(def.name == "binary_to_decimal");
  REQUIRE(def.params.size() == 1);
  CHECK(def.params[0].name == "x");
  CHECK(def.params[0].type == TypeExpr::simple(TypeExpr::Kind::Int));
  CHECK(def.params[0].description == "a binary number in base 2");
  REQUIRE(def.output_fields.size() == 1);
  CHECK(def.output_fields[0].name == "output_1");
  CHECK(def.output_fields[0].type == TypeExpr::simple(TypeExpr::Kind::Int));
}

TEST_CASE("missing doc markers and typing are omitted, not fatal") {
  SignatureMeta meta = binary_to_decimal_meta();
  meta.params = {{"x", ""}};
  meta.return_type = "";
  ExternalFunctionDef def = derive_external_metadata(meta, "no markers in this doc");
  CHECK(def.params[0].type == TypeExpr::simple(TypeExpr::Kind::Any));
  CHECK(def.params[0].description.empty());
  CHECK(def.output_fields[0].type == TypeExpr::simple(TypeExpr::Kind::Any));
}

TEST_CASE("duplicate parameter names are rejected") {
  SignatureMeta meta = binary_to_decimal_meta();
  meta.params = {{"x", "int"}, {"x", "int"}};
  CHECK_THROWS_AS(derive_external_metadata(meta, "doc"), SchemaError);
}

TEST_CASE("a shared_variables parameter is hidden from the LLM surface") {
  SignatureMeta meta = binary_to_decimal_meta();
  meta.params = {{"x", "int"}, {"shared_variables", ""}};
  ExternalFunctionDef def = derive_external_metadata(meta, "doc <x: number>");
  CHECK(def.wants_shared_variables);
  REQUIRE(def.params.size() == 1);
  CHECK(def.params[0].name == "x");
}

TEST_CASE("cards have exactly the four sections in order") {
  EquippedFunction fn(two_param_example());
  std::string card = render_function_card(fn).text;
  std::size_t name_pos = card.find("Name: ");
  std::size_t desc_pos = card.find("Description: ");
  std::size_t input_pos = card.find("Input: ");
  std::size_t output_pos = card.find("Output: ");
  REQUIRE(name_pos != std::string::npos);
  CHECK(name_pos < desc_pos);
  CHECK(desc_pos < input_pos);
  CHECK(input_pos < output_pos);
  CHECK(card == render_function_card(fn).text);  // deterministic
}

TEST_CASE("zero-parameter cards read Input: None") {
  ExternalFunctionDef def;
  def.name = "end_task";
  def.description = "ends the task";
  EquippedFunction fn(def);
  CHECK(render_function_card(fn).text.find("Input: None") != std::string::npos);
}

TEST_CASE("card rendering is far more concise than a schema-object rendering") {
  ExternalFunctionDef def = two_param_example();
  std::string card = render_function_card(EquippedFunction(def)).text;
  std::string json_schema = json_schema_rendering(def);
  CHECK(static_cast<double>(card.size()) < 0.65 * static_cast<double>(json_schema.size()));
}

TEST_CASE("invoke_external runs the callable on coerced args") {
  ExternalFunctionDef def = derive_external_metadata(
      binary_to_decimal_meta(), "Convert input <x: a binary number in base 2> to base 10");
  SharedVariables shared;
  Value out = invoke_external(def, Value{{"x", 10}}, shared);
  CHECK(out == Value{{"output_1", 2}});
  // string-shaped int is coerced before the call
  CHECK(invoke_external(def, Value{{"x", "101"}}, shared) == Value{{"output_1", 5}});
}

TEST_CASE("invoke_external rejects bad args before calling") {
  bool called = false;
  ExternalFunctionDef def;
  def.name = "probe";
  def.description = "probe";
  def.params.push_back({"x", TypeExpr::simple(TypeExpr::Kind::Int), ""});
  def.output_fields.push_back({"output_1", TypeExpr::simple(TypeExpr::Kind::Int), ""});
  def.callable = [&called](const Value&, SharedVariables&) -> std::optional<Value> {
    called = true;
    return Value(1);
  };
  SharedVariables shared;
  CHECK_THROWS_AS(invoke_external(def, Value{{"x", "not a number"}}, shared), FunctionError);
  CHECK_THROWS_AS(invoke_external(def, Value{{"x", 1}, {"y", 2}}, shared), FunctionError);
  CHECK_THROWS_AS(invoke_external(def, Value::object(), shared), FunctionError);
  CHECK_FALSE(called);
}

TEST_CASE("a nothing-returning callable records Status Completed") {
  ExternalFunctionDef def;
  def.name = "generate_quotes";
  def.description = "stores quotes in the shared variable Quote List";
  def.params.push_back({"topic", TypeExpr::simple(TypeExpr::Kind::Str), ""});
  def.callable = [](const Value& args, SharedVariables& shared) -> std::optional<Value> {
    Value list = shared.has("Quote List") ? shared.get("Quote List") : Value::array();
    list.push_back("quote about " + args.at("topic").get<std::string>());
    shared.set("Quote List", list);
    return std::nullopt;
  };
  SharedVariables shared;
  Value out = invoke_external(def, Value{{"topic", "agents"}}, shared);
  CHECK(out == Value{{"Status", "Completed"}});
  CHECK(shared.get("Quote List").size() == 1);
  invoke_external(def, Value{{"topic", "parsers"}}, shared);
  CHECK(shared.get("Quote List").size() == 2);  // the list grows
}

TEST_CASE("native failures are wrapped with the function name") {
  ExternalFunctionDef def;
  def.name = "boom";
  def.description = "always fails";
  def.callable = [](const Value&, SharedVariables&) -> std::optional<Value> {
    throw std::runtime_error("kaput");
  };
  SharedVariables shared;
  try {
    invoke_external(def, Value::object(), shared);
    FAIL("expected FunctionError");
  } catch (const FunctionError& e) {
    CHECK(std::string(e.what()).find("boom") != std::string::npos);
    CHECK(std::string(e.what()).find("kaput") != std::string::npos);
  }
}

TEST_CASE("internal placeholders parse names and inline descriptions") {
  InternalFunctionDef def;
  def.name = "sentence_with_objects_entities_emotion";
  def.description = "Output a sentence with <obj> and <entity: a named entity> in the style of "
                    "<emotion>";
  def.output_schema.add("output", "the sentence, type: str");
  auto params = def.placeholders();
  REQUIRE(params.size() == 3);
  CHECK(params[0].name == "obj");
  CHECK(params[1].name == "entity");
  CHECK(params[1].description == "a named entity");
  CHECK(params[2].name == "emotion");
}

TEST_CASE("nested angle brackets are rejected") {
  InternalFunctionDef def;
  def.name = "bad";
  def.description = "uses <outer <inner>> markers";
  def.output_schema.add("output", "x");
  CHECK_THROWS_AS(def.placeholders(), SchemaError);
}

TEST_CASE("invoke_internal substitutes args and parses the scripted output") {
  InternalFunctionDef def;
  def.name = "sentence_with_objects_entities_emotion";
  def.description = "Output a sentence with <obj> and <entity> in the style of <emotion>";
  def.output_schema.add("output", "the sentence, type: str");

  ScriptedProvider provider;
  provider.add("###output###: \"The happy dog sat on the chair\"");
  Value args{{"obj", "chair"}, {"entity", "dog"}, {"emotion", "happy"}};
  Value out = invoke_internal(def, args, provider);
  CHECK(out["output"] == Value("The happy dog sat on the chair"));
  // the substituted description reached the provider
  CHECK(provider.transcript()[0].user_prompt.find("style of happy") != std::string::npos);
}

TEST_CASE("unused extra args are rejected before any provider call") {
  InternalFunctionDef def;
  def.name = "fn";
  def.description = "works on <x>";
  def.output_schema.add("output", "y");
  ScriptedProvider provider;  // empty: any call would raise FixtureExhausted
  CHECK_THROWS_AS(invoke_internal(def, Value{{"x", 1}, {"zzz", 2}}, provider), FunctionError);
  CHECK_THROWS_AS(invoke_internal(def, Value::object(), provider), FunctionError);
  CHECK(provider.calls_made() == 0);
}

TEST_CASE("internal invocations retry through the parser") {
  InternalFunctionDef def;
  def.name = "count_words";
  def.description = "Counts the words in <text>";
  def.output_schema.add("count", "the number of words, type: int");
  ScriptedProvider provider;
  provider.add("###count###: many");
  provider.add("###count###: 3");
  Value out = invoke_internal(def, Value{{"text", "one two three"}}, provider);
  CHECK(out["count"] == Value(3));
  CHECK(provider.calls_made() == 2);
}

TEST_CASE("filter_functions is inert at or below top_k") {
  std::vector<EquippedFunction> fns;
  for (int i = 0; i < 3; ++i) {
    ExternalFunctionDef def;
    def.name = "fn_" + std::to_string(i);
    def.description = "does things";
    fns.emplace_back(def);
  }
  auto kept = filter_functions(fns, "any task", 5);
  CHECK(kept.size() == 3);
}

TEST_CASE("compulsory functions and built-ins always pass the filter") {
  std::vector<EquippedFunction> fns;
  {
    InternalFunctionDef use_llm;
    use_llm.name = "use_llm";
    use_llm.description = "answer directly";
    use_llm.output_schema.add("Output", "answer");
    fns.emplace_back(use_llm);
  }
  {
    ExternalFunctionDef end_task;
    end_task.name = "end_task";
    end_task.description = "ends the task";
    fns.emplace_back(end_task);
  }
  for (int i = 0; i < 9; ++i) {
    ExternalFunctionDef def;
    def.name = "tool_" + std::to_string(i);
    def.description = "tool number " + std::to_string(i);
    def.is_compulsory = i == 0;
    fns.emplace_back(def);
  }

  auto kept = filter_functions(fns, "some unrelated task", 5);
  // 5 ranked + compulsory tool_0 may overlap with the ranked five
  std::size_t non_exempt = 0;
  bool has_use_llm = false, has_end_task = false, has_compulsory = false;
  for (const auto& fn : kept) {
    if (fn.name() == "use_llm") has_use_llm = true;
    if (fn.name() == "end_task") has_end_task = true;
    if (fn.name() == "tool_0") has_compulsory = true;
    if (fn.name() != "use_llm" && fn.name() != "end_task" && !fn.is_compulsory()) ++non_exempt;
  }
  CHECK(has_use_llm);
  CHECK(has_end_task);
  CHECK(has_compulsory);
  CHECK(non_exempt <= 5);

  // all-compulsory input passes through whole
  for (auto& fn : fns) {
    if (fn.is_external()) {
      ExternalFunctionDef def = fn.external();
      def.is_compulsory = true;
      fn = EquippedFunction(def);
    }
  }
  CHECK(filter_functions(fns, "task", 1).size() == fns.size());
}

TEST_CASE("filter output is a subset preserving input order") {
  std::vector<EquippedFunction> fns;
  for (int i = 0; i < 9; ++i) {
    ExternalFunctionDef def;
    def.name = "tool_" + std::to_string(i);
    def.description = "tool " + std::to_string(i);
    fns.emplace_back(def);
  }
  auto kept = filter_functions(fns, "tool 3 please", 4);
  CHECK(kept.size() == 4);
  std::vector<std::size_t> indices;
  for (const auto& fn : kept) {
    std::size_t index = 0;
    for (; index < fns.size(); ++index) {
      if (fns[index].name() == fn.name()) break;
    }
    REQUIRE(index < fns.size());
    indices.push_back(index);
  }
  CHECK(std::is_sorted(indices.begin(), indices.end()));
}

TEST_SUITE_END();
