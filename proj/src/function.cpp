#include "loom/function.hpp"

#include "loom/agent.hpp"

#include <algorithm>
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

struct PlaceholderSpan {
  std::size_t start;  // position of '<'
  std::size_t end;    // position past '>'
  std::string name;
  std::string description;
};

// Scans "<name>" / "<name: description>" spans. Nested angle brackets are
// unsupported and rejected.
std::vector<PlaceholderSpan> scan_placeholders(const std::string& text) {
  std::vector<PlaceholderSpan> spans;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t open = text.find('<', pos);
    if (open == std::string::npos) break;
    std::size_t close = text.find('>', open + 1);
    if (close == std::string::npos) {
      throw SchemaError("unterminated '<' in function description: " + text);
    }
    std::string body = text.substr(open + 1, close - open - 1);
    if (body.find('<') != std::string::npos) {
      throw SchemaError("nested angle brackets are not supported in function descriptions: " +
                        text);
    }
    PlaceholderSpan span{open, close + 1, "", ""};
    std::size_t colon = body.find(':');
    if (colon == std::string::npos) {
      span.name = trim(body);
    } else {
      span.name = trim(body.substr(0, colon));
      span.description = trim(body.substr(colon + 1));
    }
    if (span.name.empty()) {
      throw SchemaError("empty placeholder name in function description: " + text);
    }
    spans.push_back(std::move(span));
    pos = close + 1;
  }
  return spans;
}

std::string render_param(const ParamSpec& p) {
  std::string out = p.name;
  if (p.type.kind != TypeExpr::Kind::Any) out += " (" + to_string(p.type) + ")";
  if (!p.description.empty()) out += ": " + p.description;
  return out;
}

std::string render_output_field(const OutputFieldSpec& f) {
  std::string out = f.name;
  if (f.type.kind != TypeExpr::Kind::Any) out += " (" + to_string(f.type) + ")";
  if (!f.description.empty()) out += ": " + f.description;
  return out;
}

}  // namespace

std::vector<ParamSpec> InternalFunctionDef::placeholders() const {
  std::vector<ParamSpec> params;
  for (const auto& span : scan_placeholders(description)) {
    bool seen = std::any_of(params.begin(), params.end(),
                            [&](const ParamSpec& p) { return p.name == span.name; });
    if (seen) continue;
    params.push_back({span.name, TypeExpr::simple(TypeExpr::Kind::Any), span.description});
  }
  return params;
}

ExternalFunctionDef derive_external_metadata(const SignatureMeta& signature_meta,
                                             const std::string& doc_text) {
  if (signature_meta.name.empty()) throw SchemaError("external function needs a name");

  // Per-parameter descriptions come from "<name: desc>" markers in the doc.
  std::map<std::string, std::string> doc_descriptions;
  for (const auto& span : scan_placeholders(doc_text)) {
    if (!span.description.empty()) doc_descriptions[span.name] = span.description;
  }

  ExternalFunctionDef def;
  def.name = signature_meta.name;
  def.description = doc_text;
  def.callable = signature_meta.callable;

  std::set<std::string> seen;
  for (const auto& [param_name, type_text] : signature_meta.params) {
    if (!seen.insert(param_name).second) {
      throw SchemaError("duplicate parameter name '" + param_name + "' in function '" +
                        signature_meta.name + "'");
    }
    if (param_name == "shared_variables") {
      def.wants_shared_variables = true;
      continue;
    }
    ParamSpec param;
    param.name = param_name;
    if (!type_text.empty()) param.type = parse_type_expr(type_text);
    auto it = doc_descriptions.find(param_name);
    if (it != doc_descriptions.end()) param.description = it->second;
    def.params.push_back(std::move(param));
  }

  OutputFieldSpec out;
  out.name = "output_1";
  if (!signature_meta.return_type.empty()) out.type = parse_type_expr(signature_meta.return_type);
  def.output_fields.push_back(std::move(out));
  return def;
}

std::string EquippedFunction::name() const {
  if (is_internal()) return internal().name;
  if (is_external()) return external().name;
  return inner_agent()->config().name;
}

std::string EquippedFunction::description() const {
  if (is_internal()) return internal().description;
  if (is_external()) return external().description;
  return inner_agent()->config().description;
}

bool EquippedFunction::is_compulsory() const {
  if (is_internal()) return internal().is_compulsory;
  if (is_external()) return external().is_compulsory;
  return false;
}

std::vector<ParamSpec> EquippedFunction::params() const {
  if (is_internal()) return internal().placeholders();
  if (is_external()) return external().params;
  return {{"instruction", TypeExpr::simple(TypeExpr::Kind::Str),
           "instruction for the agent, with all the context it needs"}};
}

FunctionCard render_function_card(const EquippedFunction& fn) {
  std::ostringstream out;
  out << "Name: " << fn.name() << "\n";
  out << "Description: " << fn.description() << "\n";

  std::vector<ParamSpec> params = fn.params();
  out << "Input: ";
  if (params.empty()) {
    out << "None";
  } else {
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (i) out << ", ";
      out << render_param(params[i]);
    }
  }
  out << "\n";

  out << "Output: ";
  if (fn.is_internal()) {
    const auto& fields = fn.internal().output_schema.fields();
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out << ", ";
      out << fields[i].first << ": " << fields[i].second.description;
    }
  } else if (fn.is_external()) {
    const auto& fields = fn.external().output_fields;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out << ", ";
      out << render_output_field(fields[i]);
    }
  } else {
    out << "the agent's consolidated reply after working on the instruction";
  }
  return FunctionCard{out.str()};
}

Value invoke_internal(const InternalFunctionDef& def, const Value& args, Provider& provider,
                      const ParseConfig& config) {
  std::vector<ParamSpec> params = def.placeholders();

  for (auto it = args.begin(); it != args.end(); ++it) {
    bool known = std::any_of(params.begin(), params.end(),
                             [&](const ParamSpec& p) { return p.name == it.key(); });
    if (!known) {
      throw FunctionError(def.name + ": unexpected argument '" + it.key() + "'");
    }
  }
  for (const auto& param : params) {
    if (!args.contains(param.name)) {
      throw FunctionError(def.name + ": missing argument '" + param.name + "'");
    }
  }

  // Substitute the arguments into the description placeholders.
  std::string substituted;
  std::size_t pos = 0;
  for (const auto& span : scan_placeholders(def.description)) {
    substituted += def.description.substr(pos, span.start - pos);
    substituted += display(args.at(span.name));
    pos = span.end;
  }
  substituted += def.description.substr(pos);

  std::ostringstream user_prompt;
  user_prompt << "Function name: " << def.name << "\n"
              << "Function description: " << substituted;
  if (!def.examples.empty()) {
    user_prompt << "\nExamples:";
    for (const auto& example : def.examples) user_prompt << "\n" << display(example);
  }
  user_prompt << "\nGenerate the output fields for the function.";

  ParseOutcome outcome = strict_json(
      "Perform the described function and produce only the required output fields.",
      user_prompt.str(), def.output_schema, provider, config);
  return outcome.result;
}

Value invoke_external(const ExternalFunctionDef& def, const Value& args,
                      SharedVariables& shared_variables) {
  if (!def.callable) throw FunctionError(def.name + ": no native callable bound");

  for (auto it = args.begin(); it != args.end(); ++it) {
    bool known = std::any_of(def.params.begin(), def.params.end(),
                             [&](const ParamSpec& p) { return p.name == it.key(); });
    if (!known) throw FunctionError(def.name + ": unexpected argument '" + it.key() + "'");
  }

  Value coerced = Value::object();
  for (const auto& param : def.params) {
    if (!args.contains(param.name)) {
      throw FunctionError(def.name + ": missing argument '" + param.name + "'");
    }
    try {
      coerced[param.name] = coerce_value(args.at(param.name), param.type);
    } catch (const Error& e) {
      throw FunctionError(def.name + ": argument '" + param.name + "': " + e.what());
    }
  }

  std::optional<Value> returned;
  try {
    returned = def.callable(coerced, shared_variables);
  } catch (const std::exception& e) {
    throw FunctionError(def.name + ": " + e.what());
  }

  if (!returned || returned->is_null()) {
    return Value{{"Status", "Completed"}};
  }

  Value output = Value::object();
  if (def.output_fields.empty()) {
    output["Output"] = *returned;
    return output;
  }
  bool covers_all = returned->is_object() &&
                    std::all_of(def.output_fields.begin(), def.output_fields.end(),
                                [&](const OutputFieldSpec& f) { return returned->contains(f.name); });
  if (covers_all) {
    for (const auto& field : def.output_fields) output[field.name] = (*returned)[field.name];
    return output;
  }
  if (def.output_fields.size() == 1) {
    output[def.output_fields.front().name] = *returned;
    return output;
  }
  throw FunctionError(def.name + ": return value does not cover the declared output fields");
}

std::vector<EquippedFunction> filter_functions(const std::vector<EquippedFunction>& all_functions,
                                               const std::string& task, int top_k,
                                               const Ranker& ranker) {
  auto exempt = [](const EquippedFunction& fn) {
    return fn.is_compulsory() || fn.name() == "use_llm" || fn.name() == "end_task";
  };

  std::vector<std::size_t> rankable;
  for (std::size_t i = 0; i < all_functions.size(); ++i) {
    if (!exempt(all_functions[i])) rankable.push_back(i);
  }
  if (top_k < 0) top_k = 0;
  if (rankable.size() <= static_cast<std::size_t>(top_k)) return all_functions;

  std::vector<float> task_vec = ranker.embed(task);
  std::vector<std::pair<float, std::size_t>> scored;
  for (std::size_t idx : rankable) {
    const EquippedFunction& fn = all_functions[idx];
    std::vector<float> v = ranker.embed(fn.name() + ": " + fn.description());
    scored.emplace_back(cosine_similarity(v, task_vec), idx);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });

  std::set<std::size_t> kept;
  for (std::size_t i = 0; i < static_cast<std::size_t>(top_k) && i < scored.size(); ++i) {
    kept.insert(scored[i].second);
  }

  std::vector<EquippedFunction> out;
  for (std::size_t i = 0; i < all_functions.size(); ++i) {
    if (exempt(all_functions[i]) || kept.count(i)) out.push_back(all_functions[i]);
  }
  return out;
}

}  // namespace loom
