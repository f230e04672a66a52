#pragma once

#include "loom/memory.hpp"
#include "loom/parser.hpp"
#include "loom/provider.hpp"
#include "loom/schema.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace loom {

class Agent;

struct ParamSpec {
  std::string name;
  TypeExpr type = TypeExpr::simple(TypeExpr::Kind::Any);
  std::string description;
};

struct OutputFieldSpec {
  std::string name;
  TypeExpr type = TypeExpr::simple(TypeExpr::Kind::Any);
  std::string description;
};

// LLM-executed function. Input variables appear in the description as "<var>"
// or "<var: description>"; outputs are an OutputSchema in the usual format.
struct InternalFunctionDef {
  std::string name;
  std::string description;
  OutputSchema output_schema;
  std::vector<Value> examples;  // optional input/output maps, shown after the description
  bool is_compulsory = false;

  // Placeholders parsed from the description, in order of first appearance.
  // Nested angle brackets are rejected; duplicate names collapse to one.
  std::vector<ParamSpec> placeholders() const;
};

// Native function exposed to the agent. The callable receives the coerced
// arguments and the shared-variable store; returning std::nullopt yields the
// record output {Status: "Completed"} so the log stays informative without
// leaking bulk data.
using NativeCallable = std::function<std::optional<Value>(const Value& args, SharedVariables&)>;

struct ExternalFunctionDef {
  std::string name;
  std::string description;
  std::vector<ParamSpec> params;
  std::vector<OutputFieldSpec> output_fields;
  NativeCallable callable;
  bool wants_shared_variables = false;
  bool is_compulsory = false;
};

// Host-side signature description used to derive an ExternalFunctionDef,
// standing in for language-level reflection. Empty type texts mean "not
// annotated" and are omitted rather than fatal.
struct SignatureMeta {
  std::string name;
  std::vector<std::pair<std::string, std::string>> params;  // name -> type text ("" if untyped)
  std::string return_type;                                  // "" if none
  NativeCallable callable;
};

// Builds the function descriptor from a signature plus documentation text.
// Per-parameter descriptions come from "<name: desc>" markers in doc_text. A
// parameter named "shared_variables" is not exposed to the LLM; it only flags
// that the callable wants the store.
ExternalFunctionDef derive_external_metadata(const SignatureMeta& signature_meta,
                                             const std::string& doc_text);

// A callable available to an agent: internal (LLM-backed), external (native),
// or an inner agent wrapped behind a single instruction parameter.
class EquippedFunction {
 public:
  EquippedFunction() = default;
  explicit EquippedFunction(InternalFunctionDef def) : impl_(std::move(def)) {}
  explicit EquippedFunction(ExternalFunctionDef def) : impl_(std::move(def)) {}
  explicit EquippedFunction(std::shared_ptr<Agent> inner_agent)
      : impl_(std::move(inner_agent)) {}

  bool is_internal() const { return std::holds_alternative<InternalFunctionDef>(impl_); }
  bool is_external() const { return std::holds_alternative<ExternalFunctionDef>(impl_); }
  bool is_inner_agent() const { return std::holds_alternative<std::shared_ptr<Agent>>(impl_); }

  const InternalFunctionDef& internal() const { return std::get<InternalFunctionDef>(impl_); }
  const ExternalFunctionDef& external() const { return std::get<ExternalFunctionDef>(impl_); }
  const std::shared_ptr<Agent>& inner_agent() const {
    return std::get<std::shared_ptr<Agent>>(impl_);
  }

  std::string name() const;
  std::string description() const;
  bool is_compulsory() const;

  // Unified parameter view used by the parameter-generation step.
  std::vector<ParamSpec> params() const;

 private:
  std::variant<InternalFunctionDef, ExternalFunctionDef, std::shared_ptr<Agent>> impl_;
};

// Rendered text with exactly four sections: Name, Description, Input, Output.
struct FunctionCard {
  std::string text;
};

FunctionCard render_function_card(const EquippedFunction& fn);

// Substitutes args into the description placeholders and runs the structured
// call against the output schema. Extra or missing args are rejected before
// any provider call.
Value invoke_internal(const InternalFunctionDef& def, const Value& args, Provider& provider,
                      const ParseConfig& config = ParseConfig{});

// Type-checks args against the declared params, then calls the native
// callable. Failures are wrapped with the function name.
Value invoke_external(const ExternalFunctionDef& def, const Value& args,
                      SharedVariables& shared_variables);

// Compulsory functions and the built-ins use_llm/end_task always pass; the
// rest are ranked against the task (mapper: name + ": " + description) and
// truncated to top_k. Filtering only happens when the non-exempt count
// exceeds top_k; the output preserves the input order.
std::vector<EquippedFunction> filter_functions(const std::vector<EquippedFunction>& all_functions,
                                               const std::string& task, int top_k,
                                               const Ranker& ranker = Ranker{});

}  // namespace loom
