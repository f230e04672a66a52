#include "loom/agent.hpp"

#include <algorithm>
#include <iostream>
#include <set>
#include <sstream>

namespace loom {
namespace {

InternalFunctionDef make_use_llm() {
  InternalFunctionDef def;
  def.name = "use_llm";
  def.description =
      "Used to answer the current subtask with the agent's own knowledge and persona, for "
      "anything the other equipped functions cannot do";
  def.output_schema.add("Output", "detailed answer for the current subtask, type: str");
  return def;
}

ExternalFunctionDef make_end_task() {
  ExternalFunctionDef def;
  def.name = "end_task";
  def.description = "Use only when the assigned task is complete, to end the current task";
  return def;
}

std::string param_field_description(const ParamSpec& param) {
  std::string description =
      param.description.empty() ? "value for input parameter '" + param.name + "'"
                                : param.description;
  if (param.type.kind != TypeExpr::Kind::Any) description += ", type: " + to_string(param.type);
  return description;
}

}  // namespace

Agent::Agent(AgentConfig config, std::shared_ptr<Provider> provider, ParseConfig parse_config)
    : config_(std::move(config)),
      provider_(std::move(provider)),
      parse_config_(std::move(parse_config)),
      shared_variables_(std::make_shared<SharedVariables>()) {
  if (config_.name.empty()) throw SchemaError("agent name must be non-empty");
  if (config_.default_to_llm) functions_.emplace_back(make_use_llm());
  functions_.emplace_back(make_end_task());
  memory_bank_.function_space().top_k = config_.top_k_functions;
}

Provider& Agent::provider() const {
  if (!provider_) throw Error("agent '" + config_.name + "' has no provider set");
  return *provider_;
}

void Agent::share_variables_with(std::shared_ptr<SharedVariables> store) {
  if (!store) throw Error("shared-variable store must not be null");
  shared_variables_ = std::move(store);
}

void Agent::remove_use_llm() {
  functions_.erase(std::remove_if(functions_.begin(), functions_.end(),
                                  [](const EquippedFunction& f) { return f.name() == "use_llm"; }),
                   functions_.end());
  config_.default_to_llm = false;
}

void Agent::assign_functions(std::vector<EquippedFunction> defs) {
  for (auto& def : defs) {
    const std::string name = def.name();
    bool taken = std::any_of(functions_.begin(), functions_.end(),
                             [&](const EquippedFunction& f) { return f.name() == name; });
    if (taken) throw DuplicateFunctionNameError(name);
    if (def.is_internal()) {
      def.internal().placeholders();  // rejects malformed placeholder grammar
      if (def.internal().output_schema.empty()) {
        throw SchemaError("internal function '" + name + "' needs a non-empty output schema");
      }
    }
    functions_.push_back(std::move(def));
  }
}

void Agent::assign_functions(std::vector<ExternalFunctionDef> defs) {
  std::vector<EquippedFunction> wrapped;
  for (auto& def : defs) wrapped.emplace_back(std::move(def));
  assign_functions(std::move(wrapped));
}

void Agent::assign_functions(std::vector<InternalFunctionDef> defs) {
  std::vector<EquippedFunction> wrapped;
  for (auto& def : defs) wrapped.emplace_back(std::move(def));
  assign_functions(std::move(wrapped));
}

void Agent::assign_agents(std::vector<std::shared_ptr<Agent>> inner_agents) {
  for (auto& inner : inner_agents) {
    assign_functions(std::vector<EquippedFunction>{wrap_inner_agent(*this, std::move(inner))});
  }
}

std::vector<std::shared_ptr<Agent>> Agent::inner_agents() const {
  std::vector<std::shared_ptr<Agent>> out;
  for (const auto& fn : functions_) {
    if (fn.is_inner_agent()) out.push_back(fn.inner_agent());
  }
  return out;
}

std::vector<EquippedFunction> Agent::filtered_functions(const std::string& task) const {
  const MemoryStore* fn_space = memory_bank_.find("Function");
  int top_k = fn_space ? fn_space->top_k : config_.top_k_functions;
  Ranker ranker = fn_space ? fn_space->ranker : Ranker{};
  return filter_functions(functions_, task, top_k, ranker);
}

std::string Agent::identity_prompt() const {
  return "You are an agent named " + config_.name + ". " + config_.description;
}

std::string Agent::rendered_global_context() const {
  if (global_context_.empty()) return "";
  return render_global_context(global_context_, *shared_variables_, this);
}

std::string Agent::memories_block(const std::string& task) const {
  auto memories = retrieve_task_memories(memory_bank_, task);
  if (memories.empty()) return "";
  std::ostringstream out;
  out << "Relevant memories:\n";
  for (const auto& [space, items] : memories) {
    out << space << ":\n";
    for (const auto& item : items) out << "- " << item << "\n";
  }
  return out.str();
}

std::string Agent::log_block() const {
  if (subtasks_completed_.empty()) return "Subtasks Completed: None\n";
  std::ostringstream out;
  out << "Subtasks Completed:\n";
  for (const auto& record : subtasks_completed_) {
    out << "- " << record.key << ": " << display(record.output) << "\n";
  }
  return out.str();
}

SubtaskDecision Agent::choose_next_subtask() {
  if (assigned_task_.empty()) throw Error("agent '" + config_.name + "' has no assigned task");
  std::vector<EquippedFunction> available =
      active_functions_.empty() ? filtered_functions(assigned_task_) : active_functions_;

  std::vector<std::string> names;
  for (const auto& fn : available) names.push_back(fn.name());

  OutputSchema schema;
  schema.add("Observation",
             "Reflect on what has been done so far for the assigned task based on the subtasks "
             "completed, type: str");
  schema.add("Thoughts",
             "Brainstorm how to complete the remainder of the assigned task, given only the "
             "observation, type: str");
  schema.add("Current Subtask",
             "The next subtask to do in detail, which can be completed by exactly one equipped "
             "function, type: str");
  schema.add("Equipped Function Name",
             "Name of the equipped function to use for the current subtask, type: " +
                 to_string(TypeExpr::enum_of(names)));

  std::ostringstream user;
  if (!parent_context_.empty()) {
    user << "Context from the parent agent:\n" << parent_context_ << "\n";
  }
  std::string context = rendered_global_context();
  if (!context.empty()) user << "Global Context:\n" << context << "\n\n";
  std::string memories = memories_block(assigned_task_);
  if (!memories.empty()) user << memories << "\n";
  user << "Equipped Functions available:\n";
  for (const auto& fn : available) user << render_function_card(fn).text << "\n\n";
  user << "Assigned Task: " << assigned_task_ << "\n\n"
       << log_block() << "\n"
       << "Decide the next subtask to complete the assigned task and name the equipped function "
          "for it.";

  std::string system = identity_prompt() +
                       "\nYou break the assigned task into subtasks and complete them one at a "
                       "time with the equipped functions.";

  ParseOutcome outcome = strict_json(system, user.str(), schema, provider(), parse_config_);

  SubtaskDecision decision;
  decision.observation = outcome.result["Observation"].get<std::string>();
  decision.thoughts = outcome.result["Thoughts"].get<std::string>();
  decision.current_subtask = outcome.result["Current Subtask"].get<std::string>();
  decision.function_name = outcome.result["Equipped Function Name"].get<std::string>();
  if (std::find(names.begin(), names.end(), decision.function_name) == names.end()) {
    throw UnknownFunctionError(decision.function_name);
  }

  if (config_.verbose) {
    std::cout << "Observation: " << decision.observation << "\n"
              << "Thoughts: " << decision.thoughts << "\n"
              << "Current Subtask: " << decision.current_subtask << "\n"
              << "Equipped Function: " << decision.function_name << "\n";
  }
  return decision;
}

Value Agent::generate_params(const SubtaskDecision& decision, const EquippedFunction& fn) {
  std::vector<ParamSpec> params = fn.params();
  if (params.empty()) return Value::object();

  OutputSchema schema;
  for (const auto& param : params) schema.add(param.name, param_field_description(param));

  std::ostringstream user;
  std::string context = rendered_global_context();
  if (!context.empty()) user << "Global Context:\n" << context << "\n\n";
  user << "Equipped Function:\n"
       << render_function_card(fn).text << "\n\n"
       << "Current Subtask: " << decision.current_subtask << "\n\n"
       << "Generate a value for every input parameter of the equipped function to complete the "
          "current subtask.";

  std::string system =
      identity_prompt() + "\nGenerate the input parameters for the chosen equipped function.";

  ParseOutcome outcome = strict_json(system, user.str(), schema, provider(), parse_config_);
  return outcome.result;
}

std::string Agent::make_record_key(const SubtaskDecision& decision, const EquippedFunction& fn,
                                   const Value& args) const {
  std::ostringstream key;
  key << fn.name() << "(";
  if (fn.name() == "use_llm") {
    key << "instruction=" << display_elided(Value(decision.current_subtask));
  } else {
    const std::vector<ParamSpec> params = fn.params();
    bool first = true;
    for (const auto& param : params) {
      if (!args.contains(param.name)) continue;
      if (!first) key << ", ";
      first = false;
      key << param.name << "=" << display_elided(args.at(param.name));
    }
  }
  key << ")";
  return key.str();
}

void Agent::append_record(SubtaskRecord record) {
  std::string key = record.key;
  int suffix = 2;
  auto key_taken = [&](const std::string& candidate) {
    return std::any_of(subtasks_completed_.begin(), subtasks_completed_.end(),
                       [&](const SubtaskRecord& r) { return r.key == candidate; });
  };
  while (key_taken(record.key)) {
    record.key = key + "_" + std::to_string(suffix++);
  }
  subtasks_completed_.push_back(std::move(record));
  ++total_records_ever_;
}

Value Agent::run_use_llm(const SubtaskDecision& decision) {
  OutputSchema schema;
  schema.add("Output", "detailed answer for the current subtask, type: str");

  std::ostringstream user;
  std::string context = rendered_global_context();
  if (!context.empty()) user << "Global Context:\n" << context << "\n\n";
  std::string memories = memories_block(assigned_task_.empty() ? decision.current_subtask
                                                               : assigned_task_);
  if (!memories.empty()) user << memories << "\n";
  user << log_block() << "\n"
       << "Current Subtask: " << decision.current_subtask << "\n"
       << "Answer the current subtask.";

  ParseOutcome outcome = strict_json(
      identity_prompt() + "\nAnswer the subtask with your own knowledge, in your persona.",
      user.str(), schema, provider(), parse_config_);
  return outcome.result;
}

Value Agent::run_inner_agent(const std::shared_ptr<Agent>& inner, const Value& args) {
  if (!args.contains("instruction") || !args.at("instruction").is_string()) {
    throw FunctionError(inner->config().name + ": inner agent needs a text 'instruction'");
  }
  const std::string instruction = args.at("instruction").get<std::string>();

  inner->reset();
  inner->share_variables_with(shared_variables_);
  if (!inner->provider_ptr()) inner->set_provider(provider_);
  std::ostringstream context;
  context << "Assigned task of the parent agent: " << assigned_task_ << "\n"
          << "Subtasks completed by the parent agent:\n"
          << log_block();
  inner->set_parent_context(context.str());

  inner->run(instruction);
  std::string reply = inner->reply_user(instruction);
  return Value{{"Output", reply}};
}

const EquippedFunction& Agent::find_function(const std::string& name) const {
  const std::vector<EquippedFunction>& pool =
      active_functions_.empty() ? functions_ : active_functions_;
  for (const auto& fn : pool) {
    if (fn.name() == name) return fn;
  }
  throw UnknownFunctionError(name);
}

std::optional<SubtaskRecord> Agent::execute_subtask(const SubtaskDecision& decision,
                                                    const Value& args) {
  const EquippedFunction& fn = find_function(decision.function_name);

  if (fn.name() == "end_task") {
    task_completed_ = true;
    return std::nullopt;
  }

  SubtaskRecord record{make_record_key(decision, fn, args), Value::object()};
  try {
    if (fn.name() == "use_llm") {
      record.output = run_use_llm(decision);
    } else if (fn.is_internal()) {
      record.output = invoke_internal(fn.internal(), args, provider(), parse_config_);
    } else if (fn.is_external()) {
      record.output = invoke_external(fn.external(), args, *shared_variables_);
    } else {
      record.output = run_inner_agent(fn.inner_agent(), args);
    }
  } catch (const Error& e) {
    record.output = Value{{"Error", e.what()}};
    append_record(std::move(record));
    throw;
  }

  if (config_.verbose) {
    std::cout << record.key << " -> " << display(record.output) << "\n";
  }
  append_record(record);
  return subtasks_completed_.back();
}

std::vector<SubtaskRecord> Agent::run(const std::string& task) {
  provider();  // provider must be set before entering the loop
  assigned_task_ = task;
  task_completed_ = false;
  active_functions_ = filtered_functions(task);  // filtering happens once per run

  std::vector<SubtaskRecord> created;
  while (static_cast<int>(created.size()) < config_.max_subtasks && !task_completed_) {
    SubtaskDecision decision = choose_next_subtask();
    const EquippedFunction& fn = find_function(decision.function_name);
    Value args = generate_params(decision, fn);
    std::optional<SubtaskRecord> record = execute_subtask(decision, args);
    if (!record) break;
    created.push_back(*record);
    if (static_cast<int>(subtasks_completed_.size()) > config_.summarise_subtasks_count) {
      summarise_subtasks();
    }
  }
  return created;
}

std::string Agent::reply_user(const std::optional<std::string>& query) {
  OutputSchema schema;
  schema.add("Response", "reply to the question, type: str");

  const std::string question = query.value_or(assigned_task_);
  std::ostringstream user;
  user << log_block() << "\n"
       << "Question: " << question << "\n"
       << "Reply to the question based on what has been done.";

  ParseOutcome outcome =
      strict_json(identity_prompt(), user.str(), schema, provider(), parse_config_);
  return outcome.result["Response"].get<std::string>();
}

void Agent::reset() {
  subtasks_completed_.clear();
  active_functions_.clear();
  assigned_task_.clear();
  task_completed_ = false;
  total_records_ever_ = 0;
}

std::string Agent::status() const {
  std::ostringstream out;
  out << "Agent Name: " << config_.name << "\n";
  out << "Agent Description: " << config_.description << "\n";
  out << "Equipped Functions: ";
  for (std::size_t i = 0; i < functions_.size(); ++i) {
    if (i) out << ", ";
    out << functions_[i].name();
  }
  out << "\n";

  out << "Shared Variables: ";
  std::vector<std::string> names = shared_variables_->names();
  if (names.empty()) {
    out << "None";
  } else {
    // Oversized values stay out of the status text; only their names show.
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (i) out << ", ";
      std::string rendered = display(shared_variables_->get(names[i]));
      if (rendered.size() > 200) {
        out << names[i] << ": <elided>";
      } else {
        out << names[i] << ": " << rendered;
      }
    }
  }
  out << "\n";

  out << "Global Context: " << (global_context_.text.empty() ? "None" : global_context_.text)
      << "\n";
  out << "Assigned Task: " << (assigned_task_.empty() ? "None" : assigned_task_) << "\n";
  out << log_block();
  out << "Task Completed: " << (task_completed_ ? "true" : "false") << "\n";
  return out.str();
}

void Agent::summarise_subtasks() {
  if (static_cast<int>(subtasks_completed_.size()) <= config_.summarise_subtasks_count) return;

  const std::size_t keep = static_cast<std::size_t>(config_.summarise_subtasks_count);
  const std::size_t fold = subtasks_completed_.size() - keep;

  std::ostringstream rendered;
  for (std::size_t i = 0; i < fold; ++i) {
    rendered << "- " << subtasks_completed_[i].key << ": "
             << display(subtasks_completed_[i].output) << "\n";
  }

  OutputSchema schema;
  schema.add("Summary", "concise summary of the completed subtasks, type: str");
  ParseOutcome outcome = strict_json(
      identity_prompt(),
      "Summarise the following completed subtasks, keeping the information needed to continue "
      "the assigned task:\n" +
          rendered.str(),
      schema, provider(), parse_config_);

  SubtaskRecord summary;
  summary.key = "summary_of_subtasks_1.." + std::to_string(total_records_ever_ - keep);
  summary.output = Value{{"Summary", outcome.result["Summary"].get<std::string>()}};

  std::vector<SubtaskRecord> next;
  next.push_back(std::move(summary));
  for (std::size_t i = fold; i < subtasks_completed_.size(); ++i) {
    next.push_back(std::move(subtasks_completed_[i]));
  }
  subtasks_completed_ = std::move(next);
}

void validate_hierarchy(const Agent& meta, const std::shared_ptr<Agent>& candidate_inner) {
  if (!candidate_inner) throw Error("inner agent must not be null");
  if (candidate_inner.get() == &meta) {
    throw CycleDetectedError({meta.config().name, meta.config().name});
  }

  // Depth-first search for meta over the candidate's inner-agent edges.
  std::vector<std::string> path{meta.config().name, candidate_inner->config().name};
  std::set<const Agent*> visited;
  std::function<bool(const Agent&)> reaches_meta = [&](const Agent& node) -> bool {
    if (!visited.insert(&node).second) return false;
    for (const auto& child : node.inner_agents()) {
      path.push_back(child->config().name);
      if (child.get() == &meta || reaches_meta(*child)) return true;
      path.pop_back();
    }
    return false;
  };
  if (reaches_meta(*candidate_inner)) throw CycleDetectedError(path);
}

EquippedFunction wrap_inner_agent(Agent& meta, std::shared_ptr<Agent> inner_agent) {
  validate_hierarchy(meta, inner_agent);
  return EquippedFunction(std::move(inner_agent));
}

}  // namespace loom
