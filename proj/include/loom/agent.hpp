#pragma once

#include "loom/function.hpp"
#include "loom/memory.hpp"
#include "loom/parser.hpp"
#include "loom/provider.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace loom {

struct AgentConfig {
  std::string name;
  std::string description;
  int max_subtasks = 5;
  int summarise_subtasks_count = 5;
  bool default_to_llm = true;
  bool verbose = false;
  int top_k_functions = 5;
};

// One completed subtask: the function-call key "name(param=value, ...)" and
// the output map. Observation/Thoughts are never persisted here.
struct SubtaskRecord {
  std::string key;
  Value output;  // object: field -> value
};

// Step-1 outcome of the two-step subtask selection.
struct SubtaskDecision {
  std::string observation;
  std::string thoughts;
  std::string current_subtask;
  std::string function_name;
};

// The agent core: identity, equipped functions (with the built-ins use_llm
// and end_task), the two-step choose/params selection loop, the Subtasks
// Completed log, shared variables, global context and memory bank.
class Agent {
 public:
  explicit Agent(AgentConfig config, std::shared_ptr<Provider> provider = nullptr,
                 ParseConfig parse_config = ParseConfig{});

  // -- setup ----------------------------------------------------------------

  // Appends functions in order. Name collisions (including with built-ins)
  // raise DuplicateFunctionNameError.
  void assign_functions(std::vector<EquippedFunction> defs);
  void assign_functions(std::vector<ExternalFunctionDef> defs);
  void assign_functions(std::vector<InternalFunctionDef> defs);

  // Wraps each inner agent as an equipped function whose single input is an
  // instruction text. Raises CycleDetectedError when the assignment would
  // make this agent reachable from the inner agent.
  void assign_agents(std::vector<std::shared_ptr<Agent>> inner_agents);

  void set_provider(std::shared_ptr<Provider> provider) { provider_ = std::move(provider); }
  std::shared_ptr<Provider> provider_ptr() const { return provider_; }
  Provider& provider() const;

  void set_global_context(GlobalContextTemplate tmpl) { global_context_ = std::move(tmpl); }
  GlobalContextTemplate& global_context() { return global_context_; }

  // Replaces the shared-variable store; a meta agent passes its own store so
  // inner agents mutate it directly.
  void share_variables_with(std::shared_ptr<SharedVariables> store);
  SharedVariables& shared_variables() { return *shared_variables_; }
  const SharedVariables& shared_variables() const { return *shared_variables_; }
  std::shared_ptr<SharedVariables> shared_variables_ptr() { return shared_variables_; }

  MemoryBank& memory_bank() { return memory_bank_; }

  // Context handed down by a meta agent before an inner-agent run.
  void set_parent_context(std::string text) { parent_context_ = std::move(text); }

  // Removes the use_llm built-in (the conversable wrapper never hands the raw
  // LLM to the action phase).
  void remove_use_llm();

  void set_verbose(bool verbose) { config_.verbose = verbose; }

  // -- the agent loop -------------------------------------------------------

  // Assigns the task, filters the equipped functions once, then loops
  // choose -> params -> execute until end_task or max_subtasks new records.
  // Returns the records created by this run.
  std::vector<SubtaskRecord> run(const std::string& task);

  // One structured call deciding the next subtask and equipped function. The
  // function name is constrained to the filtered set via an enum; unknown
  // names go through the normal error-feedback retry.
  SubtaskDecision choose_next_subtask();

  // One structured call generating the chosen function's typed parameters.
  // The prompt contains only that function's card, never the full list.
  // Zero-parameter functions return {} without a provider call.
  Value generate_params(const SubtaskDecision& decision, const EquippedFunction& fn);

  // Dispatches to the chosen function and appends the record. end_task sets
  // task_completed and returns nullopt without a record. A function failure
  // is recorded with an Error output field, then rethrown.
  std::optional<SubtaskRecord> execute_subtask(const SubtaskDecision& decision, const Value& args);

  // Replies based on the Subtasks Completed log; uses the assigned task as
  // the question when no query is given. Does not append to the log.
  std::string reply_user(const std::optional<std::string>& query = std::nullopt);

  // Clears the log and completion flag; shared variables, global context,
  // memory bank and functions survive.
  void reset();

  std::string status() const;

  // Replaces the oldest records beyond summarise_subtasks_count with a single
  // summary record produced by one structured call.
  void summarise_subtasks();

  // -- accessors ------------------------------------------------------------

  const AgentConfig& config() const { return config_; }
  const ParseConfig& parse_config() const { return parse_config_; }
  const std::vector<EquippedFunction>& functions() const { return functions_; }
  std::vector<std::shared_ptr<Agent>> inner_agents() const;
  const std::string& assigned_task() const { return assigned_task_; }
  bool task_completed() const { return task_completed_; }
  const std::vector<SubtaskRecord>& subtasks_completed() const { return subtasks_completed_; }

  // Functions surviving memory-based filtering for this task.
  std::vector<EquippedFunction> filtered_functions(const std::string& task) const;

 private:
  const EquippedFunction& find_function(const std::string& name) const;
  Value run_use_llm(const SubtaskDecision& decision);
  Value run_inner_agent(const std::shared_ptr<Agent>& inner, const Value& args);
  void append_record(SubtaskRecord record);
  std::string identity_prompt() const;
  std::string rendered_global_context() const;
  std::string memories_block(const std::string& task) const;
  std::string log_block() const;
  std::string make_record_key(const SubtaskDecision& decision, const EquippedFunction& fn,
                              const Value& args) const;

  AgentConfig config_;
  std::shared_ptr<Provider> provider_;
  ParseConfig parse_config_;
  std::vector<EquippedFunction> functions_;
  std::vector<EquippedFunction> active_functions_;  // filtered set for the current run
  std::string assigned_task_;
  std::string parent_context_;
  std::vector<SubtaskRecord> subtasks_completed_;
  std::shared_ptr<SharedVariables> shared_variables_;
  GlobalContextTemplate global_context_;
  MemoryBank memory_bank_;
  bool task_completed_ = false;
  std::size_t total_records_ever_ = 0;
};

// ok iff candidate is not meta and meta is not reachable from candidate's
// inner-agent edges; otherwise throws CycleDetectedError with the offending
// path.
void validate_hierarchy(const Agent& meta, const std::shared_ptr<Agent>& candidate_inner);

// Validates the hierarchy and wraps the inner agent as an equipped function.
// On invocation the inner agent is reset, shares the meta's shared variables
// by reference, sees the meta's assigned task and log as context, runs the
// instruction, and returns its consolidated reply_user text.
EquippedFunction wrap_inner_agent(Agent& meta, std::shared_ptr<Agent> inner_agent);

}  // namespace loom
