#pragma once

#include "loom/agent.hpp"
#include "loom/function.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace loom {

// Runs one CLI invocation. Exit codes: 0 success, 1 domain error, 2 usage
// error (unknown flags, missing files, bad config).
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err);

// Functions an agent config can reference by name: small arithmetic and
// inventory helpers plus one internal sentence function.
std::vector<EquippedFunction> demo_function_registry();

// Builds an agent from a config document with fields: name, description,
// max_subtasks, default_to_llm, global_context, shared_variables (initial
// values), functions (registry names). Optional: summarise_subtasks_count,
// top_k_functions, verbose, memory_bank {space: [items]}, persistent_memory
// {field: description} for the chat wrapper.
std::shared_ptr<Agent> agent_from_config(const Value& doc);

}  // namespace loom
