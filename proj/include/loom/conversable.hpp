#pragma once

#include "loom/agent.hpp"
#include "loom/parser.hpp"
#include "loom/schema.hpp"

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace loom {

enum class Speaker { User, AgentReply };

// Chat wrapper over an agent: per-turn action execution, reply synthesis, a
// conversation log, a running summary, and structured persistent memory kept
// conformant to its schema by the parser.
class ConversableAgent {
 public:
  // The wrapped agent never keeps its use_llm built-in: actions and replying
  // are separate phases.
  explicit ConversableAgent(std::shared_ptr<Agent> agent,
                            OutputSchema persistent_memory_schema = OutputSchema{});

  // One turn, in four phases: (1) run the agent on the user message to
  // execute any needed equipped functions, (2) synthesize the reply from the
  // action summary, global context, running summary, conversation and
  // persistent memory, (3) update the running summary, (4) append both turns
  // and update the persistent memory against its schema. Returns the reply.
  std::string chat(const std::string& user_message);

  Agent& agent() { return *agent_; }
  const std::vector<std::pair<Speaker, std::string>>& conversation() const {
    return conversation_;
  }
  const std::string& summary() const { return summary_; }
  const Value& persistent_memory() const { return persistent_memory_; }
  const OutputSchema& persistent_memory_schema() const { return persistent_memory_schema_; }

  std::string render_conversation() const;

 private:
  std::string synthesize_reply(const std::string& user_message, const std::string& action_summary);
  void update_summary(const std::string& user_message, const std::string& reply);
  void update_persistent_memory(const std::string& user_message, const std::string& reply);

  std::shared_ptr<Agent> agent_;
  OutputSchema persistent_memory_schema_;
  Value persistent_memory_ = Value::object();
  std::vector<std::pair<Speaker, std::string>> conversation_;
  std::string summary_;
};

}  // namespace loom
