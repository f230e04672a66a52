#include "loom/conversable.hpp"

#include <sstream>

namespace loom {
namespace {

// Rethrows phase errors with the phase named, keeping the original text.
[[noreturn]] void fail_phase(const std::string& phase, const Error& e) {
  throw Error("chat " + phase + " phase: " + e.what());
}

}  // namespace

ConversableAgent::ConversableAgent(std::shared_ptr<Agent> agent,
                                   OutputSchema persistent_memory_schema)
    : agent_(std::move(agent)), persistent_memory_schema_(std::move(persistent_memory_schema)) {
  if (!agent_) throw Error("conversable agent needs an agent");
  agent_->remove_use_llm();
  for (const auto& [name, spec] : persistent_memory_schema_.fields()) {
    persistent_memory_[name] = "";
  }
}

std::string ConversableAgent::render_conversation() const {
  if (conversation_.empty()) return "None";
  std::ostringstream out;
  for (const auto& [speaker, text] : conversation_) {
    out << (speaker == Speaker::User ? "User: " : "Agent: ") << text << "\n";
  }
  return out.str();
}

std::string ConversableAgent::chat(const std::string& user_message) {
  // Phase 1: perform the actions needed for the user's message.
  agent_->reset();
  std::vector<SubtaskRecord> actions;
  try {
    actions = agent_->run(user_message);
  } catch (const Error& e) {
    fail_phase("action", e);
  }
  std::ostringstream action_summary;
  if (actions.empty()) {
    action_summary << "None";
  } else {
    for (const auto& record : actions) {
      action_summary << "- " << record.key << ": " << display(record.output) << "\n";
    }
  }

  // Phase 2: reply to the user.
  std::string reply;
  try {
    reply = synthesize_reply(user_message, action_summary.str());
  } catch (const Error& e) {
    fail_phase("reply", e);
  }

  // Phase 3: update the running summary.
  try {
    update_summary(user_message, reply);
  } catch (const Error& e) {
    fail_phase("summary", e);
  }

  // Phase 4: append both turns, then update the persistent memory.
  conversation_.emplace_back(Speaker::User, user_message);
  conversation_.emplace_back(Speaker::AgentReply, reply);
  if (!persistent_memory_schema_.empty()) {
    try {
      update_persistent_memory(user_message, reply);
    } catch (const Error& e) {
      fail_phase("persistent-memory", e);
    }
  }
  return reply;
}

std::string ConversableAgent::synthesize_reply(const std::string& user_message,
                                               const std::string& action_summary) {
  OutputSchema schema;
  schema.add("Response", "reply to the user, type: str");

  std::ostringstream system;
  system << "You are an agent named " << agent_->config().name << ". "
         << agent_->config().description << "\nYou are chatting with a user.";
  std::string context = agent_->global_context().empty()
                            ? ""
                            : render_global_context(agent_->global_context(),
                                                    agent_->shared_variables(), agent_.get());
  if (!context.empty()) system << "\nGlobal Context:\n" << context;

  std::ostringstream user;
  user << "Summary of conversation so far: " << (summary_.empty() ? "None" : summary_) << "\n\n"
       << "Past conversation:\n" << render_conversation() << "\n"
       << "Persistent memory:\n" << display(persistent_memory_) << "\n\n"
       << "Actions done for the latest user message:\n" << action_summary << "\n\n"
       << "Latest user message: " << user_message << "\n"
       << "Reply to the user, referencing the actions done where relevant.";

  ParseOutcome outcome =
      strict_json(system.str(), user.str(), schema, agent_->provider(), agent_->parse_config());
  return outcome.result["Response"].get<std::string>();
}

void ConversableAgent::update_summary(const std::string& user_message, const std::string& reply) {
  OutputSchema schema;
  schema.add("Summary", "updated summary of the entire conversation, type: str");

  std::ostringstream user;
  user << "Current summary of the conversation: " << (summary_.empty() ? "None" : summary_)
       << "\n\nLatest turns:\nUser: " << user_message << "\nAgent: " << reply
       << "\n\nUpdate the summary of the conversation to include the latest turns.";

  ParseOutcome outcome = strict_json("You maintain a concise summary of a conversation.",
                                     user.str(), schema, agent_->provider(),
                                     agent_->parse_config());
  summary_ = outcome.result["Summary"].get<std::string>();
}

void ConversableAgent::update_persistent_memory(const std::string& user_message,
                                                const std::string& reply) {
  std::ostringstream user;
  user << "Current persistent memory:\n" << display(persistent_memory_) << "\n\n"
       << "Latest turns:\nUser: " << user_message << "\nAgent: " << reply
       << "\n\nUpdate every persistent memory field based on the conversation so far.";

  ParseOutcome outcome = strict_json("You maintain the persistent memory of a conversation.",
                                     user.str(), persistent_memory_schema_, agent_->provider(),
                                     agent_->parse_config());
  persistent_memory_ = outcome.result;
}

}  // namespace loom
