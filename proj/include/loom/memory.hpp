#pragma once

#include "loom/error.hpp"
#include "loom/value.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace loom {

class Agent;

// Key-value store shared between an agent and its equipped functions. Values
// may be arbitrarily large; they are never auto-included in prompts. Reading
// an absent name is an error, not a silent null.
class SharedVariables {
 public:
  const Value& get(const std::string& name) const;
  Value& get_mutable(const std::string& name);
  void set(const std::string& name, Value value);
  bool has(const std::string& name) const { return store_.contains(name); }
  std::vector<std::string> names() const;
  std::size_t size() const { return store_.size(); }

 private:
  Value store_ = Value::object();
};

// Prompt-augmenting template with <Name> placeholders resolved against the
// shared variables at render time, plus an optional host callable whose
// output is appended.
struct GlobalContextTemplate {
  std::string text;
  std::function<std::string(const Agent&)> dynamic_context;

  bool empty() const { return text.empty() && !dynamic_context; }
};

std::string render_global_context(const GlobalContextTemplate& tmpl,
                                  const SharedVariables& shared_variables,
                                  const Agent* agent = nullptr);

// Fixed-dimension embedding from hashed character trigrams, L2-normalized.
// Pure function; "" maps to the zero vector.
std::vector<float> embed_deterministic(const std::string& text);

// Cosine similarity; defined as 0 whenever either vector is zero.
float cosine_similarity(const std::vector<float>& a, const std::vector<float>& b);

// Embedding-based text ranker. The default embedder is the deterministic
// trigram one, keeping retrieval fully offline; a live embedding endpoint can
// be swapped in through `embed`.
struct Ranker {
  std::function<std::vector<float>(const std::string&)> embed = embed_deterministic;

  float score(const std::string& a, const std::string& b) const {
    return cosine_similarity(embed(a), embed(b));
  }
};

// One named abstraction space of memory with top-k ranker retrieval.
struct MemoryStore {
  std::vector<Value> items;
  int top_k = 5;
  std::function<std::string(const Value&)> mapper = [](const Value& v) { return display(v); };
  std::string approach = "retrieve_by_ranker";
  Ranker ranker;
};

// Items sorted by descending cosine similarity of mapper(item) vs task, ties
// broken by insertion order; at most top_k returned.
std::vector<Value> retrieve_by_ranker(const MemoryStore& store, const std::string& task);

// Named memory spaces. The reserved space "Function" configures equipped-
// function filtering (its mapper is fixed to name + ": " + description and is
// applied to the function list held by the agent, not to `items`).
struct MemoryBank {
  std::map<std::string, MemoryStore> spaces;

  MemoryStore& function_space();
  const MemoryStore* find(const std::string& name) const;
};

// Top-k retrieval across every non-"Function" space, rendered through each
// space's mapper. Empty spaces are omitted.
std::map<std::string, std::vector<std::string>> retrieve_task_memories(const MemoryBank& bank,
                                                                       const std::string& task);

}  // namespace loom
