#include "loom/memory.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <numeric>

namespace loom {
namespace {

// Large enough that hashed-trigram collisions stay rare for prompt-sized
// texts; at 256 the collision noise can outweigh a one-trigram signal.
constexpr std::size_t kEmbeddingDim = 4096;

std::uint32_t fnv1a(const char* data, std::size_t size) {
  std::uint32_t h = 2166136261u;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 16777619u;
  }
  return h;
}

}  // namespace

const Value& SharedVariables::get(const std::string& name) const {
  if (!store_.contains(name)) throw MissingSharedVariableError(name);
  return store_.at(name);
}

Value& SharedVariables::get_mutable(const std::string& name) {
  if (!store_.contains(name)) throw MissingSharedVariableError(name);
  return store_.at(name);
}

void SharedVariables::set(const std::string& name, Value value) {
  store_[name] = std::move(value);
}

std::vector<std::string> SharedVariables::names() const {
  std::vector<std::string> out;
  for (auto it = store_.begin(); it != store_.end(); ++it) out.push_back(it.key());
  return out;
}

std::string render_global_context(const GlobalContextTemplate& tmpl,
                                  const SharedVariables& shared_variables, const Agent* agent) {
  std::string out;
  const std::string& text = tmpl.text;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t open = text.find('<', pos);
    if (open == std::string::npos) {
      out += text.substr(pos);
      break;
    }
    std::size_t close = text.find('>', open + 1);
    if (close == std::string::npos) {
      out += text.substr(pos);
      break;
    }
    out += text.substr(pos, open - pos);
    std::string name = text.substr(open + 1, close - open - 1);
    if (!shared_variables.has(name)) throw UnresolvedPlaceholderError(name);
    out += display(shared_variables.get(name));
    pos = close + 1;
  }
  if (tmpl.dynamic_context && agent) {
    std::string dynamic = tmpl.dynamic_context(*agent);
    if (!dynamic.empty()) {
      if (!out.empty()) out += "\n";
      out += dynamic;
    }
  }
  return out;
}

std::vector<float> embed_deterministic(const std::string& text) {
  std::vector<float> v(kEmbeddingDim, 0.0f);
  if (text.empty()) return v;
  std::string folded;
  folded.reserve(text.size());
  for (char c : text) {
    folded += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (folded.size() < 3) {
    v[fnv1a(folded.data(), folded.size()) % kEmbeddingDim] += 1.0f;
  } else {
    for (std::size_t i = 0; i + 3 <= folded.size(); ++i) {
      v[fnv1a(folded.data() + i, 3) % kEmbeddingDim] += 1.0f;
    }
  }
  float norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0f));
  if (norm > 0.0f) {
    for (float& x : v) x /= norm;
  }
  return v;
}

float cosine_similarity(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size() || a.empty()) return 0.0f;
  float dot = 0.0f, na = 0.0f, nb = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0f || nb == 0.0f) return 0.0f;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<Value> retrieve_by_ranker(const MemoryStore& store, const std::string& task) {
  std::vector<float> task_vec = store.ranker.embed(task);
  std::vector<std::pair<float, std::size_t>> scored;
  scored.reserve(store.items.size());
  for (std::size_t i = 0; i < store.items.size(); ++i) {
    scored.emplace_back(cosine_similarity(store.ranker.embed(store.mapper(store.items[i])), task_vec),
                        i);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });

  std::size_t count = std::min<std::size_t>(store.items.size(),
                                            store.top_k < 1 ? 0 : static_cast<std::size_t>(store.top_k));
  std::vector<Value> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(store.items[scored[i].second]);
  return out;
}

MemoryStore& MemoryBank::function_space() {
  return spaces["Function"];
}

const MemoryStore* MemoryBank::find(const std::string& name) const {
  auto it = spaces.find(name);
  return it == spaces.end() ? nullptr : &it->second;
}

std::map<std::string, std::vector<std::string>> retrieve_task_memories(const MemoryBank& bank,
                                                                       const std::string& task) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [name, store] : bank.spaces) {
    if (name == "Function" || store.items.empty()) continue;
    std::vector<std::string> rendered;
    for (const Value& item : retrieve_by_ranker(store, task)) {
      rendered.push_back(store.mapper(item));
    }
    out[name] = std::move(rendered);
  }
  return out;
}

}  // namespace loom
