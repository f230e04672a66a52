#pragma once

#include "loom/error.hpp"
#include "loom/value.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace loom {

// One completion call as seen by a provider.
struct ProviderCall {
  std::string system_prompt;
  std::string user_prompt;
  std::string response;
};

// String-in/string-out completion contract. Every LLM interaction in the
// framework goes through this interface; the transcript records each call in
// order so tests can assert on exactly what was prompted.
class Provider {
 public:
  virtual ~Provider() = default;

  std::string complete(const std::string& system_prompt, const std::string& user_prompt);

  const std::vector<ProviderCall>& transcript() const { return transcript_; }
  std::size_t calls_made() const { return transcript_.size(); }

 protected:
  virtual std::string do_complete(const std::string& system_prompt,
                                  const std::string& user_prompt) = 0;

 private:
  std::vector<ProviderCall> transcript_;
};

// One record of a scripted fixture: the canned response, optionally guarded
// by a substring the user prompt must contain.
struct FixtureRecord {
  std::optional<std::string> expect_substring;
  std::string response;
};

// Deterministic test double. Records are consumed strictly in order; running
// past the end raises FixtureExhaustedError, and a failed substring
// expectation raises ExpectationFailedError (a harness failure, not an agent
// failure).
class ScriptedProvider : public Provider {
 public:
  ScriptedProvider() = default;
  explicit ScriptedProvider(std::vector<FixtureRecord> records) : records_(std::move(records)) {}

  void add(std::string response) { records_.push_back({std::nullopt, std::move(response)}); }
  void add(std::string expect_substring, std::string response) {
    records_.push_back({std::move(expect_substring), std::move(response)});
  }

  std::size_t remaining() const { return records_.size() - next_; }
  bool exhausted() const { return next_ >= records_.size(); }

  // Loads a fixture file: a JSON array of {"response": ..., "expect_substring"?: ...}.
  static std::vector<FixtureRecord> load_fixture(const std::string& path);

 protected:
  std::string do_complete(const std::string& system_prompt,
                          const std::string& user_prompt) override;

 private:
  std::vector<FixtureRecord> records_;
  std::size_t next_ = 0;
};

struct HttpProviderConfig {
  std::string base_url;
  std::string model;
  std::string api_key;
  double temperature = 0.0;
};

// OpenAI-compatible chat-completions client. POSTs to
// {base_url}/chat/completions with body {model, temperature, messages} and
// returns choices[0].message.content.
class HttpProvider : public Provider {
 public:
  explicit HttpProvider(HttpProviderConfig config);

  // Reads LLM_BASE_URL, LLM_MODEL, LLM_API_KEY from the environment.
  static HttpProviderConfig config_from_env();

 protected:
  std::string do_complete(const std::string& system_prompt,
                          const std::string& user_prompt) override;

 private:
  HttpProviderConfig config_;
};

}  // namespace loom
