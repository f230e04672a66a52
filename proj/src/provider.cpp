#include "loom/provider.hpp"

#include <httplib.h>

#include <cstdlib>
#include <fstream>

namespace loom {
namespace {

// Splits "http://host:8080/v1" into the httplib host part and the path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
  std::size_t scheme_end = base_url.find("://");
  std::size_t path_start = base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start == std::string::npos) return {base_url, ""};
  std::string prefix = base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {base_url.substr(0, path_start), prefix};
}

}  // namespace

std::string Provider::complete(const std::string& system_prompt, const std::string& user_prompt) {
  std::string response = do_complete(system_prompt, user_prompt);
  transcript_.push_back({system_prompt, user_prompt, response});
  return response;
}

std::string ScriptedProvider::do_complete(const std::string& /*system_prompt*/,
                                          const std::string& user_prompt) {
  if (next_ >= records_.size()) {
    throw FixtureExhaustedError("scripted fixture exhausted after " +
                                std::to_string(records_.size()) + " record(s)");
  }
  const FixtureRecord& record = records_[next_];
  if (record.expect_substring &&
      user_prompt.find(*record.expect_substring) == std::string::npos) {
    throw ExpectationFailedError(next_, *record.expect_substring);
  }
  ++next_;
  return record.response;
}

std::vector<FixtureRecord> ScriptedProvider::load_fixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open fixture file: " + path);
  Value doc = Value::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) {
    throw Error("fixture file must be a JSON array of records: " + path);
  }
  std::vector<FixtureRecord> records;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("response") || !item["response"].is_string()) {
      throw Error("fixture record must be an object with a string 'response': " + path);
    }
    FixtureRecord record;
    record.response = item["response"].get<std::string>();
    if (item.contains("expect_substring")) {
      record.expect_substring = item["expect_substring"].get<std::string>();
    }
    records.push_back(std::move(record));
  }
  return records;
}

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw Error("HttpProvider requires a non-empty base_url");
}

HttpProviderConfig HttpProvider::config_from_env() {
  HttpProviderConfig config;
  if (const char* v = std::getenv("LLM_BASE_URL")) config.base_url = v;
  if (const char* v = std::getenv("LLM_MODEL")) config.model = v;
  if (const char* v = std::getenv("LLM_API_KEY")) config.api_key = v;
  return config;
}

std::string HttpProvider::do_complete(const std::string& system_prompt,
                                      const std::string& user_prompt) {
  auto [host, prefix] = split_base_url(config_.base_url);
  httplib::Client client(host);
  client.set_read_timeout(120, 0);

  Value body;
  body["model"] = config_.model;
  body["temperature"] = config_.temperature;
  body["messages"] = Value::array({
      Value{{"role", "system"}, {"content", system_prompt}},
      Value{{"role", "user"}, {"content", user_prompt}},
  });

  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto result = client.Post(prefix + "/chat/completions", headers, body.dump(), "application/json");
  if (!result) {
    throw HttpError("transport error calling " + config_.base_url + ": " +
                    httplib::to_string(result.error()));
  }
  if (result->status < 200 || result->status >= 300) {
    throw HttpError("chat completion returned status " + std::to_string(result->status) + ": " +
                    result->body, result->status);
  }

  Value doc = Value::parse(result->body, nullptr, false);
  if (doc.is_discarded() || !doc.contains("choices") || !doc["choices"].is_array() ||
      doc["choices"].empty() || !doc["choices"][0].contains("message") ||
      !doc["choices"][0]["message"].contains("content") ||
      !doc["choices"][0]["message"]["content"].is_string()) {
    throw HttpError("malformed chat completion response body: " + result->body, result->status);
  }
  return doc["choices"][0]["message"]["content"].get<std::string>();
}

}  // namespace loom
