#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace loom {

// Base class for every error raised by the library.
struct Error : public std::runtime_error {
  explicit Error(std::string message) : std::runtime_error(std::move(message)) {}
};

// Malformed type expression text (unbalanced brackets, empty enum, ...).
struct GrammarError : public Error {
  std::size_t position;
  GrammarError(std::string message, std::size_t position_)
      : Error(std::move(message)), position(position_) {}
};

// Schema or parse-config invariant violated before any LLM call is made.
struct SchemaError : public Error {
  using Error::Error;
};

// One or more schema fields had no delimiter marker in the raw response.
struct MissingFieldError : public Error {
  std::vector<std::string> missing;
  explicit MissingFieldError(std::vector<std::string> missing_);
};

// A raw value could not be coerced to its declared type. The message is the
// text fed back to the LLM on retry, so it names the field and what was seen.
struct TypeMismatchError : public Error {
  std::string expected;
  std::string got;
  std::string raw;
  TypeMismatchError(std::string expected_, std::string got_, std::string raw_);
};

// A required dictionary key is absent.
struct MissingDictKeyError : public Error {
  std::string key;
  explicit MissingDictKeyError(std::string key_)
      : Error("missing required dictionary key '" + key_ + "'"), key(std::move(key_)) {}
};

struct UnresolvedPlaceholderError : public Error {
  std::string name;
  explicit UnresolvedPlaceholderError(std::string name_)
      : Error("unresolved placeholder <" + name_ + ">: no such shared variable"),
        name(std::move(name_)) {}
};

struct MissingSharedVariableError : public Error {
  std::string name;
  explicit MissingSharedVariableError(std::string name_)
      : Error("shared variable '" + name_ + "' does not exist"), name(std::move(name_)) {}
};

struct DuplicateFunctionNameError : public Error {
  std::string name;
  explicit DuplicateFunctionNameError(std::string name_)
      : Error("equipped function '" + name_ + "' already assigned"), name(std::move(name_)) {}
};

// Assigning this inner agent would create a cycle in the agent hierarchy.
struct CycleDetectedError : public Error {
  std::vector<std::string> path;
  explicit CycleDetectedError(std::vector<std::string> path_);
};

struct UnknownFunctionError : public Error {
  std::string name;
  explicit UnknownFunctionError(std::string name_)
      : Error("unknown equipped function '" + name_ + "'"), name(std::move(name_)) {}
};

// A native callable threw; the message carries the function name.
struct FunctionError : public Error {
  using Error::Error;
};

// Scripted provider fixture ran out of records.
struct FixtureExhaustedError : public Error {
  using Error::Error;
};

// Scripted provider record expected a substring absent from the user prompt.
// This fails the test harness, not the agent under test.
struct ExpectationFailedError : public Error {
  std::size_t index;
  std::string missing_substring;
  ExpectationFailedError(std::size_t index_, std::string missing_);
};

struct HttpError : public Error {
  int status;  // 0 when the failure happened before any HTTP status was seen
  HttpError(std::string message, int status_ = 0) : Error(std::move(message)), status(status_) {}
};

// No path exists over the currently known obstacles.
struct NoPathKnownError : public Error {
  using Error::Error;
};

struct EpisodeOverError : public Error {
  EpisodeOverError() : Error("episode is over: step budget exhausted") {}
};

struct PlanningFailedError : public Error {
  using Error::Error;
};

}  // namespace loom
