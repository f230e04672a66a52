#pragma once

#include "loom/provider.hpp"
#include "loom/schema.hpp"
#include "loom/value.hpp"

#include <map>
#include <string>
#include <vector>

namespace loom {

// Renders the instruction block appended to the system prompt: one line per
// schema field, key enclosed in the delimiter, value placeholder enclosed in
// <>. Deterministic for fixed inputs.
std::string render_output_instructions(const OutputSchema& schema, const ParseConfig& config);

// Scans the raw LLM text for every schema field's delimiter+key+delimiter
// marker (with either quote style or none around the marker) and returns the
// text between a field's marker and the next known marker, trimmed of the
// enclosing <> and one pair of balanced outer quotes. The scan is a plain
// hand-rolled walk, so unbalanced quotes or brackets inside values never
// break extraction of other fields.
//
// Throws MissingFieldError listing every field with no marker found.
std::map<std::string, std::string> extract_fields(const std::string& raw,
                                                  const OutputSchema& schema,
                                                  const ParseConfig& config);

// Non-throwing variant used by the retry loop: returns what was found and
// fills `missing` with the fields that had no marker.
std::map<std::string, std::string> extract_fields_partial(const std::string& raw,
                                                          const OutputSchema& schema,
                                                          const ParseConfig& config,
                                                          std::vector<std::string>* missing);

// Coerces raw field text to the declared type. Lists and maps are re-parsed
// from bracketed text, with single-quote and trailing-comma repairs applied
// once if the strict parse fails. Enum matching is exact first, then
// case-insensitive. Code strips surrounding ``` fences. Throws
// TypeMismatchError (whose message is fed back to the LLM by the retry loop)
// or MissingDictKeyError.
Value coerce(const std::string& raw, const TypeExpr& type);

// Structural coercion for already-parsed values (list elements, nested maps).
Value coerce_value(const Value& value, const TypeExpr& type);

// Checks that every required key of a DictWithKeys type is present.
// Throws MissingDictKeyError on the first absent key.
void check_dict_keys(const Value& value, const TypeExpr& type);

// One provider call of the retry loop and what became of it.
struct ParseAttempt {
  std::string raw_response;
  std::vector<std::string> errors;  // empty on the successful attempt
};

struct ParseOutcome {
  Value result = Value::object();   // field -> coerced value, in schema order
  std::vector<ParseAttempt> attempts;
  int calls_made = 0;
  bool success = false;
};

// Raised when num_tries attempts all failed; carries the full transcript.
struct ExhaustedRetriesError : public Error {
  ParseOutcome outcome;
  explicit ExhaustedRetriesError(ParseOutcome outcome_);
};

// The core structured-output call: prompts the provider with the rendered
// field instructions, extracts and coerces every field, and on error re-calls
// with the error text appended to the user prompt, stopping at the first
// success or after num_tries attempts. Returns the full attempt transcript;
// throws ExhaustedRetriesError when every attempt failed.
ParseOutcome strict_json(const std::string& system_prompt, const std::string& user_prompt,
                         const OutputSchema& schema, Provider& provider,
                         const ParseConfig& config = ParseConfig{});

}  // namespace loom
