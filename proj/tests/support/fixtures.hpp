#pragma once

// Helpers for building scripted provider responses in the delimiter format.

#include "loom/value.hpp"

#include <string>

namespace loomtest {

inline std::string decision_response(const std::string& observation, const std::string& thoughts,
                                     const std::string& subtask, const std::string& function_name) {
  return "{\"###Observation###\": \"" + observation + "\", \"###Thoughts###\": \"" + thoughts +
         "\", \"###Current Subtask###\": \"" + subtask + "\", \"###Equipped Function Name###\": \"" +
         function_name + "\"}";
}

// {"###name###": value, ...} with values rendered as JSON.
inline std::string fields_response(const loom::Value& fields) {
  std::string out = "{";
  bool first = true;
  for (auto it = fields.begin(); it != fields.end(); ++it) {
    if (!first) out += ", ";
    first = false;
    out += "\"###" + it.key() + "###\": " + it.value().dump();
  }
  return out + "}";
}

}  // namespace loomtest
