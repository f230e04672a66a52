#include "loom/error.hpp"

namespace loom {
namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

MissingFieldError::MissingFieldError(std::vector<std::string> missing_)
    : Error("output is missing the field(s): " + join(missing_, ", ") +
            "; every field must appear exactly in the stated key format"),
      missing(std::move(missing_)) {}

TypeMismatchError::TypeMismatchError(std::string expected_, std::string got_, std::string raw_)
    : Error("expected type " + expected_ + " but got " + got_ + " for value '" + raw_ + "'"),
      expected(std::move(expected_)),
      got(std::move(got_)),
      raw(std::move(raw_)) {}

CycleDetectedError::CycleDetectedError(std::vector<std::string> path_)
    : Error("agent hierarchy cycle detected: " + join(path_, " -> ")), path(std::move(path_)) {}

ExpectationFailedError::ExpectationFailedError(std::size_t index_, std::string missing_)
    : Error("scripted fixture record " + std::to_string(index_) +
            " expected substring not found in user prompt: \"" + missing_ + "\""),
      index(index_),
      missing_substring(std::move(missing_)) {}

}  // namespace loom
