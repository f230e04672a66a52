#pragma once

#include <json.hpp>

#include <string>

namespace loom {

// Dynamic value carrier for every parsed field: null, bool, integer, float,
// text, list, or map. Insertion order of map keys is preserved.
using Value = nlohmann::ordered_json;

// Compact single-line rendering used in prompts, subtask keys and status
// output: strings bare, lists bracketed, maps braced.
// display(["apple"]) == "[apple]".
std::string display(const Value& value);

// display() capped at max_chars; longer renderings are cut and suffixed with
// "...#" plus a short content hash so elided keys stay distinguishable.
std::string display_elided(const Value& value, std::size_t max_chars = 200);

// FNV-1a over the bytes of text, as 8 lowercase hex digits.
std::string short_hash(const std::string& text);

}  // namespace loom
