#include "loom/value.hpp"

#include <cstdint>
#include <sstream>

namespace loom {

std::string display(const Value& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_array()) {
    std::string out = "[";
    bool first = true;
    for (const auto& item : value) {
      if (!first) out += ", ";
      first = false;
      out += display(item);
    }
    return out + "]";
  }
  if (value.is_object()) {
    std::string out = "{";
    bool first = true;
    for (auto it = value.begin(); it != value.end(); ++it) {
      if (!first) out += ", ";
      first = false;
      out += it.key() + ": " + display(it.value());
    }
    return out + "}";
  }
  return value.dump();
}

std::string short_hash(const std::string& text) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : text) {
    h ^= c;
    h *= 16777619u;
  }
  std::ostringstream out;
  out << std::hex;
  for (int shift = 28; shift >= 0; shift -= 4) out << ((h >> shift) & 0xF);
  return out.str();
}

std::string display_elided(const Value& value, std::size_t max_chars) {
  std::string text = display(value);
  if (text.size() <= max_chars) return text;
  return text.substr(0, max_chars) + "...#" + short_hash(text);
}

}  // namespace loom
