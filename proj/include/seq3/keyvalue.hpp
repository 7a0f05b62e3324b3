#pragma once
// Flat "dotted.key = value" configuration text and a binder that maps keys
// onto fields of configuration structs.

#include <concepts>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace seq3 {

using KeyValues = std::map<std::string, std::string>;

// One "key = value" per line, '#' starts a comment. Duplicate keys and lines
// without '=' are parse errors; `source` names the input in messages.
KeyValues parse_key_values(const std::string& text, const std::string& source = "<config>");
// Sorted by key, one "key = value" per line.
std::string format_key_values(const KeyValues& values);

class ConfigBinder {
 public:
  void bind(const std::string& key, double& field);
  void bind(const std::string& key, bool& field);
  void bind(const std::string& key, std::string& field);
  void bind(const std::string& key, std::function<std::string()> get, std::function<void(const std::string&)> set);

  template <std::unsigned_integral T>
    requires(!std::is_same_v<T, bool>)
  void bind(const std::string& key, T& field) {
    bind(key, [&field] { return std::to_string(field); },
         [&field, key](const std::string& v) { field = static_cast<T>(parse_unsigned(key, v)); });
  }

  bool has(const std::string& key) const { return fields_.count(key) != 0; }
  // InputError for unknown keys, ParseError for malformed values.
  void set(const std::string& key, const std::string& value);
  void set_all(const KeyValues& values);
  KeyValues values() const;
  std::vector<std::string> keys() const;

 private:
  static std::uint64_t parse_unsigned(const std::string& key, const std::string& value);

  struct Field {
    std::function<std::string()> get;
    std::function<void(const std::string&)> set;
  };
  std::map<std::string, Field> fields_;
};

std::string format_double(double v);

}  // namespace seq3
