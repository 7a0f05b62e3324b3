#include "seq3/keyvalue.hpp"

#include <charconv>
#include <sstream>

#include "seq3/errors.hpp"

namespace seq3 {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
  throw ParseError("config key '" + key + "': expected " + what + ", got '" + value + "'");
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

KeyValues parse_key_values(const std::string& text, const std::string& source) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ParseError(where + "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(where + "empty key");
    if (!out.emplace(key, value).second) throw ParseError(where + "duplicate key '" + key + "'");
  }
  return out;
}

std::string format_key_values(const KeyValues& values) {
  std::string out;
  for (const auto& [k, v] : values) out += k + " = " + v + "\n";
  return out;
}

void ConfigBinder::bind(const std::string& key, double& field) {
  bind(key, [&field] { return format_double(field); },
       [&field, key](const std::string& v) {
         double x = 0.0;
         auto r = std::from_chars(v.data(), v.data() + v.size(), x);
         if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_value(key, v, "a number");
         field = x;
       });
}

std::uint64_t ConfigBinder::parse_unsigned(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return x;
}

void ConfigBinder::bind(const std::string& key, bool& field) {
  bind(key, [&field] { return std::string(field ? "true" : "false"); },
       [&field, key](const std::string& v) {
         if (v == "true" || v == "1")
           field = true;
         else if (v == "false" || v == "0")
           field = false;
         else
           bad_value(key, v, "true or false");
       });
}

void ConfigBinder::bind(const std::string& key, std::string& field) {
  bind(key, [&field] { return field; }, [&field](const std::string& v) { field = v; });
}

void ConfigBinder::bind(const std::string& key, std::function<std::string()> get,
                        std::function<void(const std::string&)> set) {
  if (!fields_.emplace(key, Field{std::move(get), std::move(set)}).second)
    throw ContractError("config key '" + key + "' bound twice");
}

void ConfigBinder::set(const std::string& key, const std::string& value) {
  auto it = fields_.find(key);
  if (it == fields_.end()) throw InputError("unknown config key '" + key + "'");
  it->second.set(value);
}

void ConfigBinder::set_all(const KeyValues& values) {
  for (const auto& [k, v] : values) set(k, v);
}

KeyValues ConfigBinder::values() const {
  KeyValues out;
  for (const auto& [k, f] : fields_) out.emplace(k, f.get());
  return out;
}

std::vector<std::string> ConfigBinder::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, f] : fields_) out.push_back(k);
  return out;
}

}  // namespace seq3
