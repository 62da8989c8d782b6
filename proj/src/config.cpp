#include "wspkit/config.hpp"

#include <algorithm>
#include <stdexcept>

#include "wspkit/errors.hpp"
#include "wspkit/io.hpp"

namespace wspkit {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

ConfigMap ConfigMap::parse_text(const std::string& text) {
  ConfigMap cfg;
  std::string section;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    std::string line = text.substr(start, end == std::string::npos ? end : end - start);
    start = end == std::string::npos ? text.size() + 1 : end + 1;
    ++line_no;

    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw DataError("config line " + std::to_string(line_no) + ": unterminated section");
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw DataError("config line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty())
      throw DataError("config line " + std::to_string(line_no) + ": empty key");
    cfg.values_[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

ConfigMap ConfigMap::parse_file(const std::filesystem::path& path) {
  return parse_text(read_file(path));
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw DataError("config key " + key + ": not a number: " + it->second);
  }
}

int ConfigMap::get_int(const std::string& key, int fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw DataError("config key " + key + ": not an integer: " + it->second);
  }
}

std::uint64_t ConfigMap::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw DataError("config key " + key + ": not an unsigned integer: " + it->second);
  }
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw DataError("config key " + key + ": not a boolean: " + v);
}

void ConfigMap::require_known(const std::set<std::string>& known) const {
  for (const auto& [key, value] : values_)
    if (!known.count(key)) throw DataError("unknown config key: " + key);
}

std::string ConfigMap::serialize() const {
  // Section-less keys must precede every [section] header so a re-parse
  // assigns them to the same (empty) section.
  std::string out;
  for (const auto& [key, value] : values_)
    if (key.rfind('.') == std::string::npos) out += key + " = " + value + "\n";

  std::string current_section;
  for (const auto& [key, value] : values_) {
    std::size_t dot = key.rfind('.');
    if (dot == std::string::npos) continue;
    std::string section = key.substr(0, dot);
    std::string name = key.substr(dot + 1);
    if (section != current_section) {
      if (!out.empty()) out += '\n';
      out += "[" + section + "]\n";
      current_section = section;
    }
    out += name + " = " + value + "\n";
  }
  return out;
}

}  // namespace wspkit
