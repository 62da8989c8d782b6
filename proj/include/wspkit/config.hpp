#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>

namespace wspkit {

// Line-oriented configuration: `key = value` entries under [section]
// headers, '#' comments. Keys flatten to "section.key". Flags override file
// values; serialize() emits a canonical echo whose re-parse is a fixpoint.
class ConfigMap {
 public:
  static ConfigMap parse_text(const std::string& text);
  static ConfigMap parse_file(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Rejects keys outside the known set (typo guard).
  void require_known(const std::set<std::string>& known) const;

  std::string serialize() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace wspkit
