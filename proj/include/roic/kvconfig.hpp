#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>

namespace roic {

/// Flat `key = value` configuration file: one pair per line, `#` starts
/// a comment, blank lines ignored. Typed getters consume keys; finish()
/// rejects any key that was never consumed, so typos are hard errors.
class KvConfig {
 public:
  static KvConfig parse_file(const std::string& path);
  static KvConfig parse_string(const std::string& text,
                               const std::string& origin = "<string>");

  bool has(const std::string& key) const;

  int get_int(const std::string& key, int fallback);
  double get_double(const std::string& key, double fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  std::string get_string(const std::string& key, const std::string& fallback);

  /// Throws ConfigError listing unknown keys, if any remain.
  void finish() const;

 private:
  std::string origin_;
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

}  // namespace roic
