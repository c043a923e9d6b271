#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cdsrnp::config {

// Flat key=value configuration with a fixed key registry. Defaults are
// overridden by a config file, which is overridden by explicit sets;
// unknown keys are an error at every layer.
class Config {
 public:
  /// All keys with built-in defaults.
  static Config defaults();

  static bool is_known_key(const std::string& key);

  void set(const std::string& key, const std::string& value);

  /// Parse `key=value` assignments, one per line; '#' starts a comment.
  void load_file(const std::string& path);

  /// Apply a single `key=value` override string.
  void apply_override(const std::string& assignment);

  const std::string& str(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  std::uint64_t uinteger(const std::string& key) const;
  double number(const std::string& key) const;

  /// Full resolved contents, one `key=value` per line, sorted by key.
  std::string serialize() const;
  void save_file(const std::string& path) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace cdsrnp::config
