#pragma once
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace popsim {

/// @brief One scalar setting with the place it was defined
struct ConfigValue {
  std::variant<double, bool, std::string> value;
  std::string source;
  int line = 0;
};

/// @brief Sectioned key-value settings ("section.key"), strict against the shipped schema
class Config {
 public:
  /// The compiled-in defaults; their keys and value types form the schema
  static Config defaults();
  /// Parses TOML-style text (sections, scalar assignments, comments) without a schema
  static Config parse(std::string_view text, const std::string& source_name);
  static Config load_file(const std::string& path);

  /// Replaces values from `overrides`; unknown keys or mismatched types throw ConfigError
  void apply(const Config& overrides);
  /// Sets one dotted key from literal text (command-line flags)
  void set(const std::string& key, const std::string& literal, const std::string& source = "command line");

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  double number(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  bool flag(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  const ConfigValue& entry(const std::string& key) const;
  std::vector<std::string> keys() const;

 private:
  std::map<std::string, ConfigValue> values_;
};

/// Closest candidate by edit distance, or empty if nothing is reasonably close
std::string nearest_key(std::string_view key, const std::vector<std::string>& candidates);
std::size_t edit_distance(std::string_view a, std::string_view b);

}  // namespace popsim
