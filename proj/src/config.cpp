#include "popsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "popsim/defaults_config.hpp"
#include "popsim/error.hpp"

namespace popsim {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool valid_name(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
  });
}

/// Removes a trailing comment that is not inside a string literal
std::string strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

std::variant<double, bool, std::string> parse_literal(const std::string& raw, const std::string& key, int line) {
  if (raw.empty()) throw ConfigError("missing value for '" + key + "'", key, line);
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"')
      throw ConfigError("unterminated string for '" + key + "'", key, line);
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
      if (raw[i] == '\\' && i + 2 < raw.size()) ++i;
      out += raw[i];
    }
    return out;
  }
  if (raw == "true") return true;
  if (raw == "false") return false;
  char* end = nullptr;
  const double v = std::strtod(raw.c_str(), &end);
  if (end == raw.c_str() || *end != '\0' || !std::isfinite(v))
    throw ConfigError("value '" + raw + "' for '" + key + "' is not a number, boolean or quoted string", key, line);
  return v;
}

const char* type_name(const std::variant<double, bool, std::string>& v) {
  if (std::holds_alternative<double>(v)) return "number";
  if (std::holds_alternative<bool>(v)) return "boolean";
  return "string";
}

std::string section_of(const std::string& key) { return key.substr(0, key.find('.')); }
std::string name_of(const std::string& key) { return key.substr(key.find('.') + 1); }

}  // namespace

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string nearest_key(std::string_view key, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = std::string::npos;
  for (const std::string& c : candidates) {
    const std::size_t d = edit_distance(key, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  const std::size_t limit = std::max<std::size_t>(2, key.size() / 2);
  return best_d <= limit ? best : std::string{};
}

Config Config::parse(std::string_view text, const std::string& source_name) {
  Config cfg;
  std::istringstream in{std::string(text)};
  std::string raw_line, section;
  int line = 0;
  while (std::getline(in, raw_line)) {
    ++line;
    const std::string s = trim(strip_comment(raw_line));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(source_name + ":" + std::to_string(line) + ": malformed section header", s, line);
      section = trim(std::string_view(s).substr(1, s.size() - 2));
      if (!valid_name(section))
        throw ConfigError(source_name + ":" + std::to_string(line) + ": invalid section name '" + section + "'", section, line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source_name + ":" + std::to_string(line) + ": expected 'key = value'", s, line);
    const std::string name = trim(std::string_view(s).substr(0, eq));
    if (!valid_name(name))
      throw ConfigError(source_name + ":" + std::to_string(line) + ": invalid key '" + name + "'", name, line);
    if (section.empty())
      throw ConfigError(source_name + ":" + std::to_string(line) + ": key '" + name + "' appears before any [section]", name, line);
    const std::string key = section + "." + name;
    if (cfg.values_.count(key))
      throw ConfigError(source_name + ":" + std::to_string(line) + ": duplicate key '" + key + "'", key, line);
    cfg.values_[key] = {parse_literal(trim(std::string_view(s).substr(eq + 1)), key, line), source_name, line};
  }
  return cfg;
}

Config Config::defaults() { return parse(detail::kDefaultConfigText, "defaults.toml"); }

Config Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'", "", 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void Config::apply(const Config& overrides) {
  std::vector<std::string> sections;
  for (const auto& [k, v] : values_) {
    const std::string sec = section_of(k);
    if (sections.empty() || sections.back() != sec) sections.push_back(sec);
  }
  for (const auto& [key, val] : overrides.values_) {
    auto it = values_.find(key);
    const std::string where = val.source + ":" + std::to_string(val.line);
    if (it == values_.end()) {
      const std::string sec = section_of(key), name = name_of(key);
      if (std::find(sections.begin(), sections.end(), sec) == sections.end()) {
        const std::string near = nearest_key(sec, sections);
        throw ConfigError(where + ": unknown section [" + sec + "]" +
                              (near.empty() ? "" : " (did you mean [" + near + "]?)"),
                          key, val.line, near);
      }
      std::vector<std::string> names;
      for (const auto& [k, v] : values_)
        if (section_of(k) == sec) names.push_back(name_of(k));
      const std::string near = nearest_key(name, names);
      throw ConfigError(where + ": unknown key '" + name + "' in [" + sec + "]" +
                            (near.empty() ? "" : " (did you mean '" + near + "'?)"),
                        key, val.line, near);
    }
    if (it->second.value.index() != val.value.index())
      throw ConfigError(where + ": '" + key + "' expects a " + type_name(it->second.value) + ", got a " +
                            type_name(val.value),
                        key, val.line);
    it->second = val;
  }
}

void Config::set(const std::string& key, const std::string& literal, const std::string& source) {
  Config one;
  one.values_[key] = {parse_literal(literal, key, 0), source, 0};
  apply(one);
}

const ConfigValue& Config::entry(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing configuration key '" + key + "'", key, 0);
  return it->second;
}

double Config::number(const std::string& key) const {
  const ConfigValue& v = entry(key);
  if (const auto* d = std::get_if<double>(&v.value)) return *d;
  throw ConfigError("'" + key + "' is not a number", key, v.line);
}

std::size_t Config::count(const std::string& key) const {
  const double d = number(key);
  if (d < 0.0 || d != std::floor(d) || d > 1e15)
    throw ConfigError("'" + key + "' must be a nonnegative integer", key, entry(key).line);
  return static_cast<std::size_t>(d);
}

bool Config::flag(const std::string& key) const {
  const ConfigValue& v = entry(key);
  if (const auto* b = std::get_if<bool>(&v.value)) return *b;
  throw ConfigError("'" + key + "' is not a boolean", key, v.line);
}

const std::string& Config::text(const std::string& key) const {
  const ConfigValue& v = entry(key);
  if (const auto* s = std::get_if<std::string>(&v.value)) return *s;
  throw ConfigError("'" + key + "' is not a string", key, v.line);
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> k;
  for (const auto& [key, v] : values_) k.push_back(key);
  return k;
}

}  // namespace popsim
