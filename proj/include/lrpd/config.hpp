#ifndef LRPD_CONFIG_HPP
#define LRPD_CONFIG_HPP

// Small TOML-style key/value reader for run configuration.
//
//   seed = 7
//   [dataset]
//   root = "data/kitti"
//   [eval]
//   bins = [0, 10, 20, 30]
//
// Supported: [section] headers, bare keys, double-quoted strings, numbers,
// true/false, inf, flat arrays, and # comments. Keys are stored as
// "section.key".

#include <charconv>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lrpd/error.hpp"
#include "lrpd/kitti_io.hpp"

namespace lrpd {

/// Configuration mistakes: bad syntax, unknown keys, values of the wrong type.
class ConfigError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Drops a trailing # comment that is not inside a string.
inline std::string_view strip_comment(std::string_view s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

}  // namespace detail

class ConfigFile {
 public:
  static ConfigFile parse(std::string_view text) {
    ConfigFile cfg;
    std::string section;
    int line_no = 0;
    for (const auto raw : detail::split_lines(text)) {
      ++line_no;
      const auto line = detail::trim(detail::strip_comment(raw));
      if (line.empty()) continue;
      const auto where = [&] { return "config line " + std::to_string(line_no) + ": "; };
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError(where() + "unterminated section header");
        section = std::string(detail::trim(line.substr(1, line.size() - 2)));
        if (section.empty()) throw ConfigError(where() + "empty section name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ConfigError(where() + "expected key = value");
      const auto key = detail::trim(line.substr(0, eq));
      const auto value = detail::trim(line.substr(eq + 1));
      if (key.empty() || value.empty()) throw ConfigError(where() + "expected key = value");
      cfg.set(section.empty() ? std::string(key) : section + "." + std::string(key), std::string(value));
    }
    return cfg;
  }

  static ConfigFile load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
    return parse(read_text_file(path));
  }

  // Raw value text, as written after '='.
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  /// Applies "key=value"; a bare word value is taken as a string.
  void apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw ConfigError("override must be key=value: " + std::string(assignment));
    set(std::string(detail::trim(assignment.substr(0, eq))), std::string(detail::trim(assignment.substr(eq + 1))));
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::optional<std::string> get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return unquote(key, it->second);
  }

  std::optional<double> get_double(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return number(key, it->second);
  }

  std::optional<long long> get_int(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    const auto v = detail::to_int(it->second);
    if (!v) throw ConfigError(key + ": expected an integer, got '" + it->second + "'");
    return v;
  }

  std::optional<bool> get_bool(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    if (it->second == "true") return true;
    if (it->second == "false") return false;
    throw ConfigError(key + ": expected true or false, got '" + it->second + "'");
  }

  std::optional<std::vector<std::string>> get_string_array(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    std::vector<std::string> out;
    for (const auto& item : items(key, it->second)) out.push_back(unquote(key, item));
    return out;
  }

  std::optional<std::vector<double>> get_double_array(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    std::vector<double> out;
    for (const auto& item : items(key, it->second)) out.push_back(number(key, item));
    return out;
  }

 private:
  static std::string unquote(const std::string& key, std::string_view v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return std::string(v.substr(1, v.size() - 2));
    if (v.find_first_of("\"[]") != std::string_view::npos) {
      throw ConfigError(key + ": malformed string '" + std::string(v) + "'");
    }
    return std::string(v);
  }

  static double number(const std::string& key, std::string_view v) {
    if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
    const auto d = detail::to_double(v);
    if (!d) throw ConfigError(key + ": expected a number, got '" + std::string(v) + "'");
    return *d;
  }

  static std::vector<std::string> items(const std::string& key, std::string_view v) {
    if (v.size() < 2 || v.front() != '[' || v.back() != ']') {
      throw ConfigError(key + ": expected an array, got '" + std::string(v) + "'");
    }
    std::vector<std::string> out;
    const auto body = detail::trim(v.substr(1, v.size() - 2));
    if (body.empty()) return out;
    std::size_t start = 0;
    while (start <= body.size()) {
      const auto comma = body.find(',', start);
      const auto item = detail::trim(body.substr(start, comma == std::string_view::npos ? body.size() - start
                                                                                          : comma - start));
      if (item.empty()) {
        if (comma == std::string_view::npos) break;  // trailing comma
        throw ConfigError(key + ": empty array element");
      }
      out.emplace_back(item);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return out;
  }

  std::map<std::string, std::string> values_;
};

}  // namespace lrpd

#endif  // LRPD_CONFIG_HPP
