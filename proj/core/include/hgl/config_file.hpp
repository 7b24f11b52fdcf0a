#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

namespace hgl {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` settings. `#` starts a comment; blank lines are ignored.
/// Keys are unique; the text after the first `=` (trimmed) is the value.
class ConfigMap {
 public:
  static ConfigMap parse(const std::string& text, const std::string& origin = "<config>");
  static ConfigMap load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const { return get_u64(key, fallback); }
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Throws ConfigError naming the first key not in `known`.
  void reject_unknown(const std::set<std::string>& known) const;

  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  std::string where(const std::string& key) const;

  std::string origin_;
  std::map<std::string, std::string> values_;
  std::map<std::string, std::size_t> lines_;
};

/// `key = value` lines in key order, suitable for echoing into reports.
std::string format_config(const std::map<std::string, std::string>& values);

}  // namespace hgl
