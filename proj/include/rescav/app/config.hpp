#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "rescav/error.hpp"

namespace rescav::app {

// Bad command line (unknown flag, missing --seed). Exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Config file or value that does not parse or validate. Exit code 3.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A referenced input file does not exist. Exit code 4.
class MissingInput : public Error {
 public:
  using Error::Error;
};

// Flat `key = value` settings with dotted keys. Lines starting with '#' and
// blank lines are ignored.
class Config {
 public:
  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Throws ConfigError naming the first key not in `allowed`.
  void check_keys(const std::set<std::string>& allowed) const;

  const std::map<std::string, std::string>& entries() const { return values_; }
  std::string to_text() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace rescav::app
