// Copyright 2026 The nomad-curate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace nomad {

using ConfigValue =
    std::variant<bool, std::int64_t, double, std::string, std::vector<std::string>>;

// Plain-text key/value tree in a TOML subset:
//
//   # comment
//   [section]
//   name = "text"        # basic strings with \" \\ \n \t \r escapes
//   count = 30000
//   top_p = 0.9
//   enabled = true
//   stop = ["\nUser:"]   # single-line string arrays
//
// Keys are addressed as "section.name".
class Config {
 public:
  // Throws InvalidConfig with the offending line number.
  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  bool contains(const std::string& key) const;
  const ConfigValue* find(const std::string& key) const;
  void set(const std::string& key, ConfigValue value);
  void erase(const std::string& key);

  // Typed accessors; throw InvalidConfig on a type mismatch. Integers are
  // accepted where a double is requested.
  std::string get_string(const std::string& key, std::string fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_strings(const std::string& key,
                                       std::vector<std::string> fallback) const;

  std::vector<std::string> keys() const;
  const std::map<std::string, ConfigValue>& values() const { return values_; }

  // Canonical text: sections and keys sorted, doubles in shortest round-trip
  // form. parse(dump()) reproduces the same values.
  std::string dump() const;
  // FNV-1a 64 of dump(), as 16 hex digits.
  std::string hash() const;

 private:
  std::map<std::string, ConfigValue> values_;
};

}  // namespace nomad
