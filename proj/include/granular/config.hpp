// Flat key=value configuration files.
//
//   # comment
//   epsilon = 0.1
//   functional.eta = 0.1
//   init.kind = two_state_riemann
//
// Keys are SimConfig field names; nested structures use a dotted prefix
// (domain., functional., init., sticky., sweep.).

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "granular/core_types.hpp"

namespace granular {

class KeyValues {
 public:
  KeyValues() = default;
  KeyValues(std::map<std::string, std::string> entries, std::string source)
      : entries_(std::move(entries)), source_(std::move(source)) {}

  const std::string& source() const { return source_; }
  const std::map<std::string, std::string>& entries() const { return entries_; }
  void set(const std::string& key, const std::string& value) { entries_[key] = value; }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  std::optional<std::string> get_string(const std::string& key) const;
  std::optional<double> get_double(const std::string& key) const;
  std::optional<std::uint64_t> get_uint(const std::string& key) const;
  std::optional<bool> get_bool(const std::string& key) const;
  std::optional<std::vector<double>> get_double_list(const std::string& key) const;
  std::optional<std::vector<std::uint64_t>> get_uint_list(const std::string& key) const;

  /// Keys never read through a getter.
  std::vector<std::string> unused_keys() const;

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  std::map<std::string, std::string> entries_;
  std::string source_;
  mutable std::set<std::string> used_;
};

KeyValues parse_key_values(std::istream& in, const std::string& source_name);
/// Throws ConfigError naming the path when the file cannot be read.
KeyValues load_key_values(const std::string& path);

/// Reads every SimConfig key; with reject_unknown, any key outside the
/// SimConfig and sweep. namespaces is an error.
SimConfig sim_config_from(const KeyValues& kv, bool reject_unknown = true);

/// Canonical key=value rendering (round-trips through sim_config_from).
std::map<std::string, std::string> to_key_values(const SimConfig& config);

std::vector<double> parse_double_list(const std::string& text);

}  // namespace granular
