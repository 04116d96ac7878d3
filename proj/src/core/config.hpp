#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace farkasnet {

// Flat "key = value" settings with dotted keys ("sgd.learning_rate").
// Lines starting with '#' and blank lines are ignored. Every getter records
// the value it resolved (including defaults), so to_text() after a run is
// the complete configuration that reproduces it.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  // "key=value"; throws UsageError when '=' is missing.
  void set_assignment(const std::string& assignment);
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  std::int64_t get_int(const std::string& key, std::int64_t fallback);
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  // Comma-separated list.
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback);
  std::vector<std::uint64_t> get_uints(const std::string& key, const std::vector<std::uint64_t>& fallback);
  std::vector<std::string> get_strings(const std::string& key, const std::vector<std::string>& fallback);

  // Keys never read by a getter; a typo shows up here.
  std::vector<std::string> unused_keys() const;

  std::string to_text() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::string& raw(const std::string& key, const std::string& fallback);

  std::map<std::string, std::string> values_;
  std::map<std::string, bool> used_;
};

// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace farkasnet
