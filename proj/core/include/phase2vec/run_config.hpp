#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace p2v {

/// Flat `key = value` configuration with a fixed key registry. Lines starting
/// with '#' are comments; unknown keys are errors. Every command echoes the
/// fully resolved configuration (defaults included) so a run can be recreated
/// from its echo plus the recorded seed.
class RunConfig {
 public:
  RunConfig();  // defaults

  static RunConfig from_file(const std::string& path);
  void apply_line(const std::string& line, int line_no = 0);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;

  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  /// Full sorted key=value listing.
  std::string echo() const;
  void write_echo(const std::string& path) const;

 private:
  struct Entry {
    std::string key;
    std::string value;
  };
  std::vector<Entry> entries_;  // registry order
  Entry* find(const std::string& key);
  const Entry* find(const std::string& key) const;
};

}  // namespace p2v
