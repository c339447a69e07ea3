#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace foveate {

/// Flat `key = value` configuration. `#` starts a comment; blank lines are ignored.
///
/// Getters record which keys were read so callers can reject unknown keys once
/// every consumer has had its turn.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::istream& is, const std::string& origin = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  /// Later values win; used to layer command-line overrides on a file.
  void set(const std::string& key, const std::string& value);
  void merge(const KeyValueConfig& overrides);

  [[nodiscard]] bool contains(const std::string& key) const;
  [[nodiscard]] std::optional<std::string> raw(const std::string& key) const;

  [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
  [[nodiscard]] double get_double(const std::string& key, double fallback) const;
  [[nodiscard]] long long get_int(const std::string& key, long long fallback) const;
  [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated list of numbers.
  [[nodiscard]] std::vector<double> get_doubles(const std::string& key,
                                                const std::vector<double>& fallback) const;

  /// Keys present in the file but never read by any getter.
  [[nodiscard]] std::vector<std::string> unread_keys() const;
  /// Throws Error naming every unread key.
  void reject_unknown() const;

  [[nodiscard]] const std::map<std::string, std::string>& entries() const { return values_; }
  /// Sorted `key = value` lines.
  void write(std::ostream& os) const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> read_;
  std::string origin_ = "<config>";
};

/// Text form of a number when writing config values (%.9g).
std::string format_number(double v);

}  // namespace foveate
