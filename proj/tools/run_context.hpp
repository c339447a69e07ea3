#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "foveate/config.hpp"
#include "foveate/events.hpp"

namespace foveate::cli {

/// Exit statuses shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct GlobalOptions {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value, applied after the file
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
};

/// Resolved configuration and output bookkeeping of one invocation.
class RunContext {
 public:
  RunContext(std::string command, const GlobalOptions& options);

  [[nodiscard]] const std::string& command() const { return command_; }
  [[nodiscard]] KeyValueConfig& config() { return config_; }
  [[nodiscard]] const std::filesystem::path& out_dir() const { return out_; }

  /// Fails on keys no module understands. `extra` lists keys owned by the subcommand.
  void reject_unknown(const std::vector<std::string>& extra = {}) const;

  /// Path under the output directory; parent directories are created and the file is
  /// listed in the manifest.
  std::filesystem::path output(const std::string& relative);

  /// Records the effective values used by the run (written to the manifest).
  void record(const KeyValueConfig& resolved);
  [[nodiscard]] const KeyValueConfig& resolved() const { return resolved_; }

  /// Writes run.json: command, seed, resolved key/values and outputs. Contains no clock values.
  void write_manifest(int status);

 private:
  std::string command_;
  KeyValueConfig config_;
  std::optional<std::uint64_t> seed_;
  std::filesystem::path out_;
  KeyValueConfig resolved_;
  std::vector<std::string> outputs_;
};

/// Sets every module seed key from a single run seed.
void apply_seed(KeyValueConfig& cfg, std::uint64_t seed);

/// Reads an event file; a zero-byte file is an empty recording of `csv_geometry`.
EventStream load_event_input(const std::filesystem::path& path, Geometry csv_geometry);

}  // namespace foveate::cli
