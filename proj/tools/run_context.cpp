#include "run_context.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "foveate/bench.hpp"
#include "foveate/closed_loop.hpp"
#include "foveate/event_io.hpp"

namespace foveate::cli {

void apply_seed(KeyValueConfig& cfg, std::uint64_t seed) {
  const std::string s = std::to_string(seed);
  cfg.set("sensor.seed", s);
  cfg.set("control.seed", s);
  cfg.set("loop.seed", s);
}

RunContext::RunContext(std::string command, const GlobalOptions& options)
    : command_(std::move(command)), out_(options.out_dir) {
  if (!options.config_path.empty()) config_ = KeyValueConfig::load(options.config_path);
  for (const std::string& kv : options.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error("--set expects key=value, got '" + kv + "'");
    }
    config_.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  seed_ = options.seed;
  if (!seed_ && config_.contains("seed")) {
    seed_ = static_cast<std::uint64_t>(config_.get_int("seed", 0));
  }
  if (seed_) apply_seed(config_, *seed_);
}

void RunContext::reject_unknown(const std::vector<std::string>& extra) const {
  // Parsing every module's configuration marks all of their keys as read.
  (void)ClosedLoopConfig::from_config(config_);
  (void)BenchConfig::from_config(config_);
  (void)WorldScene::from_config(config_);
  (void)config_.get_string("seed", "");
  for (const std::string& key : extra) (void)config_.get_string(key, "");
  config_.reject_unknown();
}

std::filesystem::path RunContext::output(const std::string& relative) {
  const std::filesystem::path p = out_ / relative;
  std::filesystem::create_directories(p.parent_path());
  outputs_.push_back(relative);
  return p;
}

void RunContext::record(const KeyValueConfig& resolved) { resolved_.merge(resolved); }

void RunContext::write_manifest(int status) {
  nlohmann::ordered_json j;
  j["command"] = command_;
  j["seed"] = seed_ ? nlohmann::ordered_json(*seed_) : nlohmann::ordered_json(nullptr);
  j["status"] = status;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : resolved_.entries()) cfg[k] = v;
  j["config"] = cfg;
  j["outputs"] = outputs_;
  std::filesystem::create_directories(out_);
  std::ofstream os(out_ / "run.json");
  if (!os) throw Error((out_ / "run.json").string() + ": cannot write");
  os << j.dump(2) << '\n';
}

EventStream load_event_input(const std::filesystem::path& path, Geometry csv_geometry) {
  if (!std::filesystem::exists(path)) throw Error(path.string() + ": no such file");
  if (std::filesystem::file_size(path) == 0) return EventStream{csv_geometry, {}};
  return load_events(path, csv_geometry);
}

}  // namespace foveate::cli
