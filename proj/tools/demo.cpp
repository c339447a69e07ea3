#include <cmath>
#include <fstream>
#include <iostream>

#include "commands.hpp"
#include "foveate/closed_loop.hpp"

namespace foveate::cli {

namespace {

// One blinking square 36 pixels right of the initial view centre.
WorldScene default_scene() {
  WorldScene w;
  w.squares.push_back({w.width / 2.0 + 36.0, w.height / 2.0, 16.0, 0.2, 0.8, 10.0});
  return w;
}

void write_gaze_csv(std::ostream& os, const std::vector<GazeRecord>& gaze) {
  os << "t_us,pan,tilt,saccade\n";
  for (const GazeRecord& g : gaze) {
    os << g.t_us << ',' << g.pan << ',' << g.tilt << ',' << (g.saccade ? 1 : 0) << '\n';
  }
}

}  // namespace

int cmd_demo(RunContext& ctx, const DemoOptions& opt) {
  if (!opt.scene.empty()) {
    // Scene file first, then the run config and flags on top of it.
    KeyValueConfig merged = KeyValueConfig::load(opt.scene);
    merged.merge(ctx.config());
    ctx.config() = merged;
  }
  KeyValueConfig& cfg = ctx.config();
  if (opt.iterations >= 0) cfg.set("loop.iterations", std::to_string(opt.iterations));
  ClosedLoopConfig config = ClosedLoopConfig::from_config(cfg);
  WorldScene scene = WorldScene::from_config(cfg);
  if (scene.squares.empty()) scene = default_scene();
  ctx.reject_unknown();

  KeyValueConfig resolved;
  config.to_config(resolved);
  scene.to_config(resolved);
  ctx.record(resolved);

  if (config.iterations == 0) {
    std::ofstream os(ctx.output("config.txt"));
    resolved.write(os);
    resolved.write(std::cout);
    return kExitOk;
  }

  const ClosedLoopResult result = run_closed_loop(scene, config);
  {
    std::ofstream os(ctx.output("trajectory.csv"));
    write_trajectory_csv(os, result.rows);
  }
  {
    std::ofstream os(ctx.output("gaze.csv"));
    write_gaze_csv(os, result.gaze);
  }
  const LatencySummary latency = summarize_latency(result.rows);
  {
    std::ofstream os(ctx.output("latency.txt"));
    write_latency_summary(os, latency);
  }
  if (result.saturations > 0) {
    std::cerr << "demo: pan-tilt limits reached on " << result.saturations << " command(s)\n";
  }
  for (const TrajectoryRow& r : result.rows) {
    const double dist = std::hypot(r.target_x - (config.view.width - 1) / 2.0,
                                   r.target_y - (config.view.height - 1) / 2.0);
    std::cout << "iteration " << r.iteration << ": P = (" << r.p_x << ", " << r.p_y << ")"
              << (r.saccade ? " saccade" : " fixation") << ", target " << format_number(dist)
              << " px from centre\n";
  }
  write_latency_summary(std::cout, latency);
  return kExitOk;
}

}  // namespace foveate::cli
