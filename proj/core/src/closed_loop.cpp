#include "foveate/closed_loop.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <thread>

namespace foveate {

namespace {

using Clock = std::chrono::steady_clock;

double micros_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

struct SliceItem {
  int iteration = 0;
  EventSlice slice;
  OmsMap map;
  double events_us = 0.0;
  double oms_us = 0.0;
};

struct Ack {
  bool saccade = false;
};

}  // namespace

void WorldScene::validate() const {
  if (width < 1 || height < 1) throw Error("scene: empty world");
  for (const auto& s : squares) {
    if (!(s.side > 0.0)) throw Error("scene: square side must be > 0");
    if (s.half_period_ms < 0.0) throw Error("scene: half period must be >= 0");
  }
}

WorldScene WorldScene::from_config(const KeyValueConfig& cfg) {
  WorldScene w;
  w.width = static_cast<int>(cfg.get_int("scene.width", w.width));
  w.height = static_cast<int>(cfg.get_int("scene.height", w.height));
  w.background = cfg.get_double("scene.background", w.background);
  for (int n = 0;; ++n) {
    const std::string key = "scene.square." + std::to_string(n);
    if (!cfg.contains(key)) break;
    const auto v = cfg.get_doubles(key, {});
    if (v.size() != 6) throw Error(key + ": expected cx, cy, side, low, high, half_period_ms");
    w.squares.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
  }
  w.validate();
  return w;
}

void WorldScene::to_config(KeyValueConfig& cfg) const {
  cfg.set("scene.width", std::to_string(width));
  cfg.set("scene.height", std::to_string(height));
  cfg.set("scene.background", format_number(background));
  for (std::size_t n = 0; n < squares.size(); ++n) {
    const auto& s = squares[n];
    cfg.set("scene.square." + std::to_string(n),
            format_number(s.cx) + ", " + format_number(s.cy) + ", " + format_number(s.side) +
                ", " + format_number(s.low) + ", " + format_number(s.high) + ", " +
                format_number(s.half_period_ms));
  }
}

double WorldScene::at(int x, int y, std::uint64_t t_us) const {
  if (x < 0 || y < 0 || x >= width || y >= height) return background;
  double v = background;
  for (const auto& s : squares) {
    const double h = s.side / 2.0;
    if (x < s.cx - h || x >= s.cx + h || y < s.cy - h || y >= s.cy + h) continue;
    if (s.half_period_ms <= 0.0) {
      v = s.high;
    } else {
      const auto phase = static_cast<std::uint64_t>(std::floor(t_us / (s.half_period_ms * 1000.0)));
      v = phase % 2 == 0 ? s.high : s.low;
    }
  }
  return v;
}

ViewOrigin view_origin(const WorldScene& scene, const PanTiltModel& model, Geometry view,
                       GazeCommand gaze) {
  const double px_per_pos = model.degrees_per_pos * pixels_per_degree(model);
  return {scene.width / 2.0 + gaze.pan * px_per_pos - view.width / 2.0,
          scene.height / 2.0 + gaze.tilt * px_per_pos - view.height / 2.0};
}

GridD render_view(const WorldScene& scene, ViewOrigin origin, Geometry view, std::uint64_t t_us) {
  GridD out(view);
  const double fx = origin.x - std::floor(origin.x);
  const double fy = origin.y - std::floor(origin.y);
  const int ox = static_cast<int>(std::floor(origin.x));
  const int oy = static_cast<int>(std::floor(origin.y));
  // World rows/columns touched by the window, sampled once.
  const int sw = view.width + 1;
  const int sh = view.height + 1;
  std::vector<double> patch(static_cast<std::size_t>(sw) * sh);
  for (int j = 0; j < sh; ++j)
    for (int i = 0; i < sw; ++i)
      patch[static_cast<std::size_t>(j) * sw + i] = scene.at(ox + i, oy + j, t_us);
  for (int y = 0; y < view.height; ++y) {
    auto row = out.row(y);
    const double* a = &patch[static_cast<std::size_t>(y) * sw];
    const double* b = a + sw;
    for (int x = 0; x < view.width; ++x) {
      const double top = a[x] + fx * (a[x + 1] - a[x]);
      const double bottom = b[x] + fx * (b[x + 1] - b[x]);
      row[static_cast<std::size_t>(x)] = top + fy * (bottom - top);
    }
  }
  return out;
}

ClosedLoopConfig::ClosedLoopConfig() {
  proto.polarity_split = false;
  sensor.noise_rate = 0.0;
}

void ClosedLoopConfig::validate() const {
  if (view.width < 1 || view.height < 1) throw Error("loop: empty view");
  if (iterations < 0) throw Error("loop: iterations must be >= 0");
  if (frame_us == 0 || slice_us < frame_us) throw Error("loop: need 0 < frame_us <= slice_us");
  if (walk_steps < 1 || walk_step_scale < 0) throw Error("loop: invalid fixational walk");
  oms.validate();
  proto.validate();
  controller.validate();
  ptu.validate();
  sensor.validate();
}

ClosedLoopConfig ClosedLoopConfig::from_config(const KeyValueConfig& cfg) {
  ClosedLoopConfig c;
  c.view.width = static_cast<int>(cfg.get_int("loop.view_width", c.view.width));
  c.view.height = static_cast<int>(cfg.get_int("loop.view_height", c.view.height));
  c.iterations = static_cast<int>(cfg.get_int("loop.iterations", c.iterations));
  c.slice_us = static_cast<std::uint64_t>(
      cfg.get_int("loop.slice_us", static_cast<long long>(c.slice_us)));
  c.frame_us = static_cast<std::uint64_t>(
      cfg.get_int("loop.frame_us", static_cast<long long>(c.frame_us)));
  c.walk_steps = static_cast<int>(cfg.get_int("loop.walk_steps", c.walk_steps));
  c.walk_step_scale = static_cast<int>(cfg.get_int("loop.walk_step_scale", c.walk_step_scale));
  c.queue_capacity = static_cast<std::size_t>(
      cfg.get_int("loop.queue_capacity", static_cast<long long>(c.queue_capacity)));
  c.seed = static_cast<std::uint64_t>(cfg.get_int("loop.seed", static_cast<long long>(c.seed)));
  c.oms = OmsConfig::from_config(cfg, c.oms);
  c.proto = ProtoConfig::from_config(cfg, c.proto);
  c.controller = ControllerConfig::from_config(cfg);
  c.ptu = PanTiltModel::from_config(cfg);
  c.sensor = SensorModel::from_config(cfg, c.sensor);
  c.validate();
  return c;
}

void ClosedLoopConfig::to_config(KeyValueConfig& cfg) const {
  cfg.set("loop.view_width", std::to_string(view.width));
  cfg.set("loop.view_height", std::to_string(view.height));
  cfg.set("loop.iterations", std::to_string(iterations));
  cfg.set("loop.slice_us", std::to_string(slice_us));
  cfg.set("loop.frame_us", std::to_string(frame_us));
  cfg.set("loop.walk_steps", std::to_string(walk_steps));
  cfg.set("loop.walk_step_scale", std::to_string(walk_step_scale));
  cfg.set("loop.queue_capacity", std::to_string(queue_capacity));
  cfg.set("loop.seed", std::to_string(seed));
  oms.to_config(cfg);
  proto.to_config(cfg);
  controller.to_config(cfg);
  ptu.to_config(cfg);
  sensor.to_config(cfg);
}

ClosedLoopResult run_closed_loop(const WorldScene& scene, const ClosedLoopConfig& config) {
  scene.validate();
  config.validate();
  const Geometry view = config.view;
  PanTiltPlant plant(config.ptu, config.seed);
  SpikingController controller(config.controller);
  const double ppd = pixels_per_degree(config.ptu);

  BoundedQueue<SliceItem> slices(config.queue_capacity);
  BoundedQueue<Ack> acks(1);
  ClosedLoopResult result;
  std::exception_ptr producer_error;
  std::exception_ptr consumer_error;
  auto fail = [&](std::exception_ptr& slot) {
    slot = std::current_exception();
    slices.close();
    acks.close();
  };

  auto frame_at = [&](GazeCommand g, std::uint64_t t) {
    return render_view(scene, view_origin(scene, config.ptu, view, g), view, t);
  };
  auto ptu_units = [&](double cmd) {
    return to_ptu_units(cmd, config.ptu.alpha_cmd, config.ptu.degrees_per_pos, ppd);
  };

  std::thread producer([&] {
    try {
      EventSensor sensor(view, config.sensor);
      OmsStage oms(config.oms, view);
      std::uint64_t t = 0;
      sensor.reset(frame_at(plant.position(), t), t);
      std::vector<Event> events;
      for (int it = 0; it < config.iterations; ++it) {
        const auto t_events = Clock::now();
        const std::uint64_t t0 = t;
        EventSlice slice(view, t0 + 1, t0 + config.slice_us + 1);
        while (t < t0 + config.slice_us) {
          t += config.frame_us;
          const GazeCommand g = plant.advance(t);
          events.clear();
          sensor.step(frame_at(g, t), t, events);
          for (const Event& e : events) slice.add(e);
        }
        SliceItem item{it, slice, {}, micros_since(t_events), 0.0};
        const auto t_oms = Clock::now();
        item.map = oms.step(slice).map;
        item.oms_us = micros_since(t_oms);
        if (!slices.push(std::move(item))) return;
        const auto ack = acks.pop();
        if (!ack) return;
        if (ack->saccade) {
          // The sensor is blind during the saccade and adapts to the new view.
          sensor.reset(frame_at(plant.position(), t), t);
          oms.reset();
        }
      }
      slices.close();
    } catch (...) {
      fail(producer_error);
    }
  });

  std::thread consumer([&] {
    try {
      ProtoStage proto(config.proto, view);
      std::mt19937_64 walk_rng(config.seed ^ 0x5bd1e995ULL);
      const double dt = static_cast<double>(config.slice_us) * 1e-6;
      while (auto item = slices.pop()) {
        TrajectoryRow row;
        row.iteration = item->iteration;
        row.t_us = item->slice.window_end() - 1;
        row.events = item->slice.total_events();
        row.oms_events = item->map.pos_events + item->map.neg_events;
        row.latency.events_us = item->events_us;
        row.latency.oms_us = item->oms_us;

        const auto t_proto = Clock::now();
        const SaliencyMap sal = proto.step(proto_input(item->map, item->slice), dt);
        row.latency.proto_us = micros_since(t_proto);
        row.p_x = sal.x;
        row.p_y = sal.y;
        row.saliency_max = sal.max_value;

        if (!sal.degenerate) {
          const auto t_ctl = Clock::now();
          const ControllerCommand cmd = controller.step(sal.x, sal.y);
          row.cmd_pan = cmd.cmd_pan;
          row.cmd_tilt = cmd.cmd_tilt;
          row.u_pan = ptu_units(cmd.cmd_pan);
          row.u_tilt = ptu_units(cmd.cmd_tilt);
          row.latency.control_us = micros_since(t_ctl);
          const auto t_plant = Clock::now();
          row.saturated = plant.saccade(row.u_pan, row.u_tilt, row.t_us);
          row.saccade = true;
          proto.reset();
          plant.enqueue(fixational_walk(plant.position(), config.walk_steps, config.walk_step_scale,
                                        plant.ranges(), walk_rng));
          row.latency.plant_us = micros_since(t_plant);
        } else if (plant.pending() == 0) {
          plant.enqueue(fixational_walk(plant.position(), config.walk_steps, config.walk_step_scale,
                                        plant.ranges(), walk_rng));
        }
        const GazeCommand g = plant.position();
        row.pan_pos = g.pan;
        row.tilt_pos = g.tilt;
        if (!scene.squares.empty()) {
          const ViewOrigin o = view_origin(scene, config.ptu, view, g);
          row.target_x = scene.squares.front().cx - 0.5 - o.x;
          row.target_y = scene.squares.front().cy - 0.5 - o.y;
        }
        result.rows.push_back(row);
        acks.push(Ack{row.saccade});
      }
      acks.close();
    } catch (...) {
      fail(consumer_error);
    }
  });

  producer.join();
  consumer.join();
  if (producer_error) std::rethrow_exception(producer_error);
  if (consumer_error) std::rethrow_exception(consumer_error);
  result.gaze = plant.history();
  result.saturations = plant.saturations();
  return result;
}

void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryRow>& rows) {
  os << "iteration,t_us,P_x,P_y,saliency_max,saccade,cmd_pan,cmd_tilt,u_pan,u_tilt,pan_pos,"
        "tilt_pos,saturated,events,oms_events,target_x,target_y,events_latency_us,"
        "oms_latency_us,proto_latency_us,control_latency_us,plant_latency_us\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf,
                  "%d,%llu,%d,%d,%.6g,%d,%.4f,%.4f,%lld,%lld,%d,%d,%d,%llu,%llu,%.3f,%.3f,%.1f,%.1f,"
                  "%.1f,%.1f,%.1f\n",
                  r.iteration, static_cast<unsigned long long>(r.t_us), r.p_x, r.p_y,
                  r.saliency_max, r.saccade ? 1 : 0, r.cmd_pan, r.cmd_tilt,
                  static_cast<long long>(r.u_pan), static_cast<long long>(r.u_tilt), r.pan_pos,
                  r.tilt_pos, r.saturated ? 1 : 0, static_cast<unsigned long long>(r.events),
                  static_cast<unsigned long long>(r.oms_events), r.target_x, r.target_y,
                  r.latency.events_us, r.latency.oms_us, r.latency.proto_us,
                  r.latency.control_us, r.latency.plant_us);
    os << buf;
  }
}

namespace {

LatencyStats latency_stats(const std::vector<double>& v) {
  LatencyStats s;
  if (v.empty()) return s;
  for (const double x : v) {
    s.mean_us += x;
    s.max_us = std::max(s.max_us, x);
  }
  s.mean_us /= static_cast<double>(v.size());
  double ss = 0.0;
  for (const double x : v) ss += (x - s.mean_us) * (x - s.mean_us);
  s.std_us = std::sqrt(ss / static_cast<double>(v.size()));
  return s;
}

}  // namespace

LatencySummary summarize_latency(std::span<const TrajectoryRow> rows) {
  std::vector<double> ev, om, pr, ct, pl, pe;
  for (const TrajectoryRow& r : rows) {
    ev.push_back(r.latency.events_us);
    om.push_back(r.latency.oms_us);
    pr.push_back(r.latency.proto_us);
    pe.push_back(r.latency.oms_us + r.latency.proto_us);
    if (r.saccade) {
      ct.push_back(r.latency.control_us);
      pl.push_back(r.latency.plant_us);
    }
  }
  LatencySummary s;
  s.samples = rows.size();
  s.events = latency_stats(ev);
  s.oms = latency_stats(om);
  s.proto = latency_stats(pr);
  s.control = latency_stats(ct);
  s.plant = latency_stats(pl);
  s.perception = latency_stats(pe);
  return s;
}

void write_latency_summary(std::ostream& os, const LatencySummary& summary) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-22s %12s %12s %12s\n", "stage", "mean (ms)", "std (ms)",
                "max (ms)");
  os << buf;
  auto line = [&](const char* name, const LatencyStats& st) {
    std::snprintf(buf, sizeof buf, "%-22s %12.4f %12.4f %12.4f\n", name, st.mean_us * 1e-3,
                  st.std_us * 1e-3, st.max_us * 1e-3);
    os << buf;
  };
  line("events", summary.events);
  line("oms", summary.oms);
  line("saliency", summary.proto);
  line("control", summary.control);
  line("plant", summary.plant);
  line("oms+saliency+argmax", summary.perception);
  os << "samples " << summary.samples << '\n';
}

}  // namespace foveate
