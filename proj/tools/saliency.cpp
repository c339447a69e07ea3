#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "commands.hpp"
#include "foveate/image_io.hpp"
#include "foveate/oms.hpp"
#include "foveate/proto.hpp"
#include "foveate/stimgen.hpp"

namespace foveate::cli {

namespace {

struct Window {
  std::uint64_t start = 0;
  std::uint64_t end = 0;
  ProtoInput input;
};

Window empty_window(Geometry g, std::uint64_t start, std::uint64_t end) {
  return {start, end, {Mask(g, 0), Mask(g, 0), Mask(g, 0)}};
}

void merge(Mask& into, const Mask& m) {
  auto a = into.values();
  auto b = m.values();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = static_cast<std::uint8_t>(a[i] | b[i]);
}

EventSlice whole_stream(const EventStream& stream) {
  const std::uint64_t start = stream.events.empty() ? 0 : stream.events.front().t;
  const std::uint64_t end = stream.events.empty() ? 1 : stream.events.back().t + 1;
  EventSlice slice(stream.geometry, start, end);
  for (const Event& e : stream.events) {
    if (stream.geometry.contains(e.x, e.y)) slice.add(e);
  }
  return slice;
}

// Raw source: the events of each window. OMS source: the OMS maps of every update
// interval inside a window, merged.
std::vector<Window> build_windows(const EventStream& stream, std::uint64_t window_us,
                                  bool use_oms, const OmsConfig& oms) {
  const Geometry g = stream.geometry;
  std::vector<Window> out;
  if (!use_oms) {
    if (window_us == 0) {
      const EventSlice s = whole_stream(stream);
      out.push_back({s.window_start(), s.window_end(), proto_input(s)});
    } else {
      for (const EventSlice& s : accumulate(stream.events, window_us, g).slices) {
        out.push_back({s.window_start(), s.window_end(), proto_input(s)});
      }
    }
  } else {
    const auto step = static_cast<std::uint64_t>(std::llround(oms.update_interval * 1e6));
    const AccumulateResult acc = accumulate(stream.events, step, g);
    OmsStage stage(oms, g);
    for (const EventSlice& s : acc.slices) {
      const OmsMap map = stage.step(s).map;
      const std::uint64_t origin = acc.slices.front().window_start();
      const std::size_t idx = window_us == 0 ? 0 : (s.window_start() - origin) / window_us;
      while (out.size() <= idx) {
        const std::uint64_t w0 = window_us == 0 ? origin : origin + out.size() * window_us;
        out.push_back(empty_window(g, w0, window_us == 0 ? w0 : w0 + window_us));
      }
      Window& w = out[idx];
      w.end = std::max(w.end, s.window_end());
      merge(w.input.active, map.mask);
      merge(w.input.on, map.masked_pos(s));
      merge(w.input.off, map.masked_neg(s));
    }
  }
  if (out.empty()) out.push_back(empty_window(g, 0, 0));
  return out;
}

}  // namespace

int cmd_saliency(RunContext& ctx, const SaliencyOptions& opt) {
  KeyValueConfig& cfg = ctx.config();
  const OmsConfig oms = OmsConfig::from_config(cfg);
  const ProtoConfig proto = ProtoConfig::from_config(cfg);
  const SensorModel sensor = SensorModel::from_config(cfg);
  std::string source = cfg.get_string("saliency.source", "raw");
  if (!opt.source.empty()) source = opt.source;
  const auto window_us = static_cast<std::uint64_t>(cfg.get_int("saliency.window_us", 0));
  ctx.reject_unknown({"saliency.source", "saliency.window_us"});
  if (source != "raw" && source != "oms") {
    std::cerr << "saliency: source must be raw or oms, got '" << source << "'\n";
    return kExitUsage;
  }
  if (opt.fixture.empty() == opt.input.empty()) {
    std::cerr << "saliency: give either an event file or --fixture circles\n";
    return kExitUsage;
  }
  if (!opt.fixture.empty() && opt.fixture != "circles") {
    std::cerr << "saliency: unknown fixture '" << opt.fixture << "'\n";
    return kExitUsage;
  }

  KeyValueConfig resolved;
  oms.to_config(resolved);
  proto.to_config(resolved);
  resolved.set("saliency.source", source);
  resolved.set("saliency.window_us", std::to_string(window_us));
  resolved.set("saliency.input", opt.fixture.empty() ? opt.input : "fixture:" + opt.fixture);

  CirclePattern circles;
  EventStream stream;
  if (!opt.fixture.empty()) {
    sensor.to_config(resolved);
    circles = make_calibration_circles();
    stream = simulate_circles(circles, sensor);
  } else {
    stream = load_event_input(opt.input, {opt.csv_width, opt.csv_height});
  }
  ctx.record(resolved);

  const std::vector<Window> windows = build_windows(stream, window_us, source == "oms", oms);
  std::ofstream points(ctx.output("points.csv"));
  points << "window,window_start_us,window_end_us,P_x,P_y,saliency_max,degenerate\n";
  GridD last;
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const SaliencyMap m = saliency_from_events(proto, windows[k].input);
    char name[48];
    std::snprintf(name, sizeof name, "saliency/saliency_%05zu.pgm", k);
    save_scaled_pgm(ctx.output(name), m.values);
    points << k << ',' << windows[k].start << ',' << windows[k].end << ',' << m.x << ',' << m.y
           << ',' << format_number(m.max_value) << ',' << (m.degenerate ? 1 : 0) << '\n';
    last = m.values;
  }

  if (!opt.fixture.empty()) {
    std::ofstream det(ctx.output("detections.csv"));
    det << "disk,cx,cy,radius,detected\n";
    int found = 0;
    for (std::size_t i = 0; i < circles.disks.size(); ++i) {
      const Disk& d = circles.disks[i];
      const bool hit = has_local_maximum_near(last, d.cx, d.cy, proto.radius);
      found += hit ? 1 : 0;
      det << i << ',' << format_number(d.cx) << ',' << format_number(d.cy) << ','
          << format_number(d.radius) << ',' << (hit ? 1 : 0) << '\n';
    }
    std::cout << "calibration circles: " << found << " of " << circles.disks.size()
              << " detected (" << source << " input)\n";
  } else {
    std::cout << windows.size() << " saliency windows\n";
  }
  return kExitOk;
}

}  // namespace foveate::cli
