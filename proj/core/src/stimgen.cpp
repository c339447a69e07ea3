#include "foveate/stimgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

namespace foveate {

std::string to_string(GratingMode m) {
  switch (m) {
    case GratingMode::EyeOnly: return "eye_only";
    case GratingMode::ObjectOnly: return "object_only";
    case GratingMode::EyeAndObject: return "eye_and_object";
  }
  return "unknown";
}

GratingMode parse_grating_mode(const std::string& s) {
  if (s == "eye_only") return GratingMode::EyeOnly;
  if (s == "object_only") return GratingMode::ObjectOnly;
  if (s == "eye_and_object") return GratingMode::EyeAndObject;
  throw Error("unknown grating mode '" + s + "'");
}

double GratingScenario::effective_background_speed() const {
  return mode == GratingMode::ObjectOnly ? 0.0 : background_speed;
}

double GratingScenario::effective_foreground_speed() const {
  return mode == GratingMode::EyeOnly ? 0.0 : foreground_speed;
}

double GratingScenario::disk_radius() const {
  return foreground_radius > 0.0 ? foreground_radius : geometry.width / 4.0;
}

bool GratingScenario::in_disk(int x, int y) const {
  const double dx = x + 0.5 - geometry.width / 2.0;
  const double dy = y + 0.5 - geometry.height / 2.0;
  const double r = disk_radius();
  return dx * dx + dy * dy <= r * r;
}

int GratingScenario::frame_count() const {
  return static_cast<int>(std::lround(duration * frame_rate));
}

void GratingScenario::validate() const {
  if (geometry.width <= 0 || geometry.height <= 0) throw Error("scenario: empty geometry");
  if (!(background_sf > 0.0) || !(foreground_sf > 0.0)) throw Error("scenario: sf must be > 0");
  if (background_speed < 0.0 || foreground_speed < 0.0) throw Error("scenario: speeds must be >= 0");
  if (!(frame_rate > 0.0)) throw Error("scenario: frame_rate must be > 0");
  if (!(duration > 0.0)) throw Error("scenario: duration must be > 0");
}

GratingScenario GratingScenario::from_config(const KeyValueConfig& cfg) {
  GratingScenario s;
  s.geometry.width = static_cast<int>(cfg.get_int("width", s.geometry.width));
  s.geometry.height = static_cast<int>(cfg.get_int("height", s.geometry.height));
  s.background_sf = cfg.get_double("background_sf", s.background_sf);
  s.background_speed = cfg.get_double("background_speed", s.background_speed);
  s.foreground_sf = cfg.get_double("foreground_sf", s.foreground_sf);
  s.foreground_speed = cfg.get_double("foreground_speed", s.foreground_speed);
  s.foreground_radius = cfg.get_double("foreground_radius", s.foreground_radius);
  s.mode = parse_grating_mode(cfg.get_string("mode", to_string(s.mode)));
  s.frame_rate = cfg.get_double("frame_rate", s.frame_rate);
  s.duration = cfg.get_double("duration", s.duration);
  s.validate();
  return s;
}

void GratingScenario::to_config(KeyValueConfig& cfg) const {
  const auto num = format_number;
  cfg.set("width", std::to_string(geometry.width));
  cfg.set("height", std::to_string(geometry.height));
  cfg.set("background_sf", num(background_sf));
  cfg.set("background_speed", num(background_speed));
  cfg.set("foreground_sf", num(foreground_sf));
  cfg.set("foreground_speed", num(foreground_speed));
  cfg.set("foreground_radius", num(disk_radius()));
  cfg.set("mode", to_string(mode));
  cfg.set("frame_rate", num(frame_rate));
  cfg.set("duration", num(duration));
}

GridD render_frame(const GratingScenario& s, int frame_index) {
  if (frame_index < 0) throw Error("render_frame: negative frame index");
  const int w = s.geometry.width;
  const int h = s.geometry.height;
  const double two_pi = 2.0 * std::numbers::pi;
  const double bg_phase = s.effective_background_speed() * frame_index;
  const double fg_phase = s.effective_foreground_speed() * frame_index;

  // The gratings are vertical, so one row of each layer serves every row.
  std::vector<double> bg(static_cast<std::size_t>(w));
  std::vector<double> fg(static_cast<std::size_t>(w));
  for (int x = 0; x < w; ++x) {
    bg[static_cast<std::size_t>(x)] =
        0.5 + 0.5 * std::sin(two_pi * (s.background_sf * x / w - bg_phase));
    fg[static_cast<std::size_t>(x)] =
        0.5 + 0.5 * std::sin(two_pi * (s.foreground_sf * x / w - fg_phase));
  }
  GridD img(s.geometry);
  for (int y = 0; y < h; ++y) {
    auto row = img.row(y);
    for (int x = 0; x < w; ++x) {
      row[static_cast<std::size_t>(x)] =
          s.in_disk(x, y) ? fg[static_cast<std::size_t>(x)] : bg[static_cast<std::size_t>(x)];
    }
  }
  return img;
}

void SensorModel::validate() const {
  if (!(threshold > 0.0)) throw Error("sensor: threshold must be > 0");
  if (refractory_us < 0.0) throw Error("sensor: refractory must be >= 0");
  if (noise_rate < 0.0) throw Error("sensor: noise_rate must be >= 0");
  if (!(intensity_floor > 0.0)) throw Error("sensor: intensity_floor must be > 0");
}

SensorModel SensorModel::from_config(const KeyValueConfig& cfg, SensorModel defaults) {
  SensorModel m = defaults;
  m.threshold = cfg.get_double("sensor.threshold", m.threshold);
  m.refractory_us = cfg.get_double("sensor.refractory_us", m.refractory_us);
  m.noise_rate = cfg.get_double("sensor.noise_rate", m.noise_rate);
  m.intensity_floor = cfg.get_double("sensor.intensity_floor", m.intensity_floor);
  m.seed = static_cast<std::uint64_t>(cfg.get_int("sensor.seed", static_cast<long long>(m.seed)));
  m.validate();
  return m;
}

void SensorModel::to_config(KeyValueConfig& cfg) const {
  cfg.set("sensor.threshold", format_number(threshold));
  cfg.set("sensor.refractory_us", format_number(refractory_us));
  cfg.set("sensor.noise_rate", format_number(noise_rate));
  cfg.set("sensor.intensity_floor", format_number(intensity_floor));
  cfg.set("sensor.seed", std::to_string(seed));
}

EventSensor::EventSensor(Geometry g, SensorModel model) : geom_(g), model_(model), rng_(model.seed) {
  model_.validate();
  if (g.width <= 0 || g.height <= 0) throw Error("sensor: empty geometry");
}

namespace {

double log_intensity(double v, double floor) { return std::log(std::max(v, floor)); }

}  // namespace

void EventSensor::reset(const GridD& first_frame, std::uint64_t t_us) {
  require_same_geometry(geom_, first_frame.geometry(), "event sensor");
  const std::size_t n = geom_.area();
  log_prev_.resize(n);
  reference_.resize(n);
  last_event_.assign(n, std::numeric_limits<std::int64_t>::min() / 2);
  auto src = first_frame.values();
  for (std::size_t i = 0; i < n; ++i) {
    log_prev_[i] = log_intensity(src[i], model_.intensity_floor);
    reference_[i] = log_prev_[i];
  }
  t_ = t_us;
  initialized_ = true;
}

void EventSensor::step(const GridD& frame, std::uint64_t t_us, std::vector<Event>& out) {
  if (!initialized_) throw Error("event sensor: step before reset");
  require_same_geometry(geom_, frame.geometry(), "event sensor");
  if (t_us <= t_) throw Error("event sensor: frame times must increase");

  const double th = model_.threshold;
  const auto t0 = static_cast<double>(t_);
  const double span = static_cast<double>(t_us - t_);
  const auto refractory = static_cast<std::int64_t>(std::llround(model_.refractory_us));
  const std::size_t first = out.size();
  auto src = frame.values();

  for (int y = 0; y < geom_.height; ++y) {
    for (int x = 0; x < geom_.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * geom_.width + x;
      const double l_prev = log_prev_[i];
      const double l_next = log_intensity(src[i], model_.intensity_floor);
      log_prev_[i] = l_next;
      const double delta = l_next - reference_[i];
      // Tolerance keeps an exact k-step change from rounding down to k-1.
      const auto steps = static_cast<long>(std::floor(std::abs(delta) / th + 1e-9));
      if (steps == 0) continue;
      const double dir = delta > 0.0 ? 1.0 : -1.0;
      const Polarity pol = delta > 0.0 ? Polarity::On : Polarity::Off;
      const double slope = l_next - l_prev;
      for (long k = 1; k <= steps; ++k) {
        const double level = reference_[i] + dir * th;
        reference_[i] = level;
        double frac = slope != 0.0 ? (level - l_prev) / slope : 1.0;
        frac = std::clamp(frac, 0.0, 1.0);
        auto t = static_cast<std::int64_t>(std::llround(t0 + frac * span));
        t = std::max<std::int64_t>(t, static_cast<std::int64_t>(t_) + 1);
        if (t - last_event_[i] < refractory) continue;
        last_event_[i] = t;
        out.push_back(Event{static_cast<std::uint64_t>(t), static_cast<std::uint16_t>(x),
                            static_cast<std::uint16_t>(y), pol});
      }
    }
  }

  if (model_.noise_rate > 0.0) {
    const double expected = model_.noise_rate * static_cast<double>(geom_.area()) * span * 1e-6;
    std::poisson_distribution<long> count(expected);
    std::uniform_int_distribution<int> px(0, geom_.width - 1);
    std::uniform_int_distribution<int> py(0, geom_.height - 1);
    std::uniform_int_distribution<std::uint64_t> pt(t_ + 1, t_us);
    std::bernoulli_distribution on(0.5);
    const long n = count(rng_);
    for (long k = 0; k < n; ++k) {
      const int x = px(rng_);
      const int y = py(rng_);
      const std::uint64_t t = pt(rng_);
      const Polarity p = on(rng_) ? Polarity::On : Polarity::Off;
      out.push_back(Event{t, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), p});
    }
  }

  std::stable_sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(),
                   [](const Event& a, const Event& b) {
                     return std::tie(a.t, a.y, a.x) < std::tie(b.t, b.y, b.x);
                   });
  t_ = t_us;
}

std::uint64_t frame_time_us(int index, double frame_rate) {
  return static_cast<std::uint64_t>(std::llround(index * 1e6 / frame_rate));
}

std::vector<Event> simulate_events(std::span<const GridD> frames, const SensorModel& model,
                                   double frame_rate) {
  if (frames.size() < 2) throw Error("simulate_events: need at least two frames");
  if (!(frame_rate > 0.0)) throw Error("simulate_events: frame_rate must be > 0");
  const Geometry g = frames.front().geometry();
  for (const GridD& f : frames) require_same_geometry(g, f.geometry(), "simulate_events");
  EventSensor sensor(g, model);
  sensor.reset(frames.front(), 0);
  std::vector<Event> out;
  for (std::size_t n = 1; n < frames.size(); ++n) {
    sensor.step(frames[n], frame_time_us(static_cast<int>(n), frame_rate), out);
  }
  return out;
}

EventStream simulate_scenario(const GratingScenario& scenario, const SensorModel& model) {
  scenario.validate();
  EventSensor sensor(scenario.geometry, model);
  EventStream stream{scenario.geometry, {}};
  sensor.reset(render_frame(scenario, 0), 0);
  const int frames = scenario.frame_count();
  for (int n = 1; n < frames; ++n) {
    sensor.step(render_frame(scenario, n), frame_time_us(n, scenario.frame_rate), stream.events);
  }
  return stream;
}

void CirclePattern::validate() const {
  if (geometry.width <= 0 || geometry.height <= 0) throw Error("circles: empty geometry");
  for (const Disk& d : disks) {
    if (!(d.radius > 0.0)) throw Error("circles: disk radius must be > 0");
  }
  if (!(frame_rate > 0.0) || !(duration > 0.0)) {
    throw Error("circles: frame_rate and duration must be > 0");
  }
  if (!(jitter_period > 0.0) || jitter_radius < 0.0) throw Error("circles: invalid jitter");
  if (frame_count() < 2) throw Error("circles: duration covers fewer than two frames");
}

int CirclePattern::frame_count() const {
  return static_cast<int>(std::floor(duration * frame_rate + 1e-9)) + 1;
}

CirclePattern make_calibration_circles() {
  CirclePattern p;
  const double radii[] = {12.5, 15.0, 17.5, 20.0, 22.5, 25.0};
  for (int k = 0; k < 6; ++k) {
    p.disks.push_back({40.0 + 80.0 * (k % 3), 40.0 + 80.0 * (k / 3), radii[k]});
  }
  return p;
}

GridD render_circles(const CirclePattern& pattern, double dx, double dy) {
  constexpr int kSub = 4;
  GridD img(pattern.geometry, pattern.background);
  for (const Disk& d : pattern.disks) {
    const double cx = d.cx + dx;
    const double cy = d.cy + dy;
    const double r2 = d.radius * d.radius;
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - d.radius)) - 1);
    const int x1 = std::min(pattern.geometry.width - 1, static_cast<int>(std::ceil(cx + d.radius)) + 1);
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - d.radius)) - 1);
    const int y1 = std::min(pattern.geometry.height - 1, static_cast<int>(std::ceil(cy + d.radius)) + 1);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        int inside = 0;
        for (int j = 0; j < kSub; ++j) {
          for (int i = 0; i < kSub; ++i) {
            const double px = x + (i + 0.5) / kSub - cx;
            const double py = y + (j + 0.5) / kSub - cy;
            inside += static_cast<int>(px * px + py * py <= r2);
          }
        }
        const double cover = static_cast<double>(inside) / (kSub * kSub);
        img(x, y) += cover * (pattern.foreground - img(x, y));
      }
    }
  }
  return img;
}

EventStream simulate_circles(const CirclePattern& pattern, const SensorModel& model) {
  pattern.validate();
  auto frame = [&](int n) {
    const double phase = 2.0 * std::numbers::pi * (n / pattern.frame_rate) / pattern.jitter_period;
    return render_circles(pattern, pattern.jitter_radius * std::cos(phase),
                          pattern.jitter_radius * std::sin(phase));
  };
  EventSensor sensor(pattern.geometry, model);
  EventStream stream{pattern.geometry, {}};
  sensor.reset(frame(0), 0);
  for (int n = 1; n < pattern.frame_count(); ++n) {
    sensor.step(frame(n), frame_time_us(n, pattern.frame_rate), stream.events);
  }
  return stream;
}

std::vector<NamedScenario> make_characterization_suite() {
  auto make = [](int id, std::string name, GratingMode mode, double bg_sf, double bg_s,
                 double fg_sf, double fg_s) {
    GratingScenario s;
    s.mode = mode;
    s.background_sf = bg_sf;
    s.background_speed = bg_s;
    s.foreground_sf = fg_sf;
    s.foreground_speed = fg_s;
    s.frame_rate = 60.0;
    s.duration = 4.0;
    return NamedScenario{id, std::move(name), s};
  };
  using M = GratingMode;
  return {
      make(1, "eye+object", M::EyeAndObject, 0.3, 0.01, 3.0, 0.09),
      make(2, "eye only", M::EyeOnly, 0.3, 0.01, 3.0, 0.09),
      make(3, "object only", M::ObjectOnly, 0.3, 0.01, 3.0, 0.09),
      make(4, "sf bg 0.2", M::EyeAndObject, 0.2, 0.01, 3.0, 0.09),
      make(5, "sf bg 1", M::EyeAndObject, 1.0, 0.01, 3.0, 0.09),
      make(6, "sf bg 4", M::EyeAndObject, 4.0, 0.01, 3.0, 0.09),
      make(7, "sf fg 0.2", M::EyeAndObject, 3.0, 0.01, 0.2, 0.09),
      make(8, "sf fg 1", M::EyeAndObject, 3.0, 0.01, 1.0, 0.09),
      make(9, "sf fg 4", M::EyeAndObject, 3.0, 0.01, 4.0, 0.09),
      make(10, "speed bg 0.01 fg 0.01", M::EyeAndObject, 0.3, 0.01, 3.0, 0.01),
      make(11, "speed bg 0.03 fg 0.01", M::EyeAndObject, 0.3, 0.03, 3.0, 0.01),
      make(12, "speed bg 0.05 fg 0.01", M::EyeAndObject, 0.3, 0.05, 3.0, 0.01),
      make(13, "speed bg 0.09 fg 0.01", M::EyeAndObject, 0.3, 0.09, 3.0, 0.01),
      make(14, "speed bg 0.05 fg 0.05", M::EyeAndObject, 0.3, 0.05, 3.0, 0.05),
      make(15, "speed bg 0.09 fg 0.05", M::EyeAndObject, 0.3, 0.09, 3.0, 0.05),
      make(16, "speed bg 0.13 fg 0.05", M::EyeAndObject, 0.3, 0.13, 3.0, 0.05),
  };
}

}  // namespace foveate
