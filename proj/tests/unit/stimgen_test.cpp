#include <doctest.h>

#include <cmath>
#include <numeric>

#include "foveate/stimgen.hpp"

using namespace foveate;

namespace {

SensorModel quiet_sensor() {
  SensorModel m;
  m.noise_rate = 0.0;
  return m;
}

GratingScenario short_scenario(GratingMode mode) {
  GratingScenario s;
  s.geometry = {32, 32};
  s.mode = mode;
  s.duration = 0.25;
  return s;
}

}  // namespace

TEST_CASE("frames stay in the unit interval") {
  GratingScenario s;
  for (int n : {0, 17, 200}) {
    const GridD f = render_frame(s, n);
    for (double v : f.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("whole-cycle gratings average one half") {
  GratingScenario s;
  s.background_sf = 2.0;
  s.foreground_sf = 2.0;  // disk and background coincide at frame 0
  const GridD f = render_frame(s, 0);
  CHECK(grid_sum(f) / static_cast<double>(f.size()) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("object-only mode keeps the background static") {
  const GratingScenario s = short_scenario(GratingMode::ObjectOnly);
  const GridD a = render_frame(s, 0);
  const GridD b = render_frame(s, 9);
  bool disk_moved = false;
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      if (s.in_disk(x, y)) {
        disk_moved = disk_moved || a(x, y) != b(x, y);
      } else {
        CHECK(a(x, y) == b(x, y));
      }
    }
  }
  CHECK(disk_moved);
}

TEST_CASE("eye-only background is periodic in 1 / speed frames") {
  GratingScenario s = short_scenario(GratingMode::EyeOnly);
  s.background_speed = 0.25;  // exactly four frames per period
  const GridD a = render_frame(s, 1);
  const GridD b = render_frame(s, 5);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values()[i] == doctest::Approx(b.values()[i]));
}

TEST_CASE("sensor emits nothing for constant frames") {
  const std::vector<GridD> frames(5, GridD({8, 8}, 0.4));
  CHECK(simulate_events(frames, quiet_sensor(), 100.0).empty());
}

TEST_CASE("a log step of two thresholds emits two ON events, the reverse two OFF events") {
  SensorModel m = quiet_sensor();
  m.refractory_us = 0.0;
  const GridD lo({1, 1}, 1.0);
  const GridD hi({1, 1}, std::exp(0.2));
  const std::vector<GridD> up{lo, hi};
  const auto on = simulate_events(up, m, 1000.0);
  REQUIRE(on.size() == 2);
  CHECK(on[0].polarity == Polarity::On);
  CHECK(on[1].polarity == Polarity::On);
  CHECK(on[0].t <= on[1].t);

  const std::vector<GridD> down{hi, lo};
  const auto off = simulate_events(down, m, 1000.0);
  REQUIRE(off.size() == 2);
  CHECK(off[0].polarity == Polarity::Off);
}

TEST_CASE("refractory period drops crossings that come too fast") {
  SensorModel m = quiet_sensor();
  m.refractory_us = 1e6;
  const std::vector<GridD> frames{GridD({1, 1}, 1.0), GridD({1, 1}, std::exp(0.5))};
  CHECK(simulate_events(frames, m, 1000.0).size() == 1);
}

TEST_CASE("simulation is deterministic for a fixed seed, including noise") {
  SensorModel m;
  m.noise_rate = 5.0;
  m.seed = 42;
  const GratingScenario s = short_scenario(GratingMode::EyeAndObject);
  CHECK(simulate_scenario(s, m).events == simulate_scenario(s, m).events);
  SensorModel other = m;
  other.seed = 43;
  CHECK(simulate_scenario(s, m).events != simulate_scenario(s, other).events);
}

TEST_CASE("event timestamps are sorted and within the frame span") {
  const GratingScenario s = short_scenario(GratingMode::EyeAndObject);
  const EventStream st = simulate_scenario(s, quiet_sensor());
  REQUIRE_FALSE(st.events.empty());
  CHECK(std::is_sorted(st.events.begin(), st.events.end(),
                       [](const Event& a, const Event& b) { return a.t < b.t; }));
  CHECK(st.events.back().t <= frame_time_us(s.frame_count() - 1, s.frame_rate));
}

TEST_CASE("event count grows with object speed") {
  GratingScenario s = short_scenario(GratingMode::ObjectOnly);
  std::size_t prev = 0;
  for (double speed : {0.01, 0.03, 0.09}) {
    s.foreground_speed = speed;
    const std::size_t n = simulate_scenario(s, quiet_sensor()).events.size();
    CHECK(n > prev);
    prev = n;
  }
}

TEST_CASE("characterization suite has sixteen experiments in the published order") {
  const auto suite = make_characterization_suite();
  REQUIRE(suite.size() == 16);
  for (std::size_t i = 0; i < suite.size(); ++i) CHECK(suite[i].id == static_cast<int>(i) + 1);
  CHECK(suite[1].scenario.mode == GratingMode::EyeOnly);
  CHECK(suite[2].scenario.mode == GratingMode::ObjectOnly);
  CHECK(suite[12].scenario.background_speed == 0.09);
  CHECK(suite[12].scenario.foreground_speed == 0.01);
  for (const auto& n : suite) {
    CHECK(n.scenario.geometry == Geometry{128, 128});
    CHECK(n.scenario.frame_count() == 240);
  }
}

TEST_CASE("scenario config round trip and validation") {
  GratingScenario s;
  s.mode = GratingMode::ObjectOnly;
  s.background_sf = 1.5;
  KeyValueConfig cfg;
  s.to_config(cfg);
  const GratingScenario back = GratingScenario::from_config(cfg);
  CHECK(back.mode == GratingMode::ObjectOnly);
  CHECK(back.background_sf == 1.5);
  CHECK_THROWS_AS(parse_grating_mode("sideways"), Error);
  s.duration = 0.0;
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("calibration circles: six disks, dark on light, every edge produces events") {
  const CirclePattern p = make_calibration_circles();
  REQUIRE(p.disks.size() == 6);
  const GridD img = render_circles(p, 0.0, 0.0);
  for (const Disk& d : p.disks) {
    CHECK(img(static_cast<int>(d.cx), static_cast<int>(d.cy)) == doctest::Approx(p.foreground));
  }
  CHECK(img(0, 0) == doctest::Approx(p.background));

  const EventStream st = simulate_circles(p, quiet_sensor());
  for (const Disk& d : p.disks) {
    int near_edge = 0;
    for (const Event& e : st.events) {
      const double r = std::hypot(e.x + 0.5 - d.cx, e.y + 0.5 - d.cy);
      if (std::abs(r - d.radius) < 3.0) ++near_edge;
    }
    CHECK(near_edge > 0);
  }
}
