#include <doctest.h>

#include <cmath>
#include <random>

#include "foveate/control.hpp"
#include "foveate/grid.hpp"

using namespace foveate;

TEST_CASE("LIF rate curve: silent at or below threshold, saturating at 1 / tau_ref") {
  CHECK(lif_rate(1.0, 0.02, 0.002) == 0.0);
  CHECK(lif_rate(0.3, 0.02, 0.002) == 0.0);
  const double r = lif_rate(2.0, 0.02, 0.002);
  CHECK(r == doctest::Approx(1.0 / (0.002 + 0.02 * std::log(2.0))));
  CHECK(lif_rate(1e9, 0.02, 0.002) == doctest::Approx(500.0).epsilon(1e-3));
  CHECK(lif_rate(3.0, 0.02, 0.002) > r);
}

TEST_CASE("a single unbiased linear unit fits a proportional target exactly") {
  ControllerConfig c;
  c.model = NeuronModel::Linear;
  c.neurons = 1;
  c.intercept_low = 0.0;
  c.intercept_high = 0.0;
  c.regularization = 0.0;
  c.gain_pan = 0.7;
  const DecodedController d = solve_decoders(c);
  CHECK(d.pan.rmse < 1e-9);
  CHECK(decode_rate(d.pan, c, 40.0) == doctest::Approx(28.0));
}

TEST_CASE("default LIF decoders reach 5% of the field of view") {
  const ControllerConfig c;
  const DecodedController d = solve_decoders(c);
  CHECK(d.pan.rmse <= 0.05 * 128.0);
  CHECK(d.tilt.rmse <= 0.05 * 128.0);
  CHECK(d.pan.size() == 50);
}

TEST_CASE("zero gain decodes to zero") {
  ControllerConfig c;
  c.gain_pan = 0.0;
  const DecodedController d = solve_decoders(c);
  for (double w : d.pan.decoders) CHECK(w == 0.0);
}

TEST_CASE("decoders are reproducible for a seed") {
  ControllerConfig c;
  CHECK(solve_decoders(c).pan.decoders == solve_decoders(c).pan.decoders);
  ControllerConfig other = c;
  other.seed = c.seed + 1;
  CHECK(solve_decoders(other).pan.decoders != solve_decoders(c).pan.decoders);
}

TEST_CASE("spiking controller: near zero at the centre, proportional off-centre") {
  SpikingController ctl{ControllerConfig{}};
  const ControllerCommand centre = ctl.step(64.0, 64.0);
  CHECK(std::abs(centre.cmd_pan) <= 2.0);
  CHECK(std::abs(centre.cmd_tilt) <= 2.0);

  const ControllerCommand right = ctl.step(127.0, 64.0);
  CHECK(std::abs(right.cmd_pan - 63.0) <= 0.05 * 128.0);
  CHECK(std::abs(right.cmd_tilt) <= 0.05 * 128.0);

  const ControllerCommand up_left = ctl.step(20.0, 10.0);
  CHECK(up_left.cmd_pan < -30.0);
  CHECK(up_left.cmd_tilt < -40.0);
}

TEST_CASE("each axis only sees its own error") {
  SpikingController a{ControllerConfig{}};
  SpikingController b{ControllerConfig{}};
  const ControllerCommand ca = a.step(100.0, 30.0);
  const ControllerCommand cb = b.step(100.0, 90.0);
  CHECK(ca.cmd_pan == cb.cmd_pan);
  CHECK(ca.cmd_tilt < 0.0);
  CHECK(cb.cmd_tilt > 0.0);
}

TEST_CASE("pan-tilt conversion") {
  CHECK(to_ptu_units(100.0, 1.0, 0.02572, 1.0) == 1944);
  CHECK(to_ptu_units(-100.0, 1.0, 0.02572, 1.0) == -1945);
  CHECK(to_ptu_units(0.0, 1.0, 0.02572, 1.0) == 0);
  CHECK_THROWS_AS(to_ptu_units(1.0, 0.0, 0.02572, 1.0), Error);
}

TEST_CASE("pan-tilt ranges follow the optics") {
  PanTiltModel m;
  const PanTiltRanges r = compute_ranges(m);
  CHECK(r.fov_deg == doctest::Approx(112.9).epsilon(1e-3));
  CHECK(r.pan_limit == static_cast<int>(std::floor(r.fov_deg / 0.02572)) / 2);
  CHECK(pixels_per_degree(m) == doctest::Approx(128.0 / r.fov_deg));

  PanTiltModel coarse = m;
  coarse.degrees_per_pos *= 2.0;
  CHECK(std::abs(compute_ranges(coarse).pan_limit - r.pan_limit / 2) <= 1);

  PanTiltModel pinhole = m;
  pinhole.sensor_width_mm = 0.0;
  CHECK(compute_ranges(pinhole).fov_deg == 0.0);
  CHECK(compute_ranges(pinhole).pan_limit == 0);
  CHECK_THROWS_AS(pixels_per_degree(pinhole), Error);

  PanTiltModel capped = m;
  capped.physical_limit = 100;
  CHECK(compute_ranges(capped).tilt_limit == 100);
}

TEST_CASE("fixational walk: scale zero stays put, otherwise bounded steps within limits") {
  std::mt19937_64 rng(5);
  const PanTiltRanges lim{0.0, 10, 10};
  for (const GazeCommand& g : fixational_walk({3, -2}, 20, 0, lim, rng)) {
    CHECK(g.pan == 3);
    CHECK(g.tilt == -2);
  }
  GazeCommand prev{9, 9};
  for (const GazeCommand& g : fixational_walk(prev, 500, 4, lim, rng)) {
    CHECK(std::abs(g.pan - prev.pan) <= 4);
    CHECK(std::abs(g.tilt - prev.tilt) <= 4);
    CHECK(std::abs(g.pan) <= 10);
    CHECK(std::abs(g.tilt) <= 10);
    prev = g;
  }
  CHECK_THROWS_AS(fixational_walk({0, 0}, 0, 1, lim, rng), Error);
}

TEST_CASE("fixational walk steps are zero-mean and uniform") {
  std::mt19937_64 rng(17);
  const PanTiltRanges wide{0.0, 1 << 30, 1 << 30};
  const int n = 20000;
  const auto walk = fixational_walk({0, 0}, n, 3, wide, rng);
  double sum = 0.0;
  double sq = 0.0;
  GazeCommand prev{0, 0};
  for (const GazeCommand& g : walk) {
    const double d = g.pan - prev.pan;
    sum += d;
    sq += d * d;
    prev = g;
  }
  // Uniform on {-3..3}: mean 0, variance 4.
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(sq / n == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("plant: saccades block and clip, fixational commands advance one at a time") {
  PanTiltModel m;
  m.physical_limit = 50;
  m.settle_steps = 3;
  PanTiltPlant plant(m);
  CHECK_FALSE(plant.saccade(20, -10, 100));
  CHECK(plant.position().pan == 20);
  CHECK(plant.position().tilt == -10);
  CHECK(plant.saccade(100, 0, 200));
  CHECK(plant.position().pan == 50);
  CHECK(plant.saturations() == 1);

  plant.enqueue({{40, 0}, {41, 0}});
  CHECK(plant.pending() == 2);
  plant.advance(300);
  CHECK(plant.pending() == 1);
  const GazeCommand after = plant.advance(400);
  CHECK(after.pan < 50);
  CHECK(after.pan >= 41);
  const auto hist = plant.history();
  CHECK(hist.front().t_us == 0);
  CHECK(hist[1].saccade);
}
