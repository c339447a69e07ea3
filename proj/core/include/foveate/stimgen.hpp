#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "foveate/config.hpp"
#include "foveate/events.hpp"

namespace foveate {

enum class GratingMode { EyeOnly, ObjectOnly, EyeAndObject };

std::string to_string(GratingMode m);
GratingMode parse_grating_mode(const std::string& s);

/// Vertical sinusoidal gratings: a full-field background and a centred disk.
/// Spatial frequencies are cycles per image width, speeds cycles per frame,
/// for both layers.
struct GratingScenario {
  Geometry geometry{128, 128};
  double background_sf = 0.3;
  double background_speed = 0.01;
  double foreground_sf = 3.0;
  double foreground_speed = 0.09;
  double foreground_radius = 0.0;  // pixels; <= 0 selects width / 4
  GratingMode mode = GratingMode::EyeAndObject;
  double frame_rate = 60.0;
  double duration = 4.0;  // seconds

  [[nodiscard]] double effective_background_speed() const;
  [[nodiscard]] double effective_foreground_speed() const;
  [[nodiscard]] double disk_radius() const;
  [[nodiscard]] bool in_disk(int x, int y) const;
  [[nodiscard]] int frame_count() const;

  /// Throws Error on an invalid parameterisation.
  void validate() const;

  static GratingScenario from_config(const KeyValueConfig& cfg);
  void to_config(KeyValueConfig& cfg) const;
};

/// Intensity in [0, 1]; deterministic in (scenario, frame_index).
GridD render_frame(const GratingScenario& scenario, int frame_index);

/// Threshold-crossing event sensor with a refractory period and Poisson noise.
struct SensorModel {
  double threshold = 0.1;        // log-intensity step
  double refractory_us = 100.0;  // microseconds
  double noise_rate = 0.01;      // spurious events per pixel per second
  double intensity_floor = 1e-6; // intensities are clamped to this before the logarithm
  std::uint64_t seed = 1;

  void validate() const;
  /// Reads keys `sensor.*`; absent keys keep the values of `defaults`.
  static SensorModel from_config(const KeyValueConfig& cfg, SensorModel defaults);
  static SensorModel from_config(const KeyValueConfig& cfg) { return from_config(cfg, SensorModel{}); }
  void to_config(KeyValueConfig& cfg) const;
};

/// Streaming sensor: feed frames in time order, collect the events of each interval.
///
/// Each pixel keeps a reference log-intensity. Between two frames the log
/// intensity is interpolated linearly; every whole threshold step crossed
/// relative to the reference emits one event and moves the reference by one
/// step. Crossings inside the refractory window are dropped but still move the
/// reference.
class EventSensor {
 public:
  EventSensor(Geometry g, SensorModel model);

  void reset(const GridD& first_frame, std::uint64_t t_us);
  /// Events in (previous frame time, t_us], sorted by (t, y, x).
  void step(const GridD& frame, std::uint64_t t_us, std::vector<Event>& out);

  [[nodiscard]] bool initialized() const { return initialized_; }
  [[nodiscard]] Geometry geometry() const { return geom_; }
  [[nodiscard]] std::uint64_t time() const { return t_; }

 private:
  Geometry geom_;
  SensorModel model_;
  std::mt19937_64 rng_;
  std::vector<double> log_prev_;
  std::vector<double> reference_;
  std::vector<std::int64_t> last_event_;
  std::uint64_t t_ = 0;
  bool initialized_ = false;
};

/// Timestamp of frame `index` at `frame_rate`, in microseconds.
std::uint64_t frame_time_us(int index, double frame_rate);

std::vector<Event> simulate_events(std::span<const GridD> frames, const SensorModel& model,
                                   double frame_rate);

/// Renders every frame of the scenario and runs it through the sensor.
EventStream simulate_scenario(const GratingScenario& scenario, const SensorModel& model);

struct NamedScenario {
  int id = 0;
  std::string name;
  GratingScenario scenario;
};

struct Disk {
  double cx = 0.0;  // pixels, continuous coordinates (pixel centres at i + 0.5)
  double cy = 0.0;
  double radius = 0.0;
};

/// Dark disks on a light background, seen through a circular fixational jitter
/// of the whole image so that every disk edge produces events.
struct CirclePattern {
  Geometry geometry{240, 160};
  std::vector<Disk> disks;
  double background = 0.8;
  double foreground = 0.2;
  double jitter_radius = 1.5;   // pixels
  double jitter_period = 0.05;  // seconds per revolution
  double frame_rate = 1000.0;
  double duration = 0.05;       // seconds

  void validate() const;
  [[nodiscard]] int frame_count() const;
};

/// Six disks with diameters 25 to 50 pixels on a 3 x 2 grid of 80-pixel cells.
CirclePattern make_calibration_circles();

/// Area coverage sampled 4 x 4 per pixel, with the pattern shifted by (dx, dy).
GridD render_circles(const CirclePattern& pattern, double dx, double dy);

EventStream simulate_circles(const CirclePattern& pattern, const SensorModel& model);

/// The sixteen grating experiments: mode comparison (1-3), spatial-frequency
/// sweep (4-9) and background-faster-than-object speeds (10-16).
std::vector<NamedScenario> make_characterization_suite();

}  // namespace foveate
