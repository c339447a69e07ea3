#pragma once

#include <cstdint>
#include <mutex>
#include <random>
#include <deque>
#include <vector>

#include "foveate/config.hpp"

namespace foveate {

enum class NeuronModel { Lif, Linear };

/// Proportional gaze controller realised by two independent neuron populations.
///
/// Each population represents its axis error normalised by `error_range`
/// (x = error / error_range in [-1, 1]); decoders map population activity
/// straight to gain * error in pixels.
struct ControllerConfig {
  int neurons = 50;             // per axis
  double gain_pan = 1.0;
  double gain_tilt = 1.0;
  double center_x = 64.0;       // pixels
  double center_y = 64.0;
  double error_range = 64.0;    // pixels represented at |x| = 1
  NeuronModel model = NeuronModel::Lif;
  double tau_rc = 0.02;         // seconds
  double tau_ref = 0.002;       // seconds
  double max_rate_low = 100.0;  // Hz
  double max_rate_high = 200.0;
  double intercept_low = -1.0;
  double intercept_high = 1.0;
  double regularization = 0.1;  // ridge strength relative to mean squared activity
  int sample_points = 257;      // training grid over [-error_range, error_range]
  double synapse_tau = 0.005;   // seconds, low-pass readout filter
  double sim_dt = 1e-4;         // seconds
  double settle_time = 0.1;     // seconds discarded before averaging
  double measure_time = 0.2;    // seconds averaged
  std::uint64_t seed = 7;

  void validate() const;
  /// Reads keys `control.*`.
  static ControllerConfig from_config(const KeyValueConfig& cfg);
  void to_config(KeyValueConfig& cfg) const;
};

/// Steady-state firing rate of a normalised LIF unit (threshold 1) for input current j.
double lif_rate(double j, double tau_rc, double tau_ref);

struct Population {
  std::vector<double> encoders;  // +1 or -1
  std::vector<double> gains;
  std::vector<double> biases;
  std::vector<double> decoders;
  double rmse = 0.0;          // pixels, over the training grid
  double target_gain = 1.0;   // decoded output approximates target_gain * error

  [[nodiscard]] std::size_t size() const { return encoders.size(); }
  [[nodiscard]] double current(std::size_t i, double x) const {
    return gains[i] * encoders[i] * x + biases[i];
  }
};

struct DecodedController {
  ControllerConfig config;
  Population pan;
  Population tilt;
};

/// Activity of every unit at normalised input x.
std::vector<double> population_rates(const Population& pop, const ControllerConfig& config,
                                     double x);

/// Draws tuning curves and solves the ridge least-squares decoders for both axes.
/// Throws if a population is silent over the whole training grid.
DecodedController solve_decoders(const ControllerConfig& config);

/// Rate-model output for an axis error in pixels: decoders . a(error / error_range).
double decode_rate(const Population& pop, const ControllerConfig& config, double error_px);

struct ControllerCommand {
  double cmd_pan = 0.0;   // pixels
  double cmd_tilt = 0.0;  // pixels
};

/// Spiking readout of a DecodedController. Membranes start at seeded random
/// potentials each step so consecutive commands are independent.
class SpikingController {
 public:
  explicit SpikingController(const ControllerConfig& config);
  explicit SpikingController(DecodedController decoded);

  /// Injects the errors of target (x, y) and returns the filtered, time-averaged decode.
  ControllerCommand step(double x_obj, double y_obj);

  [[nodiscard]] const DecodedController& decoded() const { return decoded_; }
  [[nodiscard]] const ControllerConfig& config() const { return decoded_.config; }

 private:
  double run_axis(const Population& pop, double error_px);

  DecodedController decoded_;
  std::mt19937_64 rng_;
};

ControllerCommand controller_step(SpikingController& controller, double x_obj, double y_obj);

/// Pan/tilt geometry and plant options.
struct PanTiltModel {
  double degrees_per_pos = 0.02572;
  double focal_length_mm = 1.7;
  double sensor_width_mm = 5.12;
  int resolution = 128;        // pixels across the horizontal field of view
  double alpha_cmd = 1.0;      // command gain in the quantisation step
  int physical_limit = 0;      // PTU positions; 0 = no extra clipping
  int settle_steps = 0;        // 0 = ideal; otherwise advances needed to settle
  double tilt_backlash_sigma = 0.0;  // PTU positions added to each tilt saccade

  void validate() const;
  static PanTiltModel from_config(const KeyValueConfig& cfg);
  void to_config(KeyValueConfig& cfg) const;
};

struct PanTiltRanges {
  double fov_deg = 0.0;
  int pan_limit = 0;
  int tilt_limit = 0;
};

/// FOV = 2 atan(width / 2f); limit = floor(FOV / degrees_per_pos) / 2 (integer division).
PanTiltRanges compute_ranges(const PanTiltModel& model);

/// resolution / FOV.
double pixels_per_degree(const PanTiltModel& model);

/// floor((cmd / pixels_per_degree) / (2 alpha_cmd degrees_per_pos)), rounding toward -infinity.
std::int64_t to_ptu_units(double cmd_px, double alpha_cmd, double degrees_per_pos,
                          double pixels_per_degree);

struct GazeCommand {
  int pan = 0;
  int tilt = 0;
};

/// N absolute positions of a random walk from `start`; each axis moves by an
/// independent integer drawn uniformly from [-step_scale, step_scale], and the
/// walk is clipped to the limits.
std::vector<GazeCommand> fixational_walk(GazeCommand start, int steps, int step_scale,
                                         const PanTiltRanges& limits, std::mt19937_64& rng);

struct GazeRecord {
  std::uint64_t t_us = 0;
  int pan = 0;
  int tilt = 0;
  bool saccade = false;
};

/// Simulated pan-tilt unit. Saccades block until settled; fixational commands
/// are queued and executed one per `advance()`. Thread-safe.
class PanTiltPlant {
 public:
  explicit PanTiltPlant(const PanTiltModel& model, std::uint64_t seed = 1);

  /// Blocking relative move. Returns true if either axis hit its limit.
  bool saccade(std::int64_t du_pan, std::int64_t du_tilt, std::uint64_t t_us);
  /// Non-blocking: queue absolute positions.
  void enqueue(const std::vector<GazeCommand>& commands);
  /// Executes one queued command and one lag step; returns the resulting position.
  GazeCommand advance(std::uint64_t t_us);
  void clear_queue();

  [[nodiscard]] GazeCommand position() const;
  [[nodiscard]] std::size_t pending() const;
  [[nodiscard]] const PanTiltRanges& ranges() const { return ranges_; }
  [[nodiscard]] const PanTiltModel& model() const { return model_; }
  [[nodiscard]] std::vector<GazeRecord> history() const;
  [[nodiscard]] std::uint64_t saturations() const;

 private:
  GazeCommand clip(std::int64_t pan, std::int64_t tilt, bool& saturated) const;
  void lag_step();

  PanTiltModel model_;
  PanTiltRanges ranges_;
  mutable std::mutex mu_;
  std::mt19937_64 rng_;
  GazeCommand pos_;
  GazeCommand target_;
  std::deque<GazeCommand> queue_;
  std::vector<GazeRecord> history_;
  std::uint64_t saturations_ = 0;
};

}  // namespace foveate
