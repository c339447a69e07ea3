#include "foveate/control.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "foveate/grid.hpp"

namespace foveate {

namespace {

std::string to_string(NeuronModel m) { return m == NeuronModel::Lif ? "lif" : "linear"; }

NeuronModel parse_model(const std::string& s) {
  if (s == "lif") return NeuronModel::Lif;
  if (s == "linear") return NeuronModel::Linear;
  throw Error("unknown neuron model '" + s + "'");
}

double unit_activity(const ControllerConfig& c, double j) {
  return c.model == NeuronModel::Lif ? lif_rate(j, c.tau_rc, c.tau_ref) : j;
}

// Tuning curve (gain, bias) reaching `max_rate` at x = encoder and zero activity at the intercept.
std::pair<double, double> tuning(const ControllerConfig& c, double max_rate, double intercept) {
  double j_max = max_rate;
  if (c.model == NeuronModel::Lif) {
    // Inverse of lif_rate at max_rate.
    j_max = 1.0 / (1.0 - std::exp((c.tau_ref - 1.0 / max_rate) / c.tau_rc));
    const double gain = (j_max - 1.0) / (1.0 - intercept);
    return {gain, 1.0 - gain * intercept};
  }
  const double gain = j_max / (1.0 - intercept);
  return {gain, -gain * intercept};
}

Population make_population(const ControllerConfig& c, double target_gain, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> rate(c.max_rate_low, c.max_rate_high);
  std::uniform_real_distribution<double> icpt(c.intercept_low, c.intercept_high);
  std::bernoulli_distribution sign(0.5);
  Population p;
  p.target_gain = target_gain;
  for (int i = 0; i < c.neurons; ++i) {
    const double e = sign(rng) ? 1.0 : -1.0;
    const double r = rate(rng);
    const double x0 = icpt(rng);
    const auto [g, b] = tuning(c, r, x0);
    p.encoders.push_back(e);
    p.gains.push_back(g);
    p.biases.push_back(b);
  }
  return p;
}

void fit(Population& p, const ControllerConfig& c) {
  const int n = c.sample_points;
  const auto d = static_cast<Eigen::Index>(p.size());
  Eigen::MatrixXd a(n, d);
  Eigen::VectorXd y(n);
  for (int s = 0; s < n; ++s) {
    const double x = -1.0 + 2.0 * s / (n - 1);
    const auto rates = population_rates(p, c, x);
    for (Eigen::Index i = 0; i < d; ++i) a(s, i) = rates[static_cast<std::size_t>(i)];
    y(s) = p.target_gain * x * c.error_range;
  }
  const double mean_sq = a.squaredNorm() / static_cast<double>(a.size());
  if (!(mean_sq > 0.0)) throw Error("solve_decoders: population is silent over the error range");
  Eigen::MatrixXd gram = a.transpose() * a;
  gram.diagonal().array() += n * c.regularization * mean_sq;
  const Eigen::VectorXd rhs = a.transpose() * y;
  const Eigen::VectorXd w = gram.ldlt().solve(rhs);
  if (!w.allFinite()) throw Error("solve_decoders: singular activity matrix");
  p.decoders.assign(w.data(), w.data() + w.size());
  p.rmse = std::sqrt((a * w - y).squaredNorm() / n);
}

}  // namespace

void ControllerConfig::validate() const {
  if (neurons < 1) throw Error("control: neurons must be >= 1");
  if (!std::isfinite(gain_pan) || !std::isfinite(gain_tilt)) throw Error("control: gains must be finite");
  if (!(error_range > 0.0)) throw Error("control: error_range must be > 0");
  if (!(tau_rc > 0.0) || tau_ref < 0.0) throw Error("control: invalid LIF time constants");
  if (!(max_rate_low > 0.0) || max_rate_high < max_rate_low) throw Error("control: invalid max rates");
  if (model == NeuronModel::Lif && max_rate_high * tau_ref >= 1.0) {
    throw Error("control: max rate exceeds 1 / tau_ref");
  }
  if (!(intercept_low <= intercept_high) || intercept_low < -1.0 || intercept_high > 1.0) {
    throw Error("control: intercepts must lie in [-1, 1]");
  }
  if (regularization < 0.0) throw Error("control: regularization must be >= 0");
  if (sample_points < 2) throw Error("control: need at least 2 sample points");
  if (!(synapse_tau > 0.0) || !(sim_dt > 0.0)) throw Error("control: time constants must be > 0");
  if (settle_time < 0.0 || !(measure_time > 0.0)) throw Error("control: invalid simulation window");
}

ControllerConfig ControllerConfig::from_config(const KeyValueConfig& cfg) {
  ControllerConfig c;
  c.neurons = static_cast<int>(cfg.get_int("control.neurons", c.neurons));
  c.gain_pan = cfg.get_double("control.gain_pan", c.gain_pan);
  c.gain_tilt = cfg.get_double("control.gain_tilt", c.gain_tilt);
  c.center_x = cfg.get_double("control.center_x", c.center_x);
  c.center_y = cfg.get_double("control.center_y", c.center_y);
  c.error_range = cfg.get_double("control.error_range", c.error_range);
  c.model = parse_model(cfg.get_string("control.model", to_string(c.model)));
  c.tau_rc = cfg.get_double("control.tau_rc", c.tau_rc);
  c.tau_ref = cfg.get_double("control.tau_ref", c.tau_ref);
  c.max_rate_low = cfg.get_double("control.max_rate_low", c.max_rate_low);
  c.max_rate_high = cfg.get_double("control.max_rate_high", c.max_rate_high);
  c.intercept_low = cfg.get_double("control.intercept_low", c.intercept_low);
  c.intercept_high = cfg.get_double("control.intercept_high", c.intercept_high);
  c.regularization = cfg.get_double("control.regularization", c.regularization);
  c.sample_points = static_cast<int>(cfg.get_int("control.sample_points", c.sample_points));
  c.synapse_tau = cfg.get_double("control.synapse_tau", c.synapse_tau);
  c.sim_dt = cfg.get_double("control.sim_dt", c.sim_dt);
  c.settle_time = cfg.get_double("control.settle_time", c.settle_time);
  c.measure_time = cfg.get_double("control.measure_time", c.measure_time);
  c.seed = static_cast<std::uint64_t>(cfg.get_int("control.seed", static_cast<long long>(c.seed)));
  c.validate();
  return c;
}

void ControllerConfig::to_config(KeyValueConfig& cfg) const {
  cfg.set("control.neurons", std::to_string(neurons));
  cfg.set("control.gain_pan", format_number(gain_pan));
  cfg.set("control.gain_tilt", format_number(gain_tilt));
  cfg.set("control.center_x", format_number(center_x));
  cfg.set("control.center_y", format_number(center_y));
  cfg.set("control.error_range", format_number(error_range));
  cfg.set("control.model", to_string(model));
  cfg.set("control.tau_rc", format_number(tau_rc));
  cfg.set("control.tau_ref", format_number(tau_ref));
  cfg.set("control.max_rate_low", format_number(max_rate_low));
  cfg.set("control.max_rate_high", format_number(max_rate_high));
  cfg.set("control.intercept_low", format_number(intercept_low));
  cfg.set("control.intercept_high", format_number(intercept_high));
  cfg.set("control.regularization", format_number(regularization));
  cfg.set("control.sample_points", std::to_string(sample_points));
  cfg.set("control.synapse_tau", format_number(synapse_tau));
  cfg.set("control.sim_dt", format_number(sim_dt));
  cfg.set("control.settle_time", format_number(settle_time));
  cfg.set("control.measure_time", format_number(measure_time));
  cfg.set("control.seed", std::to_string(seed));
}

double lif_rate(double j, double tau_rc, double tau_ref) {
  if (!(j > 1.0)) return 0.0;
  return 1.0 / (tau_ref + tau_rc * std::log1p(1.0 / (j - 1.0)));
}

std::vector<double> population_rates(const Population& pop, const ControllerConfig& config,
                                     double x) {
  std::vector<double> out(pop.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = unit_activity(config, pop.current(i, x));
  return out;
}

DecodedController solve_decoders(const ControllerConfig& config) {
  config.validate();
  DecodedController dc;
  dc.config = config;
  std::mt19937_64 rng(config.seed);
  dc.pan = make_population(config, config.gain_pan, rng);
  dc.tilt = make_population(config, config.gain_tilt, rng);
  fit(dc.pan, config);
  fit(dc.tilt, config);
  return dc;
}

double decode_rate(const Population& pop, const ControllerConfig& config, double error_px) {
  const auto rates = population_rates(pop, config, error_px / config.error_range);
  double out = 0.0;
  for (std::size_t i = 0; i < rates.size(); ++i) out += pop.decoders[i] * rates[i];
  return out;
}

SpikingController::SpikingController(const ControllerConfig& config)
    : SpikingController(solve_decoders(config)) {}

SpikingController::SpikingController(DecodedController decoded)
    : decoded_(std::move(decoded)), rng_(decoded_.config.seed ^ 0x9e3779b97f4a7c15ULL) {}

double SpikingController::run_axis(const Population& pop, double error_px) {
  const ControllerConfig& c = decoded_.config;
  const double x = std::clamp(error_px / c.error_range, -1.0, 1.0);
  if (c.model == NeuronModel::Linear) return decode_rate(pop, c, error_px);

  const std::size_t n = pop.size();
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> v(n);
  std::vector<double> refractory(n, 0.0);
  std::vector<double> j(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = u01(rng_);
    j[i] = pop.current(i, x);
  }
  const double dt = c.sim_dt;
  const double filter_keep = std::exp(-dt / c.synapse_tau);
  const auto settle = static_cast<long>(std::llround(c.settle_time / dt));
  const auto measure = std::max<long>(1, std::llround(c.measure_time / dt));
  double filtered = 0.0;
  double acc = 0.0;
  for (long step = 0; step < settle + measure; ++step) {
    double drive = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      refractory[i] -= dt;
      const double active = std::clamp(dt - refractory[i], 0.0, dt);
      v[i] -= (j[i] - v[i]) * std::expm1(-active / c.tau_rc);
      if (v[i] > 1.0) {
        // Spike time within the step from the exact membrane trajectory.
        const double t_spike = dt + c.tau_rc * std::log1p(-(v[i] - 1.0) / (j[i] - 1.0));
        v[i] = 0.0;
        refractory[i] = c.tau_ref + t_spike;
        drive += pop.decoders[i] / dt;
      } else if (v[i] < 0.0) {
        v[i] = 0.0;
      }
    }
    filtered = filtered * filter_keep + (1.0 - filter_keep) * drive;
    if (step >= settle) acc += filtered;
  }
  return acc / static_cast<double>(measure);
}

ControllerCommand SpikingController::step(double x_obj, double y_obj) {
  const ControllerConfig& c = decoded_.config;
  return {run_axis(decoded_.pan, x_obj - c.center_x), run_axis(decoded_.tilt, y_obj - c.center_y)};
}

ControllerCommand controller_step(SpikingController& controller, double x_obj, double y_obj) {
  return controller.step(x_obj, y_obj);
}

void PanTiltModel::validate() const {
  if (!(degrees_per_pos > 0.0)) throw Error("ptu: degrees_per_pos must be > 0");
  if (!(focal_length_mm > 0.0) || sensor_width_mm < 0.0) throw Error("ptu: invalid optics");
  if (resolution < 1) throw Error("ptu: resolution must be >= 1");
  if (!(alpha_cmd > 0.0)) throw Error("ptu: alpha_cmd must be > 0");
  if (physical_limit < 0 || settle_steps < 0) throw Error("ptu: limits and settle steps must be >= 0");
  if (tilt_backlash_sigma < 0.0) throw Error("ptu: backlash sigma must be >= 0");
}

PanTiltModel PanTiltModel::from_config(const KeyValueConfig& cfg) {
  PanTiltModel m;
  m.degrees_per_pos = cfg.get_double("ptu.degrees_per_pos", m.degrees_per_pos);
  m.focal_length_mm = cfg.get_double("ptu.focal_length_mm", m.focal_length_mm);
  m.sensor_width_mm = cfg.get_double("ptu.sensor_width_mm", m.sensor_width_mm);
  m.resolution = static_cast<int>(cfg.get_int("ptu.resolution", m.resolution));
  m.alpha_cmd = cfg.get_double("ptu.alpha_cmd", m.alpha_cmd);
  m.physical_limit = static_cast<int>(cfg.get_int("ptu.physical_limit", m.physical_limit));
  m.settle_steps = static_cast<int>(cfg.get_int("ptu.settle_steps", m.settle_steps));
  m.tilt_backlash_sigma = cfg.get_double("ptu.tilt_backlash_sigma", m.tilt_backlash_sigma);
  m.validate();
  return m;
}

void PanTiltModel::to_config(KeyValueConfig& cfg) const {
  cfg.set("ptu.degrees_per_pos", format_number(degrees_per_pos));
  cfg.set("ptu.focal_length_mm", format_number(focal_length_mm));
  cfg.set("ptu.sensor_width_mm", format_number(sensor_width_mm));
  cfg.set("ptu.resolution", std::to_string(resolution));
  cfg.set("ptu.alpha_cmd", format_number(alpha_cmd));
  cfg.set("ptu.physical_limit", std::to_string(physical_limit));
  cfg.set("ptu.settle_steps", std::to_string(settle_steps));
  cfg.set("ptu.tilt_backlash_sigma", format_number(tilt_backlash_sigma));
}

PanTiltRanges compute_ranges(const PanTiltModel& model) {
  model.validate();
  PanTiltRanges r;
  r.fov_deg = 2.0 * std::atan(model.sensor_width_mm / (2.0 * model.focal_length_mm)) * 180.0 /
              std::numbers::pi;
  const auto steps = static_cast<long long>(std::floor(r.fov_deg / model.degrees_per_pos));
  int limit = static_cast<int>(steps / 2);
  if (model.physical_limit > 0) limit = std::min(limit, model.physical_limit);
  r.pan_limit = limit;
  r.tilt_limit = limit;
  return r;
}

double pixels_per_degree(const PanTiltModel& model) {
  const double fov = compute_ranges(model).fov_deg;
  if (!(fov > 0.0)) throw Error("ptu: zero field of view");
  return model.resolution / fov;
}

std::int64_t to_ptu_units(double cmd_px, double alpha_cmd, double degrees_per_pos,
                          double pixels_per_degree) {
  if (!(degrees_per_pos > 0.0) || !(alpha_cmd > 0.0) || !(pixels_per_degree > 0.0)) {
    throw Error("to_ptu_units: gains must be > 0");
  }
  const double degrees = cmd_px / pixels_per_degree;
  return static_cast<std::int64_t>(std::floor(degrees / (2.0 * alpha_cmd * degrees_per_pos)));
}

std::vector<GazeCommand> fixational_walk(GazeCommand start, int steps, int step_scale,
                                         const PanTiltRanges& limits, std::mt19937_64& rng) {
  if (steps < 1) throw Error("fixational_walk: steps must be >= 1");
  if (step_scale < 0) throw Error("fixational_walk: step_scale must be >= 0");
  std::uniform_int_distribution<int> r(-step_scale, step_scale);
  std::vector<GazeCommand> out;
  out.reserve(static_cast<std::size_t>(steps));
  GazeCommand g = start;
  for (int i = 0; i < steps; ++i) {
    g.pan = std::clamp(g.pan + r(rng), -limits.pan_limit, limits.pan_limit);
    g.tilt = std::clamp(g.tilt + r(rng), -limits.tilt_limit, limits.tilt_limit);
    out.push_back(g);
  }
  return out;
}

PanTiltPlant::PanTiltPlant(const PanTiltModel& model, std::uint64_t seed)
    : model_(model), ranges_(compute_ranges(model)), rng_(seed) {
  history_.push_back({0, 0, 0, false});
}

GazeCommand PanTiltPlant::clip(std::int64_t pan, std::int64_t tilt, bool& saturated) const {
  const auto cp = std::clamp<std::int64_t>(pan, -ranges_.pan_limit, ranges_.pan_limit);
  const auto ct = std::clamp<std::int64_t>(tilt, -ranges_.tilt_limit, ranges_.tilt_limit);
  saturated = cp != pan || ct != tilt;
  return {static_cast<int>(cp), static_cast<int>(ct)};
}

void PanTiltPlant::lag_step() {
  if (model_.settle_steps == 0) {
    pos_ = target_;
    return;
  }
  // Cover 1/settle_steps of the remaining distance, at least one position.
  auto approach = [this](int from, int to) {
    const int gap = to - from;
    if (gap == 0) return to;
    int step = gap / model_.settle_steps;
    if (step == 0) step = gap > 0 ? 1 : -1;
    return from + step;
  };
  pos_.pan = approach(pos_.pan, target_.pan);
  pos_.tilt = approach(pos_.tilt, target_.tilt);
}

bool PanTiltPlant::saccade(std::int64_t du_pan, std::int64_t du_tilt, std::uint64_t t_us) {
  std::lock_guard lock(mu_);
  std::int64_t tilt = static_cast<std::int64_t>(target_.tilt) + du_tilt;
  if (model_.tilt_backlash_sigma > 0.0 && du_tilt != 0) {
    std::normal_distribution<double> noise(0.0, model_.tilt_backlash_sigma);
    tilt += std::llround(noise(rng_));
  }
  bool saturated = false;
  target_ = clip(static_cast<std::int64_t>(target_.pan) + du_pan, tilt, saturated);
  if (saturated) ++saturations_;
  queue_.clear();
  // Blocking: the unit reaches the target before returning.
  while (pos_.pan != target_.pan || pos_.tilt != target_.tilt) lag_step();
  history_.push_back({t_us, pos_.pan, pos_.tilt, true});
  return saturated;
}

void PanTiltPlant::enqueue(const std::vector<GazeCommand>& commands) {
  std::lock_guard lock(mu_);
  for (const auto& c : commands) queue_.push_back(c);
}

GazeCommand PanTiltPlant::advance(std::uint64_t t_us) {
  std::lock_guard lock(mu_);
  if (!queue_.empty()) {
    bool saturated = false;
    target_ = clip(queue_.front().pan, queue_.front().tilt, saturated);
    if (saturated) ++saturations_;
    queue_.pop_front();
  }
  const GazeCommand before = pos_;
  lag_step();
  if (pos_.pan != before.pan || pos_.tilt != before.tilt) {
    history_.push_back({t_us, pos_.pan, pos_.tilt, false});
  }
  return pos_;
}

void PanTiltPlant::clear_queue() {
  std::lock_guard lock(mu_);
  queue_.clear();
}

GazeCommand PanTiltPlant::position() const {
  std::lock_guard lock(mu_);
  return pos_;
}

std::size_t PanTiltPlant::pending() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

std::vector<GazeRecord> PanTiltPlant::history() const {
  std::lock_guard lock(mu_);
  return history_;
}

std::uint64_t PanTiltPlant::saturations() const {
  std::lock_guard lock(mu_);
  return saturations_;
}

}  // namespace foveate
