#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "foveate/control.hpp"
#include "foveate/oms.hpp"
#include "foveate/proto.hpp"
#include "foveate/stimgen.hpp"

namespace foveate {

/// Axis-aligned square whose intensity alternates between two levels.
struct BlinkingSquare {
  double cx = 0.0;  // world pixels
  double cy = 0.0;
  double side = 16.0;
  double low = 0.2;
  double high = 0.8;
  double half_period_ms = 0.0;  // 0 = static at `high`
};

/// Static or blinking world larger than the field of view, viewed through a
/// movable window. Pan/tilt position (0, 0) centres the window on the world.
struct WorldScene {
  int width = 512;
  int height = 512;
  double background = 0.5;
  std::vector<BlinkingSquare> squares;

  void validate() const;
  /// Keys: scene.width, scene.height, scene.background and
  /// scene.square.N = cx, cy, side, low, high, half_period_ms for N = 0, 1, ...
  static WorldScene from_config(const KeyValueConfig& cfg);
  void to_config(KeyValueConfig& cfg) const;

  /// Intensity of the world pixel (x, y) at time t.
  [[nodiscard]] double at(int x, int y, std::uint64_t t_us) const;
};

/// Top-left world coordinate of the view window for a gaze position.
struct ViewOrigin {
  double x = 0.0;
  double y = 0.0;
};

ViewOrigin view_origin(const WorldScene& scene, const PanTiltModel& model, Geometry view,
                       GazeCommand gaze);

/// Samples the view window with bilinear interpolation of world pixels.
GridD render_view(const WorldScene& scene, ViewOrigin origin, Geometry view, std::uint64_t t_us);

struct ClosedLoopConfig {
  Geometry view{128, 128};
  int iterations = 6;
  std::uint64_t slice_us = 20000;  // events per OMS step
  std::uint64_t frame_us = 1000;   // render interval; one queued fixational step per frame
  int walk_steps = 20;             // fixational commands queued after each saccade
  int walk_step_scale = 5;         // PTU positions
  std::size_t queue_capacity = 2;
  std::uint64_t seed = 1;
  OmsConfig oms;
  ProtoConfig proto;
  ControllerConfig controller;
  PanTiltModel ptu;
  SensorModel sensor;

  ClosedLoopConfig();
  void validate() const;
  /// Reads `loop.*` plus the oms/proto/control/ptu/sensor groups.
  static ClosedLoopConfig from_config(const KeyValueConfig& cfg);
  void to_config(KeyValueConfig& cfg) const;
};

struct StageLatency {
  double events_us = 0.0;  // rendering and event generation
  double oms_us = 0.0;
  double proto_us = 0.0;   // saliency including argmax
  double control_us = 0.0;
  double plant_us = 0.0;
};

struct TrajectoryRow {
  int iteration = 0;
  std::uint64_t t_us = 0;
  int p_x = 0;
  int p_y = 0;
  double saliency_max = 0.0;
  bool saccade = false;
  double cmd_pan = 0.0;
  double cmd_tilt = 0.0;
  std::int64_t u_pan = 0;
  std::int64_t u_tilt = 0;
  int pan_pos = 0;
  int tilt_pos = 0;
  bool saturated = false;
  std::uint64_t events = 0;
  std::uint64_t oms_events = 0;
  double target_x = 0.0;  // image position of the first square after this iteration
  double target_y = 0.0;
  StageLatency latency;
};

struct ClosedLoopResult {
  std::vector<TrajectoryRow> rows;
  std::vector<GazeRecord> gaze;
  std::uint64_t saturations = 0;
};

/// Algorithm-style loop: a producer thread renders the view, generates events and
/// runs the OMS stage per slice; a consumer thread computes saliency, runs the
/// controller, issues a blocking saccade and queues a non-blocking fixational walk.
/// The threads share a bounded queue and step in lockstep, so runs are deterministic.
ClosedLoopResult run_closed_loop(const WorldScene& scene, const ClosedLoopConfig& config);

void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryRow>& rows);

struct LatencyStats {
  double mean_us = 0.0;
  double std_us = 0.0;  // population
  double max_us = 0.0;
};

struct LatencySummary {
  std::size_t samples = 0;
  LatencyStats events;
  LatencyStats oms;
  LatencyStats proto;
  LatencyStats control;  // saccade iterations only
  LatencyStats plant;    // saccade iterations only
  LatencyStats perception;  // OMS + saliency + argmax of one slice
};

LatencySummary summarize_latency(std::span<const TrajectoryRow> rows);
void write_latency_summary(std::ostream& os, const LatencySummary& summary);

/// Fixed-capacity blocking queue; close() wakes all waiters.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  bool push(T item) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(item));
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

 private:
  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
  std::deque<T> items_;
  bool closed_ = false;
};

}  // namespace foveate
