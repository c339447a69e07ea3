#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "foveate/grid.hpp"

namespace foveate {

enum class Polarity : std::uint8_t { Off = 0, On = 1 };

inline Polarity flipped(Polarity p) { return p == Polarity::On ? Polarity::Off : Polarity::On; }

/// One DVS event. Timestamps are microseconds.
struct Event {
  std::uint64_t t = 0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  Polarity polarity = Polarity::On;

  friend bool operator==(const Event&, const Event&) = default;
};

/// A stream of events with its declared sensor geometry.
struct EventStream {
  Geometry geometry;
  std::vector<Event> events;
};

using CountGrid = Grid<std::uint32_t>;

/// Per-polarity event counts over the half-open window [window_start, window_end).
class EventSlice {
 public:
  EventSlice(Geometry g, std::uint64_t window_start, std::uint64_t window_end);
  EventSlice(CountGrid pos, CountGrid neg, std::uint64_t window_start, std::uint64_t window_end);

  void add(const Event& e);

  [[nodiscard]] Geometry geometry() const { return pos_.geometry(); }
  [[nodiscard]] std::uint64_t window_start() const { return start_; }
  [[nodiscard]] std::uint64_t window_end() const { return end_; }
  [[nodiscard]] const CountGrid& pos() const { return pos_; }
  [[nodiscard]] const CountGrid& neg() const { return neg_; }
  [[nodiscard]] std::uint64_t total_events() const { return total_; }

  /// 1 where any event of either polarity landed.
  [[nodiscard]] Mask binary() const;
  [[nodiscard]] Mask binary_pos() const;
  [[nodiscard]] Mask binary_neg() const;

  /// The same slice with ON and OFF channels exchanged.
  [[nodiscard]] EventSlice polarity_swapped() const;

 private:
  CountGrid pos_;
  CountGrid neg_;
  std::uint64_t start_;
  std::uint64_t end_;
  std::uint64_t total_ = 0;
};

/// Streaming binner. Windows are anchored at the first event's timestamp.
///
/// Events outside the geometry are dropped and counted; a timestamp that goes
/// backwards throws, since the stream can no longer be binned consistently.
class SliceAccumulator {
 public:
  SliceAccumulator(Geometry g, std::uint64_t window_us);

  /// Appends every slice completed by this event (including empty gap windows) to `out`.
  void push(const Event& e, std::vector<EventSlice>& out);
  /// Emits the open window, if any event has been seen.
  std::optional<EventSlice> flush();

  [[nodiscard]] std::size_t rejected() const { return rejected_; }
  [[nodiscard]] std::size_t accepted() const { return accepted_; }
  [[nodiscard]] std::uint64_t window() const { return window_; }

 private:
  Geometry geom_;
  std::uint64_t window_;
  std::optional<std::uint64_t> origin_;
  std::uint64_t last_t_ = 0;
  std::optional<EventSlice> current_;
  std::uint64_t current_index_ = 0;
  std::size_t rejected_ = 0;
  std::size_t accepted_ = 0;
};

struct AccumulateResult {
  std::vector<EventSlice> slices;
  std::size_t rejected = 0;
};

AccumulateResult accumulate(std::span<const Event> events, std::uint64_t window_us, Geometry g);

struct SuppressionStats {
  std::uint64_t input_events = 0;
  std::uint64_t output_events = 0;
  double suppression_fraction = 0.0;
};

/// Events of `input` that land on pixels where `mask` is set survive.
SuppressionStats suppression_stats(const EventSlice& input, const Mask& mask);

/// Mean suppression fraction over a set of per-slice statistics (0 for an empty set).
double mean_suppression(std::span<const SuppressionStats> stats);

}  // namespace foveate
