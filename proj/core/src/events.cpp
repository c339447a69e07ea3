#include "foveate/events.hpp"

#include <numeric>
#include <string>

namespace foveate {

namespace {

Mask nonzero_of(const CountGrid& a, const CountGrid* b) {
  Mask m(a.geometry());
  auto av = a.values();
  auto mv = m.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    const std::uint32_t c = av[i] + (b ? b->values()[i] : 0U);
    mv[i] = c > 0 ? 1 : 0;
  }
  return m;
}

}  // namespace

EventSlice::EventSlice(Geometry g, std::uint64_t window_start, std::uint64_t window_end)
    : pos_(g, 0), neg_(g, 0), start_(window_start), end_(window_end) {
  if (window_end <= window_start) throw Error("event slice: window_end must exceed window_start");
}

EventSlice::EventSlice(CountGrid pos, CountGrid neg, std::uint64_t window_start,
                       std::uint64_t window_end)
    : pos_(std::move(pos)), neg_(std::move(neg)), start_(window_start), end_(window_end) {
  require_same_geometry(pos_.geometry(), neg_.geometry(), "event slice");
  if (window_end <= window_start) throw Error("event slice: window_end must exceed window_start");
  total_ = static_cast<std::uint64_t>(grid_sum(pos_) + grid_sum(neg_));
}

void EventSlice::add(const Event& e) {
  auto& grid = e.polarity == Polarity::On ? pos_ : neg_;
  ++grid(e.x, e.y);
  ++total_;
}

Mask EventSlice::binary() const { return nonzero_of(pos_, &neg_); }
Mask EventSlice::binary_pos() const { return nonzero_of(pos_, nullptr); }
Mask EventSlice::binary_neg() const { return nonzero_of(neg_, nullptr); }

EventSlice EventSlice::polarity_swapped() const { return EventSlice(neg_, pos_, start_, end_); }

SliceAccumulator::SliceAccumulator(Geometry g, std::uint64_t window_us)
    : geom_(g), window_(window_us) {
  if (window_us == 0) throw Error("accumulate: window must be positive");
  if (g.width <= 0 || g.height <= 0) throw Error("accumulate: geometry must be non-empty");
}

void SliceAccumulator::push(const Event& e, std::vector<EventSlice>& out) {
  if (!origin_) {
    origin_ = e.t;
    last_t_ = e.t;
    current_index_ = 0;
    current_.emplace(geom_, e.t, e.t + window_);
  }
  if (e.t < last_t_) {
    throw Error("accumulate: timestamp decreased from " + std::to_string(last_t_) + " to " +
                std::to_string(e.t));
  }
  last_t_ = e.t;

  const std::uint64_t index = (e.t - *origin_) / window_;
  while (current_index_ < index) {
    out.push_back(std::move(*current_));
    ++current_index_;
    const std::uint64_t start = *origin_ + current_index_ * window_;
    current_.emplace(geom_, start, start + window_);
  }

  if (!geom_.contains(e.x, e.y)) {
    ++rejected_;
    return;
  }
  current_->add(e);
  ++accepted_;
}

std::optional<EventSlice> SliceAccumulator::flush() {
  // End of stream: a later push re-anchors on its own timestamp.
  std::optional<EventSlice> out;
  out.swap(current_);
  origin_.reset();
  current_index_ = 0;
  return out;
}

AccumulateResult accumulate(std::span<const Event> events, std::uint64_t window_us, Geometry g) {
  SliceAccumulator acc(g, window_us);
  AccumulateResult result;
  for (const Event& e : events) acc.push(e, result.slices);
  if (auto last = acc.flush()) result.slices.push_back(std::move(*last));
  result.rejected = acc.rejected();
  return result;
}

SuppressionStats suppression_stats(const EventSlice& input, const Mask& mask) {
  require_same_geometry(input.geometry(), mask.geometry(), "suppression_stats");
  SuppressionStats s;
  s.input_events = input.total_events();
  auto pv = input.pos().values();
  auto nv = input.neg().values();
  auto mv = mask.values();
  for (std::size_t i = 0; i < mv.size(); ++i) {
    if (mv[i]) s.output_events += static_cast<std::uint64_t>(pv[i]) + nv[i];
  }
  s.suppression_fraction =
      s.input_events > 0
          ? 1.0 - static_cast<double>(s.output_events) / static_cast<double>(s.input_events)
          : 0.0;
  return s;
}

double mean_suppression(std::span<const SuppressionStats> stats) {
  if (stats.empty()) return 0.0;
  const double sum = std::accumulate(stats.begin(), stats.end(), 0.0,
                                     [](double acc, const SuppressionStats& s) {
                                       return acc + s.suppression_fraction;
                                     });
  return sum / static_cast<double>(stats.size());
}

}  // namespace foveate
