#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace foveate {

/// Thrown for malformed inputs, mismatched geometry and invalid configuration.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Geometry {
  int width = 0;
  int height = 0;

  [[nodiscard]] std::size_t area() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  [[nodiscard]] bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height;
  }
  friend bool operator==(const Geometry&, const Geometry&) = default;
};

inline std::string to_string(Geometry g) {
  return std::to_string(g.width) + "x" + std::to_string(g.height);
}

/// Dense row-major 2-D grid. Indexed as (x, y) = (column, row).
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : geom_{width, height}, data_(checked_area(width, height), fill) {}
  explicit Grid(Geometry g, T fill = T{}) : Grid(g.width, g.height, fill) {}

  [[nodiscard]] int width() const { return geom_.width; }
  [[nodiscard]] int height() const { return geom_.height; }
  [[nodiscard]] Geometry geometry() const { return geom_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  [[nodiscard]] std::span<T> row(int y) {
    return {data_.data() + static_cast<std::size_t>(y) * geom_.width,
            static_cast<std::size_t>(geom_.width)};
  }
  [[nodiscard]] std::span<const T> row(int y) const {
    return {data_.data() + static_cast<std::size_t>(y) * geom_.width,
            static_cast<std::size_t>(geom_.width)};
  }

  [[nodiscard]] std::span<T> values() { return data_; }
  [[nodiscard]] std::span<const T> values() const { return data_; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  static std::size_t checked_area(int w, int h) {
    if (w < 0 || h < 0) throw Error("grid dimensions must be non-negative");
    return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  }
  [[nodiscard]] std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * geom_.width + static_cast<std::size_t>(x);
  }

  Geometry geom_{};
  std::vector<T> data_;
};

using GridD = Grid<double>;
using Mask = Grid<std::uint8_t>;

inline void require_same_geometry(Geometry a, Geometry b, const char* what) {
  if (a != b) {
    throw Error(std::string(what) + ": geometry mismatch (" + to_string(a) + " vs " +
                to_string(b) + ")");
  }
}

template <typename T>
double grid_sum(const Grid<T>& g) {
  double s = 0.0;
  for (const T v : g.values()) s += static_cast<double>(v);
  return s;
}

template <typename T>
std::size_t count_nonzero(const Grid<T>& g) {
  return static_cast<std::size_t>(
      std::count_if(g.values().begin(), g.values().end(), [](T v) { return v != T{}; }));
}

/// Converts any grid to doubles.
template <typename T>
GridD to_double(const Grid<T>& g) {
  GridD out(g.geometry());
  auto src = g.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<double>(src[i]);
  return out;
}

}  // namespace foveate
