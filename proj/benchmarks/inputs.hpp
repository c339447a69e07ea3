#pragma once

#include <cstdint>
#include <random>

#include "foveate/events.hpp"
#include "foveate/grid.hpp"

namespace foveate::benchdata {

// Slice with each pixel firing independently; ON and OFF equally likely.
inline EventSlice random_slice(Geometry g, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution fire(density);
  std::bernoulli_distribution on(0.5);
  EventSlice s(g, 0, 20000);
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      if (fire(rng)) {
        s.add({1, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
               on(rng) ? Polarity::On : Polarity::Off});
      }
    }
  }
  return s;
}

inline Mask random_mask(Geometry g, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution fire(density);
  Mask m(g, 0);
  for (auto& v : m.values()) v = fire(rng) ? 1 : 0;
  return m;
}

}  // namespace foveate::benchdata
