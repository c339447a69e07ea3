#pragma once

// Slow, literal reference implementations used to cross-check the library.

#include <cmath>
#include <cstdint>
#include <random>

#include "foveate/grid.hpp"

namespace foveate::oracle {

inline GridD random_grid(Geometry g, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  GridD out(g);
  for (double& v : out.values()) v = u(rng);
  return out;
}

inline Mask random_mask(Geometry g, std::mt19937_64& rng, double p = 0.5) {
  std::bernoulli_distribution b(p);
  Mask out(g);
  for (auto& v : out.values()) v = b(rng) ? 1 : 0;
  return out;
}

/// out(x, y) = sum_{i,j} k(i, j) in(x + i - (kw-1)/2, y + j - (kh-1)/2), zero outside.
inline GridD correlate(const GridD& in, const GridD& k) {
  GridD out(in.geometry(), 0.0);
  const int cx = (k.width() - 1) / 2;
  const int cy = (k.height() - 1) / 2;
  for (int y = 0; y < in.height(); ++y) {
    for (int x = 0; x < in.width(); ++x) {
      double s = 0.0;
      for (int j = 0; j < k.height(); ++j) {
        for (int i = 0; i < k.width(); ++i) {
          const int sx = x + i - cx;
          const int sy = y + j - cy;
          if (sx >= 0 && sy >= 0 && sx < in.width() && sy < in.height()) s += k(i, j) * in(sx, sy);
        }
      }
      out(x, y) = s;
    }
  }
  return out;
}

/// I0(x) = sum_k ((x/2)^k / k!)^2, summed until the terms vanish.
inline double bessel_i0_series(double x) {
  long double term = 1.0L;
  long double sum = 1.0L;
  const long double q = static_cast<long double>(x) * x / 4.0L;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<long double>(k) * k);
    sum += term;
    if (term < sum * 1e-19L) break;
  }
  return static_cast<double>(sum);
}

inline double iou(const Mask& a, const Mask& b) {
  long inter = 0;
  long uni = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (a(x, y) && b(x, y)) ++inter;
      if (a(x, y) || b(x, y)) ++uni;
    }
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Windowed SSIM with Gaussian weights recomputed per window, two-pass moments.
inline double ssim(const GridD& a, const GridD& b) {
  const int n = 7;
  const double sigma = 1.5;
  const double c1 = 0.0001;
  const double c2 = 0.0009;
  double w[7][7];
  double wsum = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      w[j][i] = std::exp(-((i - 3) * (i - 3) + (j - 3) * (j - 3)) / (2 * sigma * sigma));
      wsum += w[j][i];
    }
  }
  double total = 0.0;
  int count = 0;
  for (int y0 = 0; y0 + n <= a.height(); ++y0) {
    for (int x0 = 0; x0 + n <= a.width(); ++x0) {
      double ma = 0, mb = 0;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          ma += w[j][i] / wsum * a(x0 + i, y0 + j);
          mb += w[j][i] / wsum * b(x0 + i, y0 + j);
        }
      double va = 0, vb = 0, cov = 0;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const double da = a(x0 + i, y0 + j) - ma;
          const double db = b(x0 + i, y0 + j) - mb;
          va += w[j][i] / wsum * da * da;
          vb += w[j][i] / wsum * db * db;
          cov += w[j][i] / wsum * da * db;
        }
      total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / count;
}

/// Box columns px - box/2 .. px - box/2 + box - 1 (rows likewise), by pixel enumeration.
inline bool box_hit(int px, int py, const Mask& m, int box) {
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      const bool in_box = x >= px - box / 2 && x < px - box / 2 + box && y >= py - box / 2 &&
                          y < py - box / 2 + box;
      if (in_box && m(x, y)) return true;
    }
  }
  return false;
}

}  // namespace foveate::oracle
