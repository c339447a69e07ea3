#pragma once

#include <utility>

#include "foveate/grid.hpp"

namespace foveate {

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

/// Isotropic 2-D Gaussian on a size x size grid, centred at ((size-1)/2, (size-1)/2).
/// Even sizes therefore have their centre between pixels.
struct GaussianKernelSpec {
  int size = 8;
  double sigma = 1.0;
};

/// Ring-shaped oriented kernel:
///
///   w(x, y) = exp(rho * R0 * cos(atan2(-y, x) - theta)) / I0(| sqrt(x^2 + y^2) - R0 |)
///
/// with (x, y) the column/row offset from the kernel centre. Because rows grow
/// downwards, theta = 0 points right and theta = pi/2 points up.
struct VonMisesKernelSpec {
  double radius = 8.0;  // R0, pixels
  double rho = 0.2;     // concentration
  double theta = 0.0;   // orientation, radians
  int size = 0;         // 0 selects the minimum odd size 2*ceil(R0)+1
};

/// L1-normalised Gaussian weights.
GridD gaussian_kernel(const GaussianKernelSpec& spec);

[[nodiscard]] int von_mises_size(const VonMisesKernelSpec& spec);
/// Unnormalised weight at integer offset (dx, dy) from the kernel centre.
double von_mises_weight(const VonMisesKernelSpec& spec, double dx, double dy);
/// Weights on the kernel grid; L1-normalised unless `normalize` is false.
GridD von_mises_kernel(const VonMisesKernelSpec& spec, bool normalize = true);

/// Modified Bessel function of the first kind, order 0.
double bessel_i0(double x);

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

/// Same-size correlation with zero padding (the kernel is not flipped):
///
///   out(x, y) = sum_{i,j} k(i, j) * in(x + i - cx, y + j - cy),  cx = (kw-1)/2, cy = (kh-1)/2
///
/// Throws if the kernel is larger than the input in either dimension.
GridD conv2d_same(const GridD& input, const GridD& kernel);

/// Same result as conv2d_same, computed by scattering the kernel from each
/// nonzero input pixel. Faster when the input is sparse.
GridD conv2d_same_sparse(const GridD& input, const GridD& kernel);
/// Accumulates `scale * conv2d_same_sparse(input, kernel)` into `out`.
void conv2d_scatter_add(const GridD& input, const GridD& kernel, double scale, GridD& out);

/// conv2d_same of an all-ones image: the kernel mass that falls inside the image at each pixel.
GridD kernel_support_mass(Geometry g, const GridD& kernel);

// ---------------------------------------------------------------------------
// Leaky integrate-and-fire grid
// ---------------------------------------------------------------------------

/// One population of LIF units with exact exponential leak and subtract-on-spike reset.
struct LifGrid {
  GridD v;
  double tau = 0.02;       // seconds
  double threshold = 1.0;  // subtract-reset threshold

  LifGrid() = default;
  LifGrid(Geometry g, double tau_s, double threshold_ = 1.0);
};

struct LifStepResult {
  Mask spikes;
  /// Membrane after integration and before reset.
  GridD drive;
};

/// v <- v * exp(-dt/tau) + input; units with v >= threshold spike once and lose `threshold`.
LifStepResult lif_step(LifGrid& grid, const GridD& input, double dt);

/// Functional form: returns the spikes and the advanced grid, leaving `grid` untouched.
std::pair<Mask, LifGrid> lif_stepped(const LifGrid& grid, const GridD& input, double dt);

}  // namespace foveate
