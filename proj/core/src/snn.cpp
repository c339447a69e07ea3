#include "foveate/snn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace foveate {

namespace {

void l1_normalize(GridD& g) {
  const double mass = grid_sum(g);
  if (!(mass > 0.0) || !std::isfinite(mass)) throw Error("kernel has no finite positive mass");
  for (double& v : g.values()) v /= mass;
}

void check_conv_args(const GridD& input, const GridD& kernel) {
  if (kernel.width() < 1 || kernel.height() < 1) throw Error("conv2d: empty kernel");
  if (kernel.width() > input.width() || kernel.height() > input.height()) {
    throw Error("conv2d: kernel " + to_string(kernel.geometry()) + " larger than input " +
                to_string(input.geometry()));
  }
}

}  // namespace

GridD gaussian_kernel(const GaussianKernelSpec& spec) {
  if (spec.size < 1) throw Error("gaussian kernel: size must be >= 1");
  if (!(spec.sigma > 0.0)) throw Error("gaussian kernel: sigma must be > 0");
  GridD k(spec.size, spec.size);
  const double c = (spec.size - 1) / 2.0;
  const double inv = 1.0 / (2.0 * spec.sigma * spec.sigma);
  for (int j = 0; j < spec.size; ++j) {
    for (int i = 0; i < spec.size; ++i) {
      const double dx = i - c;
      const double dy = j - c;
      k(i, j) = std::exp(-(dx * dx + dy * dy) * inv);
    }
  }
  l1_normalize(k);
  return k;
}

double bessel_i0(double x) { return std::cyl_bessel_i(0.0, std::abs(x)); }

int von_mises_size(const VonMisesKernelSpec& spec) {
  if (!(spec.radius > 0.0)) throw Error("von Mises kernel: radius must be > 0");
  const int min_size = 2 * static_cast<int>(std::ceil(spec.radius)) + 1;
  if (spec.size == 0) return min_size;
  if (spec.size < min_size) throw Error("von Mises kernel: size must be >= 2*R0+1");
  return spec.size;
}

double von_mises_weight(const VonMisesKernelSpec& spec, double dx, double dy) {
  const double r = std::hypot(dx, dy);
  const double angle = std::atan2(-dy, dx);
  // I0 is even, so the signed ring distance can be folded.
  return std::exp(spec.rho * spec.radius * std::cos(angle - spec.theta)) /
         bessel_i0(std::abs(r - spec.radius));
}

GridD von_mises_kernel(const VonMisesKernelSpec& spec, bool normalize) {
  if (spec.rho < 0.0) throw Error("von Mises kernel: rho must be >= 0");
  const int n = von_mises_size(spec);
  const double c = (n - 1) / 2.0;
  GridD k(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) k(i, j) = von_mises_weight(spec, i - c, j - c);
  if (normalize) l1_normalize(k);
  return k;
}

GridD conv2d_same(const GridD& input, const GridD& kernel) {
  check_conv_args(input, kernel);
  const int w = input.width();
  const int h = input.height();
  const int cx = (kernel.width() - 1) / 2;
  const int cy = (kernel.height() - 1) / 2;
  GridD out(input.geometry(), 0.0);
  for (int j = 0; j < kernel.height(); ++j) {
    const int dy = j - cy;
    const int y0 = std::max(0, -dy);
    const int y1 = std::min(h, h - dy);
    for (int i = 0; i < kernel.width(); ++i) {
      const double k = kernel(i, j);
      if (k == 0.0) continue;
      const int dx = i - cx;
      const int x0 = std::max(0, -dx);
      const int x1 = std::min(w, w - dx);
      for (int y = y0; y < y1; ++y) {
        const double* src = input.row(y + dy).data() + dx;
        double* dst = out.row(y).data();
        for (int x = x0; x < x1; ++x) dst[x] += k * src[x];
      }
    }
  }
  return out;
}

void conv2d_scatter_add(const GridD& input, const GridD& kernel, double scale, GridD& out) {
  check_conv_args(input, kernel);
  require_same_geometry(input.geometry(), out.geometry(), "conv2d_scatter_add");
  const int w = input.width();
  const int h = input.height();
  const int kw = kernel.width();
  const int kh = kernel.height();
  const int cx = (kw - 1) / 2;
  const int cy = (kh - 1) / 2;
  for (int v = 0; v < h; ++v) {
    const auto in_row = input.row(v);
    for (int u = 0; u < w; ++u) {
      const double a = in_row[static_cast<std::size_t>(u)];
      if (a == 0.0) continue;
      const double sa = scale * a;
      // Input pixel (u, v) reaches out(u - i + cx, v - j + cy) through k(i, j).
      const int j0 = std::max(0, v + cy - (h - 1));
      const int j1 = std::min(kh - 1, v + cy);
      const int i0 = std::max(0, u + cx - (w - 1));
      const int i1 = std::min(kw - 1, u + cx);
      for (int j = j0; j <= j1; ++j) {
        double* dst = out.row(v - j + cy).data() + (u + cx);
        const double* krow = kernel.row(j).data();
        for (int i = i0; i <= i1; ++i) dst[-i] += sa * krow[i];
      }
    }
  }
}

GridD conv2d_same_sparse(const GridD& input, const GridD& kernel) {
  GridD out(input.geometry(), 0.0);
  conv2d_scatter_add(input, kernel, 1.0, out);
  return out;
}

GridD kernel_support_mass(Geometry g, const GridD& kernel) {
  return conv2d_same(GridD(g, 1.0), kernel);
}

LifGrid::LifGrid(Geometry g, double tau_s, double threshold_)
    : v(g, 0.0), tau(tau_s), threshold(threshold_) {
  if (!(tau_s > 0.0)) throw Error("LIF: tau must be > 0");
  if (!(threshold_ > 0.0)) throw Error("LIF: threshold must be > 0");
}

LifStepResult lif_step(LifGrid& grid, const GridD& input, double dt) {
  if (!(dt > 0.0)) throw Error("LIF: dt must be > 0");
  require_same_geometry(grid.v.geometry(), input.geometry(), "lif_step");
  const double decay = std::exp(-dt / grid.tau);
  LifStepResult r{Mask(input.geometry(), 0), GridD(input.geometry())};
  auto v = grid.v.values();
  auto in = input.values();
  auto drive = r.drive.values();
  auto spikes = r.spikes.values();
  for (std::size_t n = 0; n < v.size(); ++n) {
    if (!std::isfinite(in[n])) throw Error("LIF: non-finite input current");
    const double u = v[n] * decay + in[n];
    drive[n] = u;
    if (u >= grid.threshold) {
      spikes[n] = 1;
      v[n] = u - grid.threshold;
    } else {
      v[n] = u;
    }
  }
  return r;
}

std::pair<Mask, LifGrid> lif_stepped(const LifGrid& grid, const GridD& input, double dt) {
  LifGrid next = grid;
  LifStepResult r = lif_step(next, input, dt);
  return {std::move(r.spikes), std::move(next)};
}

}  // namespace foveate
