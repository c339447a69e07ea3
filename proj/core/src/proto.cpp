#include "foveate/proto.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace foveate {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Input current of the border-ownership layer: summed polarity channels or the combined view.
GridD drive_of(const ProtoInput& in, bool polarity_split) {
  GridD u(in.geometry(), 0.0);
  auto out = u.values();
  if (polarity_split) {
    auto on = in.on.values();
    auto off = in.off.values();
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = static_cast<double>(on[i] != 0) + static_cast<double>(off[i] != 0);
  } else {
    auto a = in.active.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] != 0 ? 1.0 : 0.0;
  }
  return u;
}

void check_input(const ProtoInput& in) {
  require_same_geometry(in.active.geometry(), in.on.geometry(), "proto input (on)");
  require_same_geometry(in.active.geometry(), in.off.geometry(), "proto input (off)");
}

}  // namespace

void ProtoConfig::validate() const {
  if (!(radius > 0.0)) throw Error("proto: radius must be > 0");
  if (rho < 0.0) throw Error("proto: rho must be >= 0");
  if (!(inhibition >= 0.0)) throw Error("proto: inhibition must be >= 0");
  if (levels < 1) throw Error("proto: levels must be >= 1");
  if (!(tau > 0.0)) throw Error("proto: tau must be > 0");
  if (orientations_deg.empty()) throw Error("proto: at least one orientation required");
  for (std::size_t i = 0; i < orientations_deg.size(); ++i) {
    for (std::size_t j = i + 1; j < orientations_deg.size(); ++j) {
      const double d = std::fmod(std::abs(orientations_deg[i] - orientations_deg[j]), 180.0);
      if (d < 1e-9 || 180.0 - d < 1e-9) throw Error("proto: orientations must differ modulo 180");
    }
  }
}

ProtoConfig ProtoConfig::from_config(const KeyValueConfig& cfg, ProtoConfig defaults) {
  ProtoConfig c = std::move(defaults);
  c.radius = cfg.get_double("proto.radius", c.radius);
  c.rho = cfg.get_double("proto.rho", c.rho);
  c.inhibition = cfg.get_double("proto.inhibition", c.inhibition);
  c.orientations_deg = cfg.get_doubles("proto.orientations_deg", c.orientations_deg);
  c.levels = static_cast<int>(cfg.get_int("proto.levels", c.levels));
  c.tau = cfg.get_double("proto.tau", c.tau);
  c.polarity_split = cfg.get_bool("proto.polarity_split", c.polarity_split);
  c.validate();
  return c;
}

void ProtoConfig::to_config(KeyValueConfig& cfg) const {
  cfg.set("proto.radius", format_number(radius));
  cfg.set("proto.rho", format_number(rho));
  cfg.set("proto.inhibition", format_number(inhibition));
  std::ostringstream os;
  for (std::size_t i = 0; i < orientations_deg.size(); ++i)
    os << (i ? "," : "") << format_number(orientations_deg[i]);
  cfg.set("proto.orientations_deg", os.str());
  cfg.set("proto.levels", std::to_string(levels));
  cfg.set("proto.tau", format_number(tau));
  cfg.set("proto.polarity_split", polarity_split ? "on" : "off");
}

ProtoInput proto_input(const EventSlice& slice) {
  return {slice.binary(), slice.binary_pos(), slice.binary_neg()};
}

ProtoInput proto_input(const OmsMap& map, const EventSlice& slice) {
  require_same_geometry(map.mask.geometry(), slice.geometry(), "proto_input");
  return {map.mask, map.masked_pos(slice), map.masked_neg(slice)};
}

Mask max_pool2(const Mask& m) {
  const int w = (m.width() + 1) / 2;
  const int h = (m.height() + 1) / 2;
  Mask out(w, h, 0);
  for (int y = 0; y < m.height(); ++y) {
    const auto row = m.row(y);
    auto dst = out.row(y / 2);
    for (int x = 0; x < m.width(); ++x) {
      auto& d = dst[static_cast<std::size_t>(x / 2)];
      d = std::max(d, row[static_cast<std::size_t>(x)]);
    }
  }
  return out;
}

std::vector<ProtoInput> pyramid(const ProtoInput& input, int levels) {
  if (levels < 1) throw Error("pyramid: levels must be >= 1");
  check_input(input);
  const int need = 1 << (levels - 1);
  if (input.geometry().width < need || input.geometry().height < need) {
    throw Error("pyramid: image " + to_string(input.geometry()) + " too small for " +
                std::to_string(levels) + " levels");
  }
  std::vector<ProtoInput> out;
  out.reserve(static_cast<std::size_t>(levels));
  out.push_back(input);
  for (int l = 1; l < levels; ++l) {
    const ProtoInput& prev = out.back();
    out.push_back({max_pool2(prev.active), max_pool2(prev.on), max_pool2(prev.off)});
  }
  return out;
}

VonMisesBank::VonMisesBank(const ProtoConfig& config) {
  config.validate();
  for (double deg : config.orientations_deg) {
    const double theta = deg * kDegToRad;
    VonMisesKernelSpec spec{config.radius, config.rho, theta, 0};
    thetas_.push_back(theta);
    toward_.push_back(von_mises_kernel(spec));
    spec.theta = theta + std::numbers::pi;
    away_.push_back(von_mises_kernel(spec));
    GridD c = away_.back();
    auto cv = c.values();
    auto tv = toward_.back().values();
    for (std::size_t i = 0; i < cv.size(); ++i) cv[i] -= tv[i];
    contrast_.push_back(std::move(c));
  }
}

BorderOwnershipResponse border_ownership(const ProtoConfig& config, const VonMisesBank& bank,
                                         const ProtoInput& input) {
  check_input(input);
  const Geometry g = input.geometry();
  const GridD u = drive_of(input, config.polarity_split);
  const double w = config.inhibition;
  auto gate = input.active.values();

  BorderOwnershipResponse r;
  r.b1.reserve(bank.size());
  r.b2.reserve(bank.size());
  for (std::size_t k = 0; k < bank.size(); ++k) {
    const GridD toward = conv2d_same_sparse(u, bank.toward(k));
    const GridD away = conv2d_same_sparse(u, bank.away(k));
    GridD b1(g, 0.0);
    GridD b2(g, 0.0);
    auto tv = toward.values();
    auto av = away.values();
    auto o1 = b1.values();
    auto o2 = b2.values();
    for (std::size_t i = 0; i < o1.size(); ++i) {
      if (!gate[i]) continue;
      o1[i] = std::max(0.0, tv[i] - w * av[i]);
      o2[i] = std::max(0.0, av[i] - w * tv[i]);
    }
    r.b1.push_back(std::move(b1));
    r.b2.push_back(std::move(b2));
  }
  return r;
}

GridD GroupingTerms::combined() const {
  GridD out(g1.geometry(), 0.0);
  auto o = out.values();
  auto a = g1.values();
  auto as = g1_star.values();
  auto b = g2.values();
  auto bs = g2_star.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = (a[i] - as[i]) + (b[i] - bs[i]);
  return out;
}

namespace {

void check_responses(const VonMisesBank& bank, const BorderOwnershipResponse& bo) {
  if (bo.b1.size() != bank.size() || bo.b2.size() != bank.size()) {
    throw Error("grouping: expected " + std::to_string(bank.size()) + " orientations");
  }
}

}  // namespace

GroupingTerms grouping_terms(const VonMisesBank& bank, const BorderOwnershipResponse& bo) {
  check_responses(bank, bo);
  const Geometry g = bo.b1.front().geometry();
  GroupingTerms t{GridD(g, 0.0), GridD(g, 0.0), GridD(g, 0.0), GridD(g, 0.0)};
  for (std::size_t k = 0; k < bank.size(); ++k) {
    conv2d_scatter_add(bo.b1[k], bank.away(k), 1.0, t.g1);
    conv2d_scatter_add(bo.b1[k], bank.toward(k), 1.0, t.g1_star);
    conv2d_scatter_add(bo.b2[k], bank.toward(k), 1.0, t.g2);
    conv2d_scatter_add(bo.b2[k], bank.away(k), 1.0, t.g2_star);
  }
  return t;
}

GridD level_saliency(const VonMisesBank& bank, const BorderOwnershipResponse& bo) {
  check_responses(bank, bo);
  const Geometry g = bo.b1.front().geometry();
  GridD s(g, 0.0);
  GridD diff(g, 0.0);
  for (std::size_t k = 0; k < bank.size(); ++k) {
    require_same_geometry(g, bo.b1[k].geometry(), "grouping");
    require_same_geometry(g, bo.b2[k].geometry(), "grouping");
    auto d = diff.values();
    auto p = bo.b1[k].values();
    auto q = bo.b2[k].values();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = p[i] - q[i];
    conv2d_scatter_add(diff, bank.contrast(k), 1.0, s);
  }
  for (double& v : s.values()) v = std::max(0.0, v);
  return s;
}

SaliencyMap make_saliency_map(GridD values) {
  SaliencyMap m;
  const Geometry g = values.geometry();
  m.x = g.width / 2;
  m.y = g.height / 2;
  double best = 0.0;
  for (int y = 0; y < g.height; ++y) {
    const auto row = values.row(y);
    for (int x = 0; x < g.width; ++x) {
      if (row[static_cast<std::size_t>(x)] > best) {
        best = row[static_cast<std::size_t>(x)];
        m.x = x;
        m.y = y;
      }
    }
  }
  m.max_value = best;
  m.degenerate = !(best > 0.0);
  m.values = std::move(values);
  return m;
}

GridD combine_levels(std::span<const GridD> levels, Geometry g) {
  GridD out(g, 0.0);
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const GridD& lv = levels[l];
    const int shift = static_cast<int>(l);
    if (((g.width - 1) >> shift) >= lv.width() || ((g.height - 1) >> shift) >= lv.height()) {
      throw Error("combine_levels: level " + std::to_string(l) + " too small");
    }
    for (int y = 0; y < g.height; ++y) {
      const auto src = lv.row(y >> shift);
      auto dst = out.row(y);
      for (int x = 0; x < g.width; ++x)
        dst[static_cast<std::size_t>(x)] += src[static_cast<std::size_t>(x >> shift)];
    }
  }
  return out;
}

SaliencyMap grouping(const VonMisesBank& bank, std::span<const BorderOwnershipResponse> levels,
                     Geometry g) {
  if (levels.empty()) throw Error("grouping: no levels");
  std::vector<GridD> per_level;
  per_level.reserve(levels.size());
  for (const auto& bo : levels) per_level.push_back(level_saliency(bank, bo));
  return make_saliency_map(combine_levels(per_level, g));
}

ProtoStage::ProtoStage(const ProtoConfig& config, Geometry g)
    : config_(config), geom_(g), bank_(config) {
  const int need = 1 << (config_.levels - 1);
  const int k = bank_.kernel_size();
  // Every level must still hold a whole kernel.
  if ((g.width + need - 1) / need < k || (g.height + need - 1) / need < k) {
    throw Error("proto: image " + to_string(g) + " too small for " +
                std::to_string(config_.levels) + " levels of " + std::to_string(k) + "px kernels");
  }
  reset();
}

void ProtoStage::reset() {
  b1_.assign(static_cast<std::size_t>(config_.levels), {});
  b2_.assign(static_cast<std::size_t>(config_.levels), {});
  Geometry lg = geom_;
  for (int l = 0; l < config_.levels; ++l) {
    for (std::size_t k = 0; k < bank_.size(); ++k) {
      b1_[static_cast<std::size_t>(l)].emplace_back(lg, config_.tau);
      b2_[static_cast<std::size_t>(l)].emplace_back(lg, config_.tau);
    }
    lg = {(lg.width + 1) / 2, (lg.height + 1) / 2};
  }
  last_spikes_ = 0;
}

SaliencyMap ProtoStage::step(const ProtoInput& input, double dt) {
  require_same_geometry(geom_, input.geometry(), "proto step");
  const std::vector<ProtoInput> levels = pyramid(input, config_.levels);
  std::vector<GridD> per_level;
  per_level.reserve(levels.size());
  last_spikes_ = 0;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    BorderOwnershipResponse bo = border_ownership(config_, bank_, levels[l]);
    for (std::size_t k = 0; k < bank_.size(); ++k) {
      LifStepResult r1 = lif_step(b1_[l][k], bo.b1[k], dt);
      LifStepResult r2 = lif_step(b2_[l][k], bo.b2[k], dt);
      last_spikes_ += count_nonzero(r1.spikes) + count_nonzero(r2.spikes);
      bo.b1[k] = std::move(r1.drive);
      bo.b2[k] = std::move(r2.drive);
    }
    per_level.push_back(level_saliency(bank_, bo));
  }
  return make_saliency_map(combine_levels(per_level, geom_));
}

Mask regional_maxima(const GridD& values) {
  const Geometry g = values.geometry();
  Mask out(g, 0);
  Mask seen(g, 0);
  std::vector<std::pair<int, int>> plateau;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      if (seen(x, y) || !(values(x, y) > 0.0)) continue;
      const double v = values(x, y);
      bool maximal = true;
      plateau.clear();
      stack.assign(1, {x, y});
      seen(x, y) = 1;
      while (!stack.empty()) {
        const auto [px, py] = stack.back();
        stack.pop_back();
        plateau.emplace_back(px, py);
        for (int j = py - 1; j <= py + 1; ++j) {
          for (int i = px - 1; i <= px + 1; ++i) {
            if (!g.contains(i, j)) continue;
            const double w = values(i, j);
            if (w > v) {
              maximal = false;
            } else if (w == v && !seen(i, j)) {
              seen(i, j) = 1;
              stack.emplace_back(i, j);
            }
          }
        }
      }
      if (maximal) {
        for (const auto& [px, py] : plateau) out(px, py) = 1;
      }
    }
  }
  return out;
}

bool has_local_maximum_near(const GridD& values, double cx, double cy, double radius) {
  const Mask peaks = regional_maxima(values);
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
  const int x1 = std::min(values.width() - 1, static_cast<int>(std::ceil(cx + radius)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
  const int y1 = std::min(values.height() - 1, static_cast<int>(std::ceil(cy + radius)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double ddx = x + 0.5 - cx;
      const double ddy = y + 0.5 - cy;
      if (ddx * ddx + ddy * ddy <= radius * radius && peaks(x, y)) return true;
    }
  }
  return false;
}

SaliencyMap saliency_from_events(const ProtoConfig& config, const ProtoInput& input) {
  ProtoStage stage(config, input.geometry());
  return stage.step(input, 1e-3);
}

}  // namespace foveate
