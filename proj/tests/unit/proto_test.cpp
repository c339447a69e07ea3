#include <doctest.h>

#include <cmath>
#include <random>

#include "foveate/proto.hpp"
#include "oracles.hpp"

using namespace foveate;

namespace {

ProtoInput from_mask(const Mask& on, const Mask& off) {
  Mask active(on.geometry(), 0);
  for (std::size_t i = 0; i < active.size(); ++i) {
    active.values()[i] = (on.values()[i] || off.values()[i]) ? 1 : 0;
  }
  return {active, on, off};
}

// Outline of an axis-aligned square, ON on the left/top sides and OFF on the others.
ProtoInput square_outline(Geometry g, int x0, int y0, int side) {
  Mask on(g, 0);
  Mask off(g, 0);
  for (int i = 0; i < side; ++i) {
    on(x0, y0 + i) = 1;
    on(x0 + i, y0) = 1;
    off(x0 + side - 1, y0 + i) = 1;
    off(x0 + i, y0 + side - 1) = 1;
  }
  return from_mask(on, off);
}

ProtoInput vertical_line(Geometry g, int x, int y0, int length) {
  Mask on(g, 0);
  for (int y = y0; y < y0 + length; ++y) on(x, y) = 1;
  return from_mask(on, Mask(g, 0));
}

}  // namespace

TEST_CASE("max pooling and pyramid shapes") {
  Mask m(5, 3, 0);
  m(4, 2) = 1;
  const Mask p = max_pool2(m);
  CHECK(p.geometry() == Geometry{3, 2});
  CHECK(p(2, 1) == 1);
  CHECK(count_nonzero(p) == 1);

  const auto levels = pyramid(from_mask(Mask(16, 12, 0), Mask(16, 12, 0)), 3);
  REQUIRE(levels.size() == 3);
  CHECK(levels[2].geometry() == Geometry{4, 3});
  CHECK_THROWS_AS(pyramid(from_mask(Mask(3, 3, 0), Mask(3, 3, 0)), 3), Error);
}

TEST_CASE("border ownership matches the literal formula") {
  std::mt19937_64 rng(21);
  ProtoConfig cfg;
  const VonMisesBank bank(cfg);
  const Geometry g{30, 26};
  const ProtoInput in = from_mask(oracle::random_mask(g, rng, 0.1), oracle::random_mask(g, rng, 0.1));
  const BorderOwnershipResponse bo = border_ownership(cfg, bank, in);

  GridD u(g, 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    u.values()[i] = (in.on.values()[i] ? 1.0 : 0.0) + (in.off.values()[i] ? 1.0 : 0.0);
  }
  for (std::size_t k = 0; k < bank.size(); ++k) {
    const GridD t = oracle::correlate(u, bank.toward(k));
    const GridD a = oracle::correlate(u, bank.away(k));
    for (std::size_t i = 0; i < u.size(); ++i) {
      const bool gate = in.active.values()[i] != 0;
      const double b1 = gate ? std::max(0.0, t.values()[i] - cfg.inhibition * a.values()[i]) : 0.0;
      const double b2 = gate ? std::max(0.0, a.values()[i] - cfg.inhibition * t.values()[i]) : 0.0;
      CHECK(bo.b1[k].values()[i] == doctest::Approx(b1).epsilon(1e-12));
      CHECK(bo.b2[k].values()[i] == doctest::Approx(b2).epsilon(1e-12));
    }
  }
}

TEST_CASE("fast grouping equals the rectified sum of the four explicit pools") {
  std::mt19937_64 rng(4);
  ProtoConfig cfg;
  cfg.inhibition = 0.5;  // weak inhibition keeps both B1 and B2 populated
  const VonMisesBank bank(cfg);
  const Geometry g{32, 32};
  const ProtoInput in = from_mask(oracle::random_mask(g, rng, 0.15), oracle::random_mask(g, rng, 0.05));
  const BorderOwnershipResponse bo = border_ownership(cfg, bank, in);
  const GridD fast = level_saliency(bank, bo);
  const GridD slow = grouping_terms(bank, bo).combined();
  for (std::size_t i = 0; i < fast.size(); ++i) {
    CHECK(fast.values()[i] == doctest::Approx(std::max(0.0, slow.values()[i])).epsilon(1e-10));
  }
}

TEST_CASE("stronger inhibition never raises a border-ownership response") {
  std::mt19937_64 rng(8);
  const Geometry g{24, 24};
  const ProtoInput in = from_mask(oracle::random_mask(g, rng, 0.2), oracle::random_mask(g, rng, 0.2));
  ProtoConfig cfg;
  std::vector<GridD> prev;
  for (double w : {0.0, 0.5, 1.0, 3.0}) {
    cfg.inhibition = w;
    const VonMisesBank bank(cfg);
    const BorderOwnershipResponse bo = border_ownership(cfg, bank, in);
    if (!prev.empty()) {
      for (std::size_t k = 0; k < bo.b1.size(); ++k) {
        for (std::size_t i = 0; i < bo.b1[k].size(); ++i) {
          CHECK(bo.b1[k].values()[i] <= prev[k].values()[i] + 1e-15);
        }
      }
    }
    prev = bo.b1;
  }
}

TEST_CASE("single-level saliency is translation equivariant away from the border") {
  ProtoConfig cfg;
  cfg.levels = 1;
  const Geometry g{96, 96};
  const SaliencyMap a = saliency_from_events(cfg, square_outline(g, 40, 38, 10));
  const SaliencyMap b = saliency_from_events(cfg, square_outline(g, 45, 41, 10));
  CHECK(b.x == a.x + 5);
  CHECK(b.y == a.y + 3);
  for (int y = 0; y + 3 < g.height; ++y) {
    for (int x = 0; x + 5 < g.width; ++x) {
      CHECK(b.values(x + 5, y + 3) == doctest::Approx(a.values(x, y)).epsilon(1e-9));
    }
  }
}

TEST_CASE("argmax ties go to the lowest row, then the lowest column") {
  GridD v({6, 5}, 0.0);
  v(4, 1) = 2.0;
  v(1, 3) = 2.0;
  v(2, 1) = 2.0;
  const SaliencyMap m = make_saliency_map(v);
  CHECK(m.x == 2);
  CHECK(m.y == 1);
  CHECK_FALSE(m.degenerate);
}

TEST_CASE("an inactive input gives a degenerate map at the centre") {
  const SaliencyMap m = saliency_from_events(ProtoConfig{}, from_mask(Mask(128, 96, 0), Mask(128, 96, 0)));
  CHECK(m.degenerate);
  CHECK(m.x == 64);
  CHECK(m.y == 48);
  CHECK(m.max_value == 0.0);
}

TEST_CASE("a closed contour is more salient than an open line of the same length") {
  const Geometry g{128, 128};
  const SaliencyMap square = saliency_from_events(ProtoConfig{}, square_outline(g, 56, 56, 16));
  const SaliencyMap line = saliency_from_events(ProtoConfig{}, vertical_line(g, 64, 34, 60));
  CHECK(square.max_value > line.max_value);
}

TEST_CASE("combining levels upsamples by nearest neighbour") {
  const std::vector<GridD> levels{GridD({4, 4}, 1.0), GridD({2, 2}, 0.0)};
  std::vector<GridD> lv = levels;
  lv[1](1, 0) = 5.0;
  const GridD out = combine_levels(lv, {4, 4});
  CHECK(out(2, 0) == 6.0);
  CHECK(out(3, 1) == 6.0);
  CHECK(out(1, 1) == 1.0);
  CHECK_THROWS_AS(combine_levels(lv, {6, 6}), Error);
}

TEST_CASE("regional maxima include plateaus and exclude shoulders") {
  GridD v({7, 5}, 0.0);
  v(1, 1) = 3.0;
  v(2, 1) = 3.0;  // two-pixel plateau
  v(5, 3) = 2.0;
  v(5, 2) = 2.5;  // higher neighbour makes (5, 3) a shoulder
  const Mask m = regional_maxima(v);
  CHECK(m(1, 1) == 1);
  CHECK(m(2, 1) == 1);
  CHECK(m(5, 2) == 1);
  CHECK(m(5, 3) == 0);
  CHECK(count_nonzero(m) == 3);
  CHECK(has_local_maximum_near(v, 2.0, 2.0, 1.0));
  CHECK_FALSE(has_local_maximum_near(v, 3.5, 4.5, 1.0));
}

TEST_CASE("proto stage is deterministic and reset restores it") {
  const ProtoInput in = square_outline({128, 128}, 50, 50, 12);
  ProtoStage s(ProtoConfig{}, {128, 128});
  const SaliencyMap first = s.step(in, 0.02);
  s.step(in, 0.02);
  s.reset();
  const SaliencyMap again = s.step(in, 0.02);
  CHECK(first.values == again.values);
}

TEST_CASE("proto config validation") {
  ProtoConfig c;
  c.orientations_deg.clear();
  CHECK_THROWS_AS(c.validate(), Error);
  KeyValueConfig cfg;
  cfg.set("proto.levels", "2");
  CHECK(ProtoConfig::from_config(cfg).levels == 2);
}
