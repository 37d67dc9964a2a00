#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "projlab/generators.hpp"
#include "projlab/scale_blowup.hpp"

using namespace projlab;

namespace {

PointSet2D full_grid(int per_side, double step) {
  std::vector<Point2> p;
  for (int i = 0; i < per_side; ++i) {
    for (int j = 0; j < per_side; ++j) p.push_back({i * step, j * step});
  }
  return PointSet2D(p, step);
}

/// max over levels 0..finest and dyadic cells of mass/side^s, cells found by floor.
double brute_certificate(const WeightedPointSet& mu, double s) {
  double worst = 0.0;
  for (int level = 0; level <= mu.finest_level; ++level) {
    const double side = std::ldexp(1.0, -level);
    std::map<std::pair<long long, long long>, double> mass;
    for (std::size_t i = 0; i < mu.points.size(); ++i) {
      mass[{static_cast<long long>(std::floor(mu.points[i].x / side)),
            static_cast<long long>(std::floor(mu.points[i].y / side))}] += mu.weights[i];
    }
    for (const auto& [k, m] : mass) worst = std::max(worst, m / std::pow(side, s));
  }
  return worst;
}

}  // namespace

TEST(Frostman, CertificateAtMostOne) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const PointSet2D p(oracle::random_points(300, seed));
    for (double s : {0.5, 1.0, 1.7}) {
      const auto mu = frostman_weights(p, s, Scale(1.0 / 64));
      EXPECT_LE(mu.certificate, 1.0 + 1e-12);
      EXPECT_NEAR(mu.certificate, brute_certificate(mu, s), 1e-12);
      double total = 0.0;
      for (double w : mu.weights) {
        EXPECT_GT(w, 0.0);
        total += w;
      }
      EXPECT_NEAR(total, mu.total_mass, 1e-12);
    }
  }
}

TEST(Frostman, FullGridExponentTwoHasUnitMass) {
  const auto mu = frostman_weights(full_grid(16, 1.0 / 16), 2.0, Scale(1.0 / 16));
  EXPECT_NEAR(mu.total_mass, 1.0, 1e-12);
  for (double w : mu.weights) EXPECT_DOUBLE_EQ(w, 1.0 / 256);
}

TEST(Frostman, Errors) {
  EXPECT_THROW(frostman_weights(PointSet2D{}, 1.0, Scale(0.1)), std::invalid_argument);
  EXPECT_THROW(frostman_weights(PointSet2D({{0, 0}}), 0.0, Scale(0.1)), std::invalid_argument);
}

TEST(EfficientCover, SinglePointUsesLeaf) {
  const auto c = efficient_cover(PointSet2D({{0.3, 0.3}}), Scale(0.5), 1.0 / 64);
  ASSERT_EQ(c.cells.size(), 1u);
  EXPECT_EQ(c.cells[0].level, level_with_diameter_at_most(1.0 / 64));
  EXPECT_TRUE(c.cells[0].contains({0.3, 0.3}));
}

TEST(EfficientCover, FullGridCollapsesToTop) {
  const auto c = efficient_cover(full_grid(16, 1.0 / 16), Scale(0.5), 1.0 / 16);
  const int top = level_with_diameter_at_most(0.5);
  for (const auto& cell : c.cells) EXPECT_EQ(cell.level, top);
  EXPECT_EQ(c.cells.size(), static_cast<std::size_t>(1) << (2 * top));
}

TEST(EfficientCover, CoversAndBeatsLeafCover) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PointSet2D p(oracle::random_points(200, seed));
    const auto c = efficient_cover(p, Scale(0.25), 1.0 / 128);
    for (const auto& q : p) {
      const auto hits = std::count_if(c.cells.begin(), c.cells.end(), [&](const CoverCell& cell) { return cell.contains(q); });
      EXPECT_EQ(hits, 1);
    }
    const int leaf = level_with_diameter_at_most(1.0 / 128);
    std::set<std::pair<long long, long long>> leaves;
    for (const auto& q : p) {
      leaves.insert({static_cast<long long>(std::floor(std::ldexp(q.x, leaf))), static_cast<long long>(std::floor(std::ldexp(q.y, leaf)))});
    }
    EXPECT_LE(c.diam_sum, static_cast<double>(leaves.size()) * std::ldexp(1.0, -leaf) * std::numbers::sqrt2 + 1e-12);
    for (const auto& cell : c.cells) EXPECT_LE(cell.diameter(), 0.25);
  }
}

TEST(Pigeonhole, Examples) {
  EXPECT_EQ(pigeonhole_level({1.0, 0.0, 0.0}), 0u);
  EXPECT_EQ(pigeonhole_level({0.0, 1.0}), 1u);
  // An even split misses the first quota 6/π² and meets the second.
  EXPECT_EQ(pigeonhole_level({0.25, 0.25, 0.25, 0.25}), 1u);
  EXPECT_THROW(pigeonhole_level({0.0, 0.0}), std::invalid_argument);
}

TEST(Pigeonhole, TotalOnSeededDistributions) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    oracle::Uniform u(seed);
    std::vector<double> m(1 + u.below(12));
    for (auto& x : m) x = u.next() < 0.3 ? 0.0 : u.next();
    m[u.below(m.size())] += 1e-3;
    std::size_t k = 0;
    ASSERT_NO_THROW(k = pigeonhole_level(m)) << "seed " << seed;
    double total = 0.0;
    for (double x : m) total += x;
    EXPECT_GE(m[k], 6.0 / (std::numbers::pi * std::numbers::pi) * total / static_cast<double>((k + 1) * (k + 1)) *
                        (1 - 1e-12));
  }
}

TEST(PickScale, MassAccountedAndLevelInRange) {
  const PointSet2D p(oracle::random_points(300, 5));
  const auto mu = frostman_weights(p, 1.0, Scale(1.0 / 128));
  const auto cover = efficient_cover(p, Scale(0.5), 1.0 / 128);
  const auto choice = pick_scale(cover, mu);
  double total = 0.0;
  for (double m : choice.level_mass) total += m;
  EXPECT_NEAR(total, mu.total_mass, 1e-12);
  EXPECT_GE(choice.level, cover.top_level);
  EXPECT_EQ(choice.delta, std::ldexp(1.0, -2 * choice.level));
}

TEST(TwoScale, RandomFrostmanSet) {
  const Scale d(1.0 / 256);
  const auto k = gen_random_frostman(256, 1.0, d, 0);
  const auto mu = frostman_weights(k, 1.0, d);
  const auto ts = two_scale_decomposition(k, mu, d);
  EXPECT_GE(ts.balls.size(), 2u);
  EXPECT_LE(ts.coarse_ratio, 8.0);
  EXPECT_LE(ts.fine_ratio, 8.0);
  EXPECT_LE(check_delta_t(ts.anchors, Scale(1.0 / 16), 1.0).worst_ratio, 8.0);
  EXPECT_LE(check_delta_t(ts.fine, d, 1.0).worst_ratio, 8.0);
  for (std::size_t i = 0; i < ts.balls.size(); ++i) {
    EXPECT_GE(ts.balls[i].mass, ts.mass_threshold);
    for (const auto& q : ts.fine_sets[i]) {
      EXPECT_EQ(std::floor(q.x * 16), static_cast<double>(ts.balls[i].key.ix));
      EXPECT_EQ(std::floor(q.y * 16), static_cast<double>(ts.balls[i].key.iy));
    }
  }
}

TEST(TwoScale, FullGrid) {
  const Scale d(1.0 / 256);
  const auto k = full_grid(256, 1.0 / 256);
  const auto ts = two_scale_decomposition(k, frostman_weights(k, 1.0, d), d);
  EXPECT_LE(ts.coarse_ratio, 8.0);
  EXPECT_LE(ts.fine_ratio, 8.0);
}

TEST(TwoScale, Errors) {
  const PointSet2D k({{0.1, 0.1}});
  const auto mu = frostman_weights(k, 1.0, Scale(1.0 / 16));
  EXPECT_THROW(two_scale_decomposition(k, mu, Scale(1.0 / 8)), std::invalid_argument);
  EXPECT_THROW(two_scale_decomposition(k, mu, Scale(1.0 / 16)), HypothesisError);
}

TEST(TubeRestriction, AnchorsSelectBalls) {
  const Scale d(1.0 / 256);
  const auto k = gen_random_frostman(256, 1.0, d, 1);
  const auto ts = two_scale_decomposition(k, frostman_weights(k, 1.0, d), d);
  const auto e = Direction::from_angle(0.3);
  const Tube t{e, grid_cell(e.dot(ts.anchors[0]), 1.0 / 16), 0.0, 1.0 / 16};
  const auto r = restrict_to_tube(ts, t);
  ASSERT_FALSE(r.balls.empty());
  EXPECT_EQ(r.balls[0], 0u);
  std::size_t expected = 0;
  for (auto b : r.balls) expected += ts.fine_sets[b].size();
  EXPECT_EQ(r.points.size(), expected);
  EXPECT_THROW(restrict_to_tube(ts, Tube{e, 0, 0.0, 1.0 / 256}), std::invalid_argument);
}

TEST(Energy, TwoPoints) {
  EXPECT_DOUBLE_EQ(energy(PointSet2D({{0, 0}, {0.5, 0}}), 1.0), 4.0);
  EXPECT_DOUBLE_EQ(energy(ScalarSet({0.0, 0.25}), 0.5), 4.0);
  EXPECT_THROW(energy(PointSet2D({{0, 0}, {0, 0}}), 1.0), SeparationError);
}

TEST(Energy, CantorNormalizedRatioStable) {
  std::vector<double> ratios;
  for (int depth = 3; depth <= 5; ++depth) {
    const auto c = gen_cantor_1d(0.25, depth);
    const double dp = std::pow(4.0, -depth);
    const double alpha = 0.5;
    ratios.push_back(energy(c, alpha) / (static_cast<double>(c.size()) * std::pow(dp, -alpha) * std::log(1.0 / dp)));
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  EXPECT_LE(*hi / *lo, 4.0);
}

TEST(DirectionalEnergy, MatchesDirectSum) {
  const PointSet2D p({{0, 0}, {0.5, 0}, {0, 0.5}});
  WeightedPointSet mu;
  mu.points = p;
  mu.weights = {0.2, 0.3, 0.5};
  const DirectionSet dirs{Direction::from_components(1, 0), Direction::from_components(0, 1)};
  const double d = 1.0 / 16;
  // Direction (1,0): projections 0, 0.5, 0. Pairs (0,2) collapse to δ.
  const double e0 = 2 * (0.2 * 0.3 * std::pow(0.5, -1.0) + 0.2 * 0.5 / d + 0.3 * 0.5 * std::pow(0.5, -1.0));
  const double e1 = 2 * (0.2 * 0.3 / d + 0.2 * 0.5 * std::pow(0.5, -1.0) + 0.3 * 0.5 * std::pow(0.5, -1.0));
  EXPECT_NEAR(directional_energy(mu, dirs, {1.0, 2.0}, 1.0, Scale(d)), e0 + 2.0 * e1, 1e-12);
  EXPECT_THROW(directional_energy(mu, dirs, {1.0}, 1.0, Scale(d)), std::invalid_argument);
}

TEST(Dilation, ExactForEvenPowersOfTwo) {
  const Scale d(1.0 / 256);
  const auto f = gen_random_product(gen_ap(4, 1.0 / 16), 10, d, 3);
  const auto g = horizontal_dilate(f, d);
  EXPECT_EQ(g.delta, 1.0 / 16);
  for (std::size_t i = 0; i < f.fibers.size(); ++i) {
    for (std::size_t k = 0; k < f.fibers[i].size(); ++k) EXPECT_EQ(g.fibers[i][k], 16.0 * f.fibers[i][k]);
  }
}

TEST(Dilation, RescaledIdentityOnGridInstances) {
  const Scale d(1.0 / 1024);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto f = gen_random_product(gen_ap(8, 1.0 / 32), 20, d, seed);
    const CounterRng rng(seed, 99);
    const double t = static_cast<double>(rng.below(0, 33)) * d.value();
    const auto r = rescaled_projection_identity(f, t, d);
    EXPECT_TRUE(r.equal()) << "seed " << seed << " lhs " << r.lhs << " rhs " << r.rhs;
  }
  EXPECT_THROW(rescaled_projection_identity(gen_random_product(gen_ap(2, 0.5), 2, d, 0), 0.5, d),
               std::invalid_argument);
}

TEST(Dilation, SeparationCheckUnchangedForNarrowFibers) {
  // A fiber narrower than √δ keeps its worst (δ,1) ratio after dilation, now measured at √δ.
  const Scale d(1.0 / 256);
  const auto f = gen_product(gen_ap(2, 0.5), gen_ap(8, 1.0 / 256), d, 1.0, 0.0);
  const auto g = horizontal_dilate(f, d);
  const auto before = check_delta_t(f.fibers[0], d, 1.0);
  const auto after = check_delta_t(g.fibers[0], Scale(1.0 / 16), 1.0);
  EXPECT_DOUBLE_EQ(before.worst_ratio, after.worst_ratio);
}

TEST(ReparamDirections, TangentOfOffset) {
  const Scale d(1.0 / 256);
  const auto c = Direction::from_angle(0.4);
  const auto r = reparam_directions({Direction::from_angle(0.4), Direction::from_angle(0.45)}, c, d);
  EXPECT_EQ(r[0], 0.0);
  EXPECT_NEAR(r[1], std::tan(0.05), 1e-12);
  EXPECT_THROW(reparam_directions({Direction::from_angle(1.0)}, c, d), std::invalid_argument);
}

TEST(NeighborhoodSum, SmallExample) {
  const double d = 1.0 / 16;
  EXPECT_DOUBLE_EQ(neighborhood_sum_measure(ScalarSet({0.0, d}), 1.0, 1.0, Scale(d)), 3 * d);
  EXPECT_THROW(neighborhood_sum_measure(ScalarSet({0.0}), 0.0, 1.0, Scale(d)), std::invalid_argument);
}
