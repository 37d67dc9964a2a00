#pragma once

// Multi-scale tools: Frostman weights on the dyadic tree, efficient dyadic
// covers, scale pigeonholing, the two-scale decomposition, energies, tube
// restriction, horizontal dilation and direction reparametrization.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "projlab/delta_core.hpp"
#include "projlab/incidence.hpp"
#include "projlab/product_construction.hpp"

namespace projlab {

namespace detail {

inline CellKey level_key(Point2 p, int level) {
  const double side = std::ldexp(1.0, -level);
  return {grid_cell(p.x, side), grid_cell(p.y, side)};
}

inline CellKey coarsen(CellKey k, int steps) { return {k.ix >> steps, k.iy >> steps}; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Frostman weights
// ---------------------------------------------------------------------------

struct WeightedPointSet {
  PointSet2D points;
  std::vector<double> weights;
  double total_mass = 0.0;
  double exponent = 1.0;
  /// Level of the leaf cells (side 2^(−finest_level) ≤ δ).
  int finest_level = 0;
  /// max over dyadic cells Q at levels finest_level..0 of μ(Q)/side(Q)^exponent.
  double certificate = 0.0;
};

/// max over dyadic cells at levels finest..0 of mass/side^exponent.
inline double frostman_certificate(const PointSet2D& p, const std::vector<double>& w, double exponent, int finest) {
  double worst = 0.0;
  std::vector<CellKey> keys(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) keys[i] = detail::level_key(p[i], finest);
  for (int level = finest; level >= 0; --level) {
    std::map<CellKey, double> mass;
    for (std::size_t i = 0; i < p.size(); ++i) mass[detail::coarsen(keys[i], finest - level)] += w[i];
    const double cap = std::pow(std::ldexp(1.0, -level), exponent);
    for (const auto& [k, m] : mass) worst = std::max(worst, m / cap);
  }
  return worst;
}

/// Bottom-up proportional capping: every leaf cell (side ≤ δ) starts with mass
/// side^exponent shared equally by its points; walking up to level 0, a cell
/// whose mass exceeds side^exponent is scaled down to it.
inline WeightedPointSet frostman_weights(const PointSet2D& p, double exponent, Scale delta) {
  if (p.empty()) throw std::invalid_argument("frostman_weights: empty point set");
  if (!(exponent > 0.0) || exponent > 2.0) throw std::invalid_argument("frostman_weights: exponent must lie in (0, 2]");
  WeightedPointSet out;
  out.points = p;
  out.exponent = exponent;
  const int finest = std::max(0, detail::finest_level_at_most(delta.value()));
  out.finest_level = finest;
  out.weights.assign(p.size(), 0.0);

  std::vector<CellKey> keys(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) keys[i] = detail::level_key(p[i], finest);
  {
    std::map<CellKey, std::vector<std::size_t>> leaves;
    for (std::size_t i = 0; i < p.size(); ++i) leaves[keys[i]].push_back(i);
    const double cap = std::pow(std::ldexp(1.0, -finest), exponent);
    for (const auto& [k, idx] : leaves) {
      for (auto i : idx) out.weights[i] = cap / static_cast<double>(idx.size());
    }
  }
  for (int level = finest - 1; level >= 0; --level) {
    std::map<CellKey, std::vector<std::size_t>> cells;
    for (std::size_t i = 0; i < p.size(); ++i) cells[detail::coarsen(keys[i], finest - level)].push_back(i);
    const double cap = std::pow(std::ldexp(1.0, -level), exponent);
    for (const auto& [k, idx] : cells) {
      double m = 0.0;
      for (auto i : idx) m += out.weights[i];
      if (m > cap) {
        const double f = cap / m;
        for (auto i : idx) out.weights[i] *= f;
      }
    }
  }
  for (double w : out.weights) out.total_mass += w;
  out.certificate = frostman_certificate(p, out.weights, exponent, finest);
  return out;
}

// ---------------------------------------------------------------------------
// Efficient dyadic cover and scale pigeonholing
// ---------------------------------------------------------------------------

struct CoverCell {
  int level = 0;
  std::int64_t ix = 0;
  std::int64_t iy = 0;

  double side() const { return std::ldexp(1.0, -level); }
  double diameter() const { return side() * std::numbers::sqrt2; }
  bool contains(Point2 p) const {
    const auto k = detail::level_key(p, level);
    return k.ix == ix && k.iy == iy;
  }
  friend auto operator<=>(const CoverCell&, const CoverCell&) = default;
};

struct DyadicCover {
  /// Sorted by (level, ix, iy).
  std::vector<CoverCell> cells;
  double diam_sum = 0.0;
  /// Coarsest admissible level: the smallest j with 2^(−j)·√2 ≤ δ0.
  int top_level = 0;
};

/// Smallest j ≥ 0 with 2^(−j)·√2 ≤ d.
inline int level_with_diameter_at_most(double d) {
  int j = 0;
  while (std::ldexp(1.0, -j) * std::numbers::sqrt2 > d) ++j;
  return j;
}

/// Dyadic cover minimizing Σ diam among dyadic cells of diameter ≤ δ0 and at
/// least the leaf diameter (≤ resolution). Exact bottom-up DP: a cell is used
/// whole when its diameter is at most the best cost of covering its children.
inline DyadicCover efficient_cover(const PointSet2D& p, Scale delta0, std::optional<double> resolution = std::nullopt) {
  DyadicCover out;
  const int top = level_with_diameter_at_most(delta0.value());
  const int leaf = std::max(top, level_with_diameter_at_most(resolution.value_or(delta0.value())));
  out.top_level = top;
  if (p.empty()) return out;

  struct Best {
    double cost = 0.0;
    std::vector<CoverCell> cells;
  };
  std::map<CellKey, Best> current;
  for (const auto& q : p) {
    const auto k = detail::level_key(q, leaf);
    if (current.count(k)) continue;
    CoverCell c{leaf, k.ix, k.iy};
    current[k] = {c.diameter(), {c}};
  }
  for (int level = leaf - 1; level >= top; --level) {
    std::map<CellKey, Best> parents;
    for (auto& [k, b] : current) {
      auto& par = parents[detail::coarsen(k, 1)];
      par.cost += b.cost;
      par.cells.insert(par.cells.end(), b.cells.begin(), b.cells.end());
    }
    const double diam = std::ldexp(1.0, -level) * std::numbers::sqrt2;
    for (auto& [k, b] : parents) {
      if (diam <= b.cost) b = {diam, {CoverCell{level, k.ix, k.iy}}};
    }
    current = std::move(parents);
  }
  for (auto& [k, b] : current) out.cells.insert(out.cells.end(), b.cells.begin(), b.cells.end());
  std::sort(out.cells.begin(), out.cells.end());
  for (const auto& c : out.cells) out.diam_sum += c.diameter();
  return out;
}

struct ScaleChoice {
  int level = 0;
  /// 2^(−2·level).
  double delta = 0.0;
  /// Mass carried by the cover cells of each level, from top_level on.
  std::vector<double> level_mass;
};

/// Smallest index k with level_mass[k] ≥ (6/π²)·total/(k+1)². Such k always
/// exists because Σ 1/(k+1)² = π²/6.
inline std::size_t pigeonhole_level(const std::vector<double>& level_mass) {
  double total = 0.0;
  for (double m : level_mass) total += m;
  if (!(total > 0.0)) throw std::invalid_argument("pigeonhole_level: no mass");
  const double c = 6.0 / (std::numbers::pi * std::numbers::pi);
  for (std::size_t k = 0; k < level_mass.size(); ++k) {
    const double q = c * total / static_cast<double>((k + 1) * (k + 1));
    if (level_mass[k] >= q * (1.0 - 1e-12)) return k;
  }
  throw InvariantError("pigeonhole_level: no level met its quota");
}

/// Mass each cover cell receives from μ; points outside the cover carry none.
inline std::vector<double> cover_cell_mass(const DyadicCover& cover, const WeightedPointSet& mu) {
  std::map<CoverCell, std::size_t> index;
  for (std::size_t i = 0; i < cover.cells.size(); ++i) index[cover.cells[i]] = i;
  std::vector<int> levels;
  for (const auto& c : cover.cells) levels.push_back(c.level);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  std::vector<double> mass(cover.cells.size(), 0.0);
  for (std::size_t i = 0; i < mu.points.size(); ++i) {
    for (int level : levels) {
      const auto k = detail::level_key(mu.points[i], level);
      auto it = index.find({level, k.ix, k.iy});
      if (it != index.end()) {
        mass[it->second] += mu.weights[i];
        break;
      }
    }
  }
  return mass;
}

inline ScaleChoice pick_scale(const DyadicCover& cover, const WeightedPointSet& mu) {
  if (cover.cells.empty()) throw std::invalid_argument("pick_scale: empty cover");
  const auto mass = cover_cell_mass(cover, mu);
  int bottom = cover.top_level;
  for (const auto& c : cover.cells) bottom = std::max(bottom, c.level);
  ScaleChoice out;
  out.level_mass.assign(static_cast<std::size_t>(bottom - cover.top_level + 1), 0.0);
  for (std::size_t i = 0; i < cover.cells.size(); ++i) {
    out.level_mass[static_cast<std::size_t>(cover.cells[i].level - cover.top_level)] += mass[i];
  }
  out.level = cover.top_level + static_cast<int>(pigeonhole_level(out.level_mass));
  out.delta = std::ldexp(1.0, -2 * out.level);
  return out;
}

// ---------------------------------------------------------------------------
// Two-scale decomposition
// ---------------------------------------------------------------------------

struct TwoScaleOptions {
  /// Good cells carry mass ≥ mass_factor·√δ/ln²(1/δ).
  double mass_factor = 0.25;
  double ratio_threshold = 8.0;
};

struct GoodBall {
  CellKey key;
  int level = 0;
  Point2 center;
  double mass = 0.0;
};

struct TwoScaleStructure {
  double delta = 0.0;
  double mass_threshold = 0.0;
  std::vector<GoodBall> balls;
  /// fine_sets[i] is P_B of balls[i]; anchors[i] its lexicographically smallest point.
  std::vector<PointSet2D> fine_sets;
  PointSet2D anchors;
  PointSet2D fine;
  double coarse_ratio = 0.0;
  double fine_ratio = 0.0;
  double ratio_threshold = 0.0;
  /// Points removed from the fine set to meet the ratio threshold.
  std::size_t pruned = 0;
};

namespace detail {

inline PointSet2D concat(const std::vector<PointSet2D>& sets, double separation) {
  std::vector<Point2> all;
  for (const auto& s : sets) all.insert(all.end(), s.begin(), s.end());
  return PointSet2D(std::move(all), separation);
}

}  // namespace detail

/// Requires δ = 4^(−j). Good cells are dyadic cells of side √δ whose μ-mass
/// reaches the threshold; they are thinned greedily by mass (ties by cell
/// index) so that no two kept cells touch, which leaves them √δ-separated.
/// Each kept cell contributes P_B = extract_delta_s_subset(K ∩ cell, δ, 1).
inline TwoScaleStructure two_scale_decomposition(const PointSet2D& k, const WeightedPointSet& mu, Scale delta,
                                                 TwoScaleOptions opt = {}) {
  const auto j = delta.dyadic_exponent();
  if (!j || *j % 2 != 0) throw std::invalid_argument("two_scale_decomposition: delta must be 4^(-j)");
  if (mu.points.size() != mu.weights.size()) throw std::invalid_argument("two_scale_decomposition: malformed weights");
  const double d = delta.value();
  const int level = *j / 2;
  const double side = std::ldexp(1.0, -level);

  TwoScaleStructure out;
  out.delta = d;
  out.ratio_threshold = opt.ratio_threshold;
  const double l = std::log(1.0 / d);
  out.mass_threshold = opt.mass_factor * side / (l * l);

  std::map<CellKey, double> mass;
  for (std::size_t i = 0; i < mu.points.size(); ++i) mass[detail::level_key(mu.points[i], level)] += mu.weights[i];
  std::vector<std::pair<CellKey, double>> good;
  for (const auto& [key, m] : mass) {
    if (m >= out.mass_threshold) good.emplace_back(key, m);
  }
  std::stable_sort(good.begin(), good.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<CellKey> kept;
  std::vector<double> kept_mass;
  for (const auto& [key, m] : good) {
    bool touches = false;
    for (const auto& other : kept) {
      if (std::llabs(other.ix - key.ix) <= 1 && std::llabs(other.iy - key.iy) <= 1) {
        touches = true;
        break;
      }
    }
    if (!touches) {
      kept.push_back(key);
      kept_mass.push_back(m);
    }
  }
  if (kept.size() < 2) {
    std::ostringstream os;
    os << "two_scale_decomposition: found " << kept.size() << " good ball(s) at delta=" << d
       << "; need at least 2 (try a larger delta)";
    throw HypothesisError(os.str());
  }

  std::vector<std::size_t> order(kept.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return kept[a] < kept[b]; });

  std::vector<Point2> anchor_pts;
  for (auto i : order) {
    const auto& key = kept[i];
    std::vector<Point2> inside;
    for (const auto& q : k) {
      if (detail::level_key(q, level) == key) inside.push_back(q);
    }
    if (inside.empty()) continue;
    auto sub = extract_delta_s_subset(PointSet2D(std::move(inside)), delta, 1.0);
    GoodBall ball;
    ball.key = key;
    ball.level = level;
    ball.center = {(static_cast<double>(key.ix) + 0.5) * side, (static_cast<double>(key.iy) + 0.5) * side};
    ball.mass = kept_mass[i];
    out.balls.push_back(ball);
    anchor_pts.push_back(sub.points[0]);
    out.fine_sets.push_back(std::move(sub.points));
  }
  if (out.balls.size() < 2) throw HypothesisError("two_scale_decomposition: good balls hold fewer than 2 points of K; try a larger delta");

  out.anchors = PointSet2D(anchor_pts, side);
  out.coarse_ratio = check_delta_t(out.anchors, Scale(side), 1.0).worst_ratio;
  out.fine = detail::concat(out.fine_sets, d);
  auto fine_report = check_delta_t(out.fine, delta, 1.0);
  while (fine_report.worst_ratio > opt.ratio_threshold) {
    // Drop the last non-anchor point of the witness ball, lexicographically.
    const Point2 c = fine_report.witness_center;
    const double r = fine_report.witness_radius;
    std::optional<std::pair<std::size_t, std::size_t>> victim;
    for (std::size_t b = 0; b < out.fine_sets.size(); ++b) {
      const auto pts = out.fine_sets[b].points();
      for (std::size_t t = 1; t < pts.size(); ++t) {
        if (distance(pts[t], c) <= r) {
          if (!victim || out.fine_sets[victim->first][victim->second] < pts[t]) victim = std::pair{b, t};
        }
      }
    }
    if (!victim) break;
    auto pts = std::vector<Point2>(out.fine_sets[victim->first].begin(), out.fine_sets[victim->first].end());
    pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(victim->second));
    out.fine_sets[victim->first] = PointSet2D(std::move(pts), d);
    ++out.pruned;
    out.fine = detail::concat(out.fine_sets, d);
    fine_report = check_delta_t(out.fine, delta, 1.0);
  }
  out.fine_ratio = fine_report.worst_ratio;
  if (out.fine_ratio > opt.ratio_threshold || out.coarse_ratio > opt.ratio_threshold) {
    std::ostringstream os;
    os << "two_scale_decomposition: ratios fine=" << out.fine_ratio << " coarse=" << out.coarse_ratio
       << " exceed threshold " << opt.ratio_threshold;
    throw InvariantError(os.str());
  }
  return out;
}

struct TubeRestriction {
  PointSet2D points;
  /// Indices of the balls whose anchor lies in the tube.
  std::vector<std::size_t> balls;
  bool empty_warning = false;
};

/// P_T: the union of the fine sets of the balls whose anchor lies in T.
inline TubeRestriction restrict_to_tube(const TwoScaleStructure& ts, const Tube& t) {
  const double side = std::sqrt(ts.delta);
  if (std::fabs(t.width - side) > 1e-12 * side) throw std::invalid_argument("restrict_to_tube: tube width must be sqrt(delta)");
  TubeRestriction out;
  std::vector<Point2> pts;
  for (std::size_t i = 0; i < ts.balls.size(); ++i) {
    if (t.contains(ts.anchors[i])) {
      out.balls.push_back(i);
      pts.insert(pts.end(), ts.fine_sets[i].begin(), ts.fine_sets[i].end());
    }
  }
  out.empty_warning = out.balls.empty();
  out.points = PointSet2D(std::move(pts));
  return out;
}

// ---------------------------------------------------------------------------
// Energies
// ---------------------------------------------------------------------------

/// Σ_{p≠q} |p − q|^(−α) over ordered pairs.
inline double energy(const PointSet2D& p, double alpha) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (i == j) continue;
      const double d = distance(p[i], p[j]);
      if (d == 0.0) throw SeparationError(std::min(i, j), std::max(i, j), 0.0, 0.0);
      sum += std::pow(d, -alpha);
    }
  }
  return sum;
}

inline double energy(const ScalarSet& s, double alpha) { return energy(PointSet2D(as_points(s)), alpha); }

/// Σ_e ν(e) Σ_{x≠y} μ(x)μ(y) / max(|π_e(x) − π_e(y)|, δ)^s.
inline double directional_energy(const WeightedPointSet& mu, const DirectionSet& dirs, const std::vector<double>& nu,
                                 double s, Scale delta) {
  if (dirs.size() != nu.size()) throw std::invalid_argument("directional_energy: one weight per direction required");
  const double floor_power = std::pow(delta.value(), -s);
  double total = 0.0;
  for (std::size_t e = 0; e < dirs.size(); ++e) {
    const auto v = projected_values(mu.points, dirs[e]);
    double inner = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      for (std::size_t j = 0; j < v.size(); ++j) {
        if (i == j) continue;
        const double d = std::fabs(v[i] - v[j]);
        inner += mu.weights[i] * mu.weights[j] * (d > delta.value() ? std::pow(d, -s) : floor_power);
      }
    }
    total += nu[e] * inner;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Rescaling
// ---------------------------------------------------------------------------

/// (x, y) ↦ (δ^(−1/2)x, y) on every fiber; the result lives at scale √δ.
/// Exact when δ is an even power of two.
inline ProductLikeSet horizontal_dilate(const ProductLikeSet& f, Scale delta) {
  const double k = 1.0 / std::sqrt(delta.value());
  std::vector<ScalarSet> fibers;
  fibers.reserve(f.fibers.size());
  for (const auto& a : f.fibers) {
    std::vector<double> v;
    v.reserve(a.size());
    for (double x : a) v.push_back(k * x);
    fibers.emplace_back(std::move(v));
  }
  return assemble_product(f.base, std::move(fibers), Scale(std::sqrt(delta.value())), f.s, f.tau);
}

/// {tan(θ_e − θ_center)} for directions within 2√δ of the center.
inline ScalarSet reparam_directions(const DirectionSet& dirs, const Direction& center, Scale delta) {
  const double window = 2.0 * std::sqrt(delta.value());
  std::vector<double> out;
  out.reserve(dirs.size());
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    double d = dirs[i].theta() - center.theta();
    if (d > std::numbers::pi) d -= 2.0 * std::numbers::pi;
    if (d <= -std::numbers::pi) d += 2.0 * std::numbers::pi;
    if (std::fabs(d) > window * (1.0 + 1e-12) || std::cos(d) < 0.5) {
      std::ostringstream os;
      os << "reparam_directions: direction #" << i << " is " << d << " rad from the center (window " << window << ")";
      throw std::invalid_argument(os.str());
    }
    out.push_back(std::tan(d));
  }
  return ScalarSet(std::move(out));
}

struct RescaledIdentity {
  std::size_t lhs = 0;
  std::size_t rhs = 0;
  bool equal() const { return lhs == rhs; }
};

/// lhs = N(π_{t'}(F), √δ) with F the horizontal dilate of F' and t' = δ^(−1/2)t;
/// rhs = N(π_t(F'), δ).
inline RescaledIdentity rescaled_projection_identity(const ProductLikeSet& f_prime, double t, Scale delta) {
  const double root = std::sqrt(delta.value());
  if (t < 0.0 || t > root * (1.0 + 1e-12)) throw std::invalid_argument("rescaled_projection_identity: t outside [0, sqrt(delta)]");
  const auto f = horizontal_dilate(f_prime, delta);
  RescaledIdentity out;
  out.lhs = covering_number(param_projected_values(f.points(), t / root), Scale(root));
  out.rhs = covering_number(param_projected_values(f_prime.points(), t), delta);
  return out;
}

/// δ·N(c·D² + c_b·D², δ).
inline double neighborhood_sum_measure(const ScalarSet& d2, double c, double c_b, Scale delta) {
  if (c == 0.0 || c_b == 0.0) throw std::invalid_argument("neighborhood_sum_measure: c and c_b must be nonzero");
  std::vector<double> sums;
  sums.reserve(d2.size() * d2.size());
  for (double x : d2) {
    for (double y : d2) sums.push_back(c * x + c_b * y);
  }
  return delta.value() * static_cast<double>(covering_number(sums, delta));
}

}  // namespace projlab
