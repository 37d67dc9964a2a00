#pragma once

// Scale-δ discretization primitives: scalar and planar point sets, grid
// covering numbers, (δ,t) non-concentration checks, (δ,s)-subset extraction
// and orthogonal projections.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace projlab {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Two points of a set that must be r-separated are closer than r.
class SeparationError : public std::invalid_argument {
 public:
  SeparationError(std::size_t first, std::size_t second, double distance, double required)
      : std::invalid_argument(describe(first, second, distance, required)),
        first_(first),
        second_(second),
        distance_(distance) {}

  std::size_t first() const { return first_; }
  std::size_t second() const { return second_; }
  double distance() const { return distance_; }

 private:
  static std::string describe(std::size_t i, std::size_t j, double d, double r) {
    std::ostringstream os;
    os.precision(17);
    os << "separation violation: points #" << i << " and #" << j << " are at distance " << d
       << " < " << r;
    return os.str();
  }

  std::size_t first_;
  std::size_t second_;
  double distance_;
};

/// A structural hypothesis (non-concentration, cardinality, ...) failed.
class HypothesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computed result violates an invariant it is supposed to satisfy.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// Scale
// ---------------------------------------------------------------------------

/// The discretization scale δ, 0 < δ ≤ 1/2.
class Scale {
 public:
  explicit Scale(double delta) : delta_(delta) {
    if (!(delta > 0.0) || delta > 0.5) {
      std::ostringstream os;
      os << "scale delta must lie in (0, 1/2], got " << delta;
      throw std::invalid_argument(os.str());
    }
  }

  /// δ = 2^(-j), j ≥ 1.
  static Scale dyadic(int j) {
    if (j < 1) throw std::invalid_argument("dyadic scale needs j >= 1");
    return Scale(std::ldexp(1.0, -j));
  }

  double value() const { return delta_; }

  /// j with δ = 2^(-j) exactly, if δ is dyadic.
  std::optional<int> dyadic_exponent() const {
    int e = 0;
    double m = std::frexp(delta_, &e);
    if (m != 0.5) return std::nullopt;
    return 1 - e;
  }

  /// √δ; exact when δ is an even power of two.
  Scale sqrt() const { return Scale(std::sqrt(delta_)); }

  friend bool operator==(const Scale&, const Scale&) = default;

 private:
  double delta_;
};

// ---------------------------------------------------------------------------
// Grid cells
// ---------------------------------------------------------------------------

/// Largest k with fl(k·step) ≤ v, i.e. the half-open cell [k·step, (k+1)·step)
/// holding v. Exact multiples fl(k·step) land in cell k.
inline std::int64_t grid_cell(double v, double step) {
  auto k = static_cast<std::int64_t>(std::floor(v / step));
  if (static_cast<double>(k) * step > v) {
    --k;
  } else if (static_cast<double>(k + 1) * step <= v) {
    ++k;
  }
  return k;
}

/// Floor division for negative cell indices (parent cell in a dyadic tree).
inline std::int64_t floor_div2(std::int64_t k) { return k >= 0 ? k / 2 : -((-k + 1) / 2); }

struct CellKey {
  std::int64_t ix = 0;
  std::int64_t iy = 0;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    auto h = static_cast<std::uint64_t>(k.ix) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(k.iy) + 0x632BE59BD9B4E019ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

// ---------------------------------------------------------------------------
// Sets
// ---------------------------------------------------------------------------

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend auto operator<=>(const Point2&, const Point2&) = default;
};

inline double distance(Point2 p, Point2 q) { return std::hypot(p.x - q.x, p.y - q.y); }

/// Finite set of reals, strictly increasing, inside an ambient interval [lo, hi].
class ScalarSet {
 public:
  ScalarSet() = default;

  /// Sorts and removes bitwise duplicates; the ambient interval is [min, max].
  explicit ScalarSet(std::vector<double> values) : values_(std::move(values)) {
    normalize();
    if (!values_.empty()) {
      lo_ = values_.front();
      hi_ = values_.back();
    }
  }

  ScalarSet(std::vector<double> values, double lo, double hi) : values_(std::move(values)), lo_(lo), hi_(hi) {
    if (!(lo <= hi)) throw std::invalid_argument("ScalarSet: ambient interval has lo > hi");
    normalize();
    if (!values_.empty() && (values_.front() < lo || values_.back() > hi)) {
      throw std::invalid_argument("ScalarSet: value outside the ambient interval");
    }
  }

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  friend bool operator==(const ScalarSet&, const ScalarSet&) = default;

 private:
  void normalize() {
    for (double v : values_) {
      if (!std::isfinite(v)) throw std::invalid_argument("ScalarSet: non-finite value");
    }
    std::sort(values_.begin(), values_.end());
    values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
  }

  std::vector<double> values_;
  double lo_ = 0.0;
  double hi_ = 0.0;
};

/// First pair (i, j), i < j, with |p_i − p_j| < r·(1 − slack). Grid bucketing,
/// so near-linear for separated inputs.
inline std::optional<std::pair<std::size_t, std::size_t>> find_close_pair(std::span<const Point2> pts, double r,
                                                                          double slack = 1e-9) {
  if (pts.size() < 2) return std::nullopt;
  const double limit = r * (1.0 - slack);
  std::unordered_map<CellKey, std::vector<std::size_t>, CellKeyHash> buckets;
  buckets.reserve(pts.size() * 2);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    buckets[{grid_cell(pts[i].x, r), grid_cell(pts[i].y, r)}].push_back(i);
  }
  std::optional<std::pair<std::size_t, std::size_t>> best;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const CellKey c{grid_cell(pts[i].x, r), grid_cell(pts[i].y, r)};
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = buckets.find({c.ix + dx, c.iy + dy});
        if (it == buckets.end()) continue;
        for (std::size_t j : it->second) {
          if (j <= i) continue;
          if (distance(pts[i], pts[j]) < limit) {
            std::pair<std::size_t, std::size_t> cand{i, j};
            if (!best || cand < *best) best = cand;
          }
        }
      }
    }
  }
  return best;
}

/// Finite planar point collection, optionally declared r-separated.
class PointSet2D {
 public:
  PointSet2D() = default;
  explicit PointSet2D(std::vector<Point2> points) : points_(std::move(points)) {}

  /// Declares the set r-separated; throws SeparationError naming the offending pair.
  PointSet2D(std::vector<Point2> points, double separation) : points_(std::move(points)) {
    declare_separation(separation);
  }

  void declare_separation(double r) {
    if (!(r > 0.0)) throw std::invalid_argument("separation must be positive");
    if (auto bad = find_close_pair(points_, r)) {
      throw SeparationError(bad->first, bad->second, distance(points_[bad->first], points_[bad->second]), r);
    }
    separation_ = r;
  }

  std::span<const Point2> points() const { return points_; }
  std::optional<double> separation() const { return separation_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Point2& operator[](std::size_t i) const { return points_[i]; }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

  friend bool operator==(const PointSet2D& a, const PointSet2D& b) { return a.points_ == b.points_; }

 private:
  std::vector<Point2> points_;
  std::optional<double> separation_;
};

inline std::vector<Point2> as_points(const ScalarSet& s) {
  std::vector<Point2> out;
  out.reserve(s.size());
  for (double v : s) out.push_back({v, 0.0});
  return out;
}

// ---------------------------------------------------------------------------
// Directions
// ---------------------------------------------------------------------------

/// Unit vector e = (cos θ, sin θ), θ ∈ [0, 2π).
class Direction {
 public:
  static Direction from_angle(double theta) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double t = std::fmod(theta, two_pi);
    if (t < 0.0) t += two_pi;
    if (t >= two_pi) t = 0.0;
    return Direction(t, std::cos(t), std::sin(t));
  }

  /// Normalizes (x, y); axis vectors keep exact components.
  static Direction from_components(double x, double y) {
    const double n = std::hypot(x, y);
    if (!(n > 0.0)) throw std::invalid_argument("direction from the zero vector");
    double c = x / n;
    double s = y / n;
    double t = std::atan2(s, c);
    if (t < 0.0) t += 2.0 * std::numbers::pi;
    return Direction(t, c, s);
  }

  double theta() const { return theta_; }
  double e1() const { return c_; }
  double e2() const { return s_; }
  double dot(Point2 p) const { return p.x * c_ + p.y * s_; }

  friend bool operator==(const Direction&, const Direction&) = default;

 private:
  Direction(double t, double c, double s) : theta_(t), c_(c), s_(s) {}
  double theta_;
  double c_;
  double s_;
};

using DirectionSet = std::vector<Direction>;

/// `count` directions with uniform spacing span/count starting at `start`.
inline DirectionSet direction_net(std::size_t count, double start = 0.0, double span = std::numbers::pi) {
  DirectionSet out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(Direction::from_angle(start + span * static_cast<double>(i) / static_cast<double>(count)));
  }
  return out;
}

/// Geodesic distance on S¹ between two directions.
inline double angular_distance(const Direction& a, const Direction& b) {
  double d = std::fabs(a.theta() - b.theta());
  return std::min(d, 2.0 * std::numbers::pi - d);
}

/// First pair (i, j) of directions closer than r on S¹, if any.
inline std::optional<std::pair<std::size_t, std::size_t>> find_close_directions(const DirectionSet& dirs, double r,
                                                                                double slack = 1e-9) {
  if (dirs.size() < 2) return std::nullopt;
  std::vector<std::size_t> order(dirs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dirs[a].theta() < dirs[b].theta() || (dirs[a].theta() == dirs[b].theta() && a < b);
  });
  const double limit = r * (1.0 - slack);
  for (std::size_t k = 0; k < order.size(); ++k) {
    std::size_t a = order[k];
    std::size_t b = order[(k + 1) % order.size()];
    if (a != b && angular_distance(dirs[a], dirs[b]) < limit) return std::pair{std::min(a, b), std::max(a, b)};
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Covering numbers
// ---------------------------------------------------------------------------

/// Number of occupied half-open δ-cells [kδ, (k+1)δ) among raw values.
inline std::size_t covering_number(std::span<const double> values, Scale delta) {
  std::vector<std::int64_t> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(grid_cell(v, delta.value()));
  std::sort(cells.begin(), cells.end());
  return static_cast<std::size_t>(std::unique(cells.begin(), cells.end()) - cells.begin());
}

/// N(S, δ) in the canonical grid convention; within a factor 2 of the optimal
/// cover by closed intervals of length δ.
inline std::size_t covering_number(const ScalarSet& s, Scale delta) { return covering_number(s.values(), delta); }

/// Number of occupied δ×δ half-open grid cells; within a factor 4 of the optimal disc cover.
inline std::size_t covering_number_2d(const PointSet2D& p, Scale delta) {
  std::vector<CellKey> cells;
  cells.reserve(p.size());
  for (const auto& q : p) cells.push_back({grid_cell(q.x, delta.value()), grid_cell(q.y, delta.value())});
  std::sort(cells.begin(), cells.end());
  return static_cast<std::size_t>(std::unique(cells.begin(), cells.end()) - cells.begin());
}

// ---------------------------------------------------------------------------
// Projections
// ---------------------------------------------------------------------------

/// π_e(p) for every point, in input order.
inline std::vector<double> projected_values(const PointSet2D& p, const Direction& e) {
  std::vector<double> out;
  out.reserve(p.size());
  for (const auto& q : p) out.push_back(e.dot(q));
  return out;
}

/// x + t·y for every point, in input order.
inline std::vector<double> param_projected_values(const PointSet2D& p, double t) {
  std::vector<double> out;
  out.reserve(p.size());
  for (const auto& q : p) out.push_back(q.x + t * q.y);
  return out;
}

inline ScalarSet project(const PointSet2D& p, const Direction& e) { return ScalarSet(projected_values(p, e)); }

inline ScalarSet project_param(const PointSet2D& p, double t) { return ScalarSet(param_projected_values(p, t)); }

// ---------------------------------------------------------------------------
// Non-concentration
// ---------------------------------------------------------------------------

struct NonConcentrationReport {
  double t = 0.0;
  double delta = 0.0;
  /// max over centers x ∈ P and scanned radii r of |P ∩ B(x,r)| / (r/δ)^t.
  double worst_ratio = 0.0;
  Point2 witness_center{};
  double witness_radius = 0.0;
  std::size_t witness_count = 0;
  /// Smallest C ≥ 0 with worst_ratio ≤ ln(1/δ)^C; +∞ when ln(1/δ) ≤ 1 and the ratio exceeds 1.
  double log_power_used = 0.0;
  std::size_t radii_scanned = 0;

  bool within(double threshold) const { return worst_ratio <= threshold; }
};

/// The scanned radii δ, 2δ, 4δ, … up to 1, plus r = 1 when δ is not dyadic.
inline std::vector<double> dyadic_radii(double delta) {
  std::vector<double> radii;
  for (double r = delta; r <= 1.0; r *= 2.0) radii.push_back(r);
  if (radii.empty() || radii.back() < 1.0) radii.push_back(1.0);
  return radii;
}

namespace detail {

inline double log_power(double ratio, double delta) {
  if (ratio <= 1.0) return 0.0;
  const double l = std::log(1.0 / delta);
  if (l <= 1.0) return std::numeric_limits<double>::infinity();
  return std::log(ratio) / std::log(l);
}

// Counts |P ∩ B(x, r)| (closed Euclidean ball) for every x ∈ P.
inline std::vector<std::size_t> ball_counts(std::span<const Point2> pts, double r) {
  std::unordered_map<CellKey, std::vector<std::size_t>, CellKeyHash> buckets;
  buckets.reserve(pts.size() * 2);
  std::vector<CellKey> keys(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    keys[i] = {grid_cell(pts[i].x, r), grid_cell(pts[i].y, r)};
    buckets[keys[i]].push_back(i);
  }
  const double r2 = r * r;
  std::vector<std::size_t> counts(pts.size(), 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::size_t c = 0;
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = buckets.find({keys[i].ix + dx, keys[i].iy + dy});
        if (it == buckets.end()) continue;
        for (std::size_t j : it->second) {
          const double ddx = pts[i].x - pts[j].x;
          const double ddy = pts[i].y - pts[j].y;
          if (ddx * ddx + ddy * ddy <= r2) ++c;
        }
      }
    }
    counts[i] = c;
  }
  return counts;
}

inline NonConcentrationReport check_points(std::span<const Point2> pts, double delta, double t) {
  if (!(t > 0.0) || t > 2.0) throw std::invalid_argument("non-concentration exponent t must lie in (0, 2]");
  if (auto bad = find_close_pair(pts, delta)) {
    throw SeparationError(bad->first, bad->second, distance(pts[bad->first], pts[bad->second]), delta);
  }
  NonConcentrationReport rep;
  rep.t = t;
  rep.delta = delta;
  if (pts.empty()) return rep;
  const auto radii = dyadic_radii(delta);
  rep.radii_scanned = radii.size();
  bool first = true;
  for (double r : radii) {
    const auto counts = ball_counts(pts, r);
    const double norm = std::pow(r / delta, t);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double ratio = static_cast<double>(counts[i]) / norm;
      if (first || ratio > rep.worst_ratio) {
        first = false;
        rep.worst_ratio = ratio;
        rep.witness_center = pts[i];
        rep.witness_radius = r;
        rep.witness_count = counts[i];
      }
    }
  }
  rep.log_power_used = log_power(rep.worst_ratio, delta);
  return rep;
}

}  // namespace detail

/// Scans every center x ∈ P and every dyadic radius r ∈ {δ, 2δ, …, 1} for the
/// worst ratio |P ∩ B(x,r)| / (r/δ)^t, B closed. Restricting to dyadic radii
/// loses at most a factor 2^t against all r ∈ [δ, 1]. Rejects input that is
/// not δ-separated (relative slack 1e-9) with a SeparationError.
inline NonConcentrationReport check_delta_t(const PointSet2D& p, Scale delta, double t) {
  return detail::check_points(p.points(), delta.value(), t);
}

inline NonConcentrationReport check_delta_t(const ScalarSet& s, Scale delta, double t) {
  const auto pts = as_points(s);
  return detail::check_points(pts, delta.value(), t);
}

// ---------------------------------------------------------------------------
// (δ,s)-subset extraction
// ---------------------------------------------------------------------------

/// Worst ratio any extracted (δ,s)-subset can show in check_delta_t. A closed
/// ball of radius r meets at most four dyadic cells of side ℓ ∈ [2r, 4r), each
/// capped at ⌈(ℓ/δ)^s⌉ points.
inline double extraction_ratio_bound(double s) { return 4.0 * (std::pow(4.0, s) + 1.0); }

/// Cardinality constant: |P| ≥ extraction_size_constant(s)·κ·δ^(−s) whenever κ
/// is the s-dimensional Hausdorff content (diameter convention) of the
/// δ-neighbourhood of K.
inline double extraction_size_constant(double s) { return std::pow(9.0 * std::numbers::sqrt2, -s); }

struct DeltaSubset {
  PointSet2D points;
  /// Dyadic s-content of the δ-net of K: min over dyadic covers (sides ≥ the
  /// finest level) of Σ side^s. Always |points| ≥ measured_content·δ^(−s).
  double measured_content = 0.0;
  /// Caller-supplied κ, or measured_content when none was given.
  double content = 0.0;
  /// Size of the greedy δ-net the tree was built on.
  std::size_t net_size = 0;
};

namespace detail {

/// Greedy maximal δ-separated subset, scanning points in lexicographic order.
inline std::vector<Point2> greedy_net(std::span<const Point2> pts, double delta) {
  std::vector<Point2> sorted(pts.begin(), pts.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  const double limit = delta * (1.0 - 1e-9);
  std::unordered_map<CellKey, std::vector<Point2>, CellKeyHash> kept;
  std::vector<Point2> out;
  for (const auto& p : sorted) {
    const CellKey c{grid_cell(p.x, delta), grid_cell(p.y, delta)};
    bool ok = true;
    for (std::int64_t dx = -1; dx <= 1 && ok; ++dx) {
      for (std::int64_t dy = -1; dy <= 1 && ok; ++dy) {
        auto it = kept.find({c.ix + dx, c.iy + dy});
        if (it == kept.end()) continue;
        for (const auto& q : it->second) {
          if (distance(p, q) < limit) {
            ok = false;
            break;
          }
        }
      }
    }
    if (ok) {
      kept[c].push_back(p);
      out.push_back(p);
    }
  }
  return out;
}

/// Dyadic quadtree over a point list: level j has cells of side 2^(−j), from
/// `top` (coarsest) down to `leaf`.
struct DyadicTree {
  struct Node {
    CellKey key;
    int level = 0;
    std::vector<std::size_t> children;  // node indices one level finer
    std::vector<std::size_t> points;    // leaf only: point indices
  };
  int top = 0;
  int leaf = 0;
  std::vector<Node> nodes;
  std::vector<std::size_t> roots;

  double side(int level) const { return std::ldexp(1.0, -level); }
};

inline DyadicTree build_tree(std::span<const Point2> pts, int top, int leaf) {
  DyadicTree tree;
  tree.top = top;
  tree.leaf = leaf;
  std::map<CellKey, std::size_t> current;
  const double h = std::ldexp(1.0, -leaf);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CellKey k{grid_cell(pts[i].x, h), grid_cell(pts[i].y, h)};
    auto [it, inserted] = current.emplace(k, tree.nodes.size());
    if (inserted) tree.nodes.push_back({k, leaf, {}, {}});
    tree.nodes[it->second].points.push_back(i);
  }
  for (int level = leaf - 1; level >= top; --level) {
    std::map<CellKey, std::size_t> parents;
    for (const auto& [k, idx] : current) {
      CellKey pk{floor_div2(k.ix), floor_div2(k.iy)};
      auto [it, inserted] = parents.emplace(pk, tree.nodes.size());
      if (inserted) tree.nodes.push_back({pk, level, {}, {}});
      tree.nodes[it->second].children.push_back(idx);
    }
    current = std::move(parents);
  }
  for (const auto& [k, idx] : current) tree.roots.push_back(idx);
  return tree;
}

inline int finest_level_at_most(double delta) {
  // smallest j with 2^(−j) ≤ δ
  int j = static_cast<int>(std::ceil(-std::log2(delta)));
  while (std::ldexp(1.0, -j) > delta) ++j;
  while (j > 0 && std::ldexp(1.0, -(j - 1)) <= delta) --j;
  return j;
}

}  // namespace detail

/// Extracts a (δ,s)-subset P ⊆ K by the top-down dyadic-tree greedy: first a
/// greedy δ-net of K, then for every dyadic cell Q a selection count
/// n(Q) = min(⌈(side(Q)/δ)^s⌉, Σ n(children)), then distribution of the
/// counts from the root down, maximal-mass children first (ties by cell index).
///
/// Guarantees: check_delta_t(P, δ, s).worst_ratio ≤ extraction_ratio_bound(s),
/// and |P| ≥ measured_content·δ^(−s) (the maximal saturated cells cover the net).
inline DeltaSubset extract_delta_s_subset(const PointSet2D& k, Scale delta, double s,
                                          std::optional<double> content = std::nullopt) {
  if (k.empty()) throw std::invalid_argument("extract_delta_s_subset: empty input set");
  if (!(s > 0.0) || s > 2.0) throw std::invalid_argument("extract_delta_s_subset: s must lie in (0, 2]");
  const double d = delta.value();
  const auto net = detail::greedy_net(k.points(), d);
  const int leaf = detail::finest_level_at_most(d);
  const int top = -1;
  auto tree = detail::build_tree(net, top, leaf);

  const std::size_t n_nodes = tree.nodes.size();
  std::vector<std::size_t> sel(n_nodes, 0);
  std::vector<double> best(n_nodes, 0.0);
  // Nodes were appended level by level from the leaves up, so a forward pass is bottom-up.
  for (std::size_t i = 0; i < n_nodes; ++i) {
    const auto& node = tree.nodes[i];
    const double side = tree.side(node.level);
    const double cap = std::ceil(std::pow(side / d, s) - 1e-12);
    const double side_s = std::pow(side, s);
    if (node.level == leaf) {
      sel[i] = std::min<std::size_t>(1, node.points.size());
      best[i] = side_s;
      continue;
    }
    std::size_t sum = 0;
    double content_sum = 0.0;
    for (std::size_t c : node.children) {
      sum += sel[c];
      content_sum += best[c];
    }
    sel[i] = static_cast<std::size_t>(std::min(cap, static_cast<double>(sum)));
    best[i] = std::min(side_s, content_sum);
  }

  std::vector<Point2> chosen;
  std::vector<std::pair<std::size_t, std::size_t>> stack;  // (node, target)
  for (auto r : tree.roots) stack.emplace_back(r, sel[r]);
  while (!stack.empty()) {
    auto [idx, target] = stack.back();
    stack.pop_back();
    const auto& node = tree.nodes[idx];
    if (target == 0) continue;
    if (node.level == leaf) {
      // Lexicographically smallest net point in the cell.
      chosen.push_back(net[*std::min_element(node.points.begin(), node.points.end(),
                                             [&](std::size_t a, std::size_t b) { return net[a] < net[b]; })]);
      continue;
    }
    std::vector<std::size_t> kids = node.children;
    std::stable_sort(kids.begin(), kids.end(), [&](std::size_t a, std::size_t b) {
      if (sel[a] != sel[b]) return sel[a] > sel[b];
      return tree.nodes[a].key < tree.nodes[b].key;
    });
    std::size_t remaining = target;
    for (std::size_t c : kids) {
      const std::size_t give = std::min(remaining, sel[c]);
      if (give > 0) stack.emplace_back(c, give);
      remaining -= give;
      if (remaining == 0) break;
    }
  }
  std::sort(chosen.begin(), chosen.end());

  double measured = 0.0;
  for (auto r : tree.roots) measured += best[r];

  DeltaSubset out;
  out.points = PointSet2D(std::move(chosen), d);
  out.measured_content = measured;
  out.content = content.value_or(measured);
  out.net_size = net.size();
  return out;
}

/// Dyadic s-content of the δ-net of K (the quantity extraction guarantees against).
inline double dyadic_content(const PointSet2D& k, Scale delta, double s) {
  return extract_delta_s_subset(k, delta, s).measured_content;
}

}  // namespace projlab
