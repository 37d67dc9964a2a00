#pragma once

// Tube covers, δ-close projected pairs and the direction double count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "projlab/delta_core.hpp"

namespace projlab {

/// Width-δ slab {p : π_e(p) ∈ [offset, offset + width)} with offset = cell·width.
struct Tube {
  Direction direction = Direction::from_angle(0.0);
  std::int64_t cell = 0;
  double offset = 0.0;
  double width = 0.0;

  bool contains(Point2 p) const { return grid_cell(direction.dot(p), width) == cell; }
};

/// The occupied projected δ-cells of a point set in one direction.
struct TubeFamily {
  Direction direction = Direction::from_angle(0.0);
  double width = 0.0;
  /// Sorted by cell index.
  std::vector<Tube> tubes;
  /// membership[i] = index into `tubes` of the tube holding point i.
  std::vector<std::size_t> membership;

  std::size_t size() const { return tubes.size(); }
};

inline TubeFamily tube_cover(const PointSet2D& p, const Direction& e, Scale delta) {
  const double d = delta.value();
  TubeFamily fam;
  fam.direction = e;
  fam.width = d;
  std::vector<std::int64_t> cells;
  cells.reserve(p.size());
  for (const auto& q : p) cells.push_back(grid_cell(e.dot(q), d));
  std::vector<std::int64_t> sorted = cells;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  fam.tubes.reserve(sorted.size());
  for (auto k : sorted) fam.tubes.push_back({e, k, static_cast<double>(k) * d, d});
  fam.membership.reserve(cells.size());
  for (auto k : cells) {
    fam.membership.push_back(
        static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), k) - sorted.begin()));
  }
  return fam;
}

/// Ordered pairs (i, j), i ≠ j, of entries with |v_i − v_j| ≤ δ. Sort and sweep.
inline std::uint64_t close_pairs(std::vector<double> values, double delta) {
  std::sort(values.begin(), values.end());
  std::uint64_t unordered = 0;
  std::size_t hi = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (hi < i + 1) hi = i + 1;
    while (hi < values.size() && values[hi] - values[i] <= delta) ++hi;
    unordered += hi - i - 1;
  }
  return 2 * unordered;
}

/// Ordered pairs (p, q), p ≠ q as indices, with |π_e(p) − π_e(q)| ≤ δ.
inline std::uint64_t close_pairs(const PointSet2D& p, const Direction& e, Scale delta) {
  return close_pairs(projected_values(p, e), delta.value());
}

struct CauchySchwarzCheck {
  /// |P|²/M − |P|, M = N(π_e(P), δ).
  double bound = 0.0;
  std::uint64_t actual = 0;
  std::size_t covering = 0;
  bool holds = true;
};

/// Pairs sharing a δ-cell are δ-close, and Σ_T |P ∩ T|² ≥ |P|²/M, so
/// close_pairs ≥ |P|²/M − |P|. The inequality is checked, not assumed.
inline CauchySchwarzCheck cauchy_schwarz_lower_bound(const PointSet2D& p, const Direction& e, Scale delta) {
  auto values = projected_values(p, e);
  CauchySchwarzCheck out;
  out.covering = covering_number(values, delta);
  const double n = static_cast<double>(p.size());
  out.bound = out.covering == 0 ? 0.0 : n * n / static_cast<double>(out.covering) - n;
  out.actual = close_pairs(std::move(values), delta.value());
  out.holds = static_cast<double>(out.actual) >= out.bound;
  return out;
}

struct DirectionSumBound {
  /// Σ_{e ∈ E} close_pairs(P, e, δ).
  std::uint64_t lhs = 0;
  /// δ^(−2)·ln²(1/δ).
  double normalizer = 0.0;
  /// lhs / normalizer: the measured constant.
  double ratio = 0.0;
  /// C·normalizer for a caller-calibrated C, else the measured lhs.
  double rhs = 0.0;
  bool holds = true;
  std::vector<std::uint64_t> per_direction;
};

/// Rejects E that is not δ-separated on S¹.
inline void require_separated_directions(const DirectionSet& dirs, Scale delta) {
  if (auto bad = find_close_directions(dirs, delta.value())) {
    throw SeparationError(bad->first, bad->second, angular_distance(dirs[bad->first], dirs[bad->second]),
                          delta.value());
  }
}

inline DirectionSumBound direction_sum_upper_bound(const PointSet2D& p, const DirectionSet& dirs, Scale delta,
                                                   std::optional<double> calibrated_constant = std::nullopt) {
  require_separated_directions(dirs, delta);
  DirectionSumBound out;
  out.per_direction.reserve(dirs.size());
  for (const auto& e : dirs) {
    const auto c = close_pairs(p, e, delta);
    out.per_direction.push_back(c);
    out.lhs += c;
  }
  const double l = std::log(1.0 / delta.value());
  out.normalizer = l * l / (delta.value() * delta.value());
  out.ratio = static_cast<double>(out.lhs) / out.normalizer;
  out.rhs = calibrated_constant ? *calibrated_constant * out.normalizer : static_cast<double>(out.lhs);
  out.holds = static_cast<double>(out.lhs) <= out.rhs;
  return out;
}

/// Directions e ∈ E with |π_e(p − q)| ≤ δ.
inline std::size_t arc_direction_count(Point2 p, Point2 q, const DirectionSet& dirs, Scale delta) {
  const Point2 diff{p.x - q.x, p.y - q.y};
  std::size_t n = 0;
  for (const auto& e : dirs) {
    if (std::fabs(e.dot(diff)) <= delta.value()) ++n;
  }
  return n;
}

/// Upper bound for arc_direction_count over a δ-separated E: the admissible
/// directions form two antipodal arcs of length 2·asin(min(1, δ/d)), each
/// holding at most length/δ + 1 directions.
inline double arc_count_bound(double d, Scale delta) {
  const double half = std::asin(std::min(1.0, delta.value() / d));
  return 2.0 * (2.0 * half / delta.value() + 1.0);
}

struct SweepRow {
  double theta = 0.0;
  std::size_t n_projection = 0;
  std::uint64_t close_pairs = 0;
};

/// One row per direction, in input order. `threads` > 1 splits directions
/// across workers; each row is written to its own slot, so the result does
/// not depend on the thread count.
inline std::vector<SweepRow> projection_sweep(const PointSet2D& p, const DirectionSet& dirs, Scale delta,
                                              unsigned threads = 1) {
  std::vector<SweepRow> rows(dirs.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto values = projected_values(p, dirs[i]);
      rows[i].theta = dirs[i].theta();
      rows[i].n_projection = covering_number(values, delta);
      rows[i].close_pairs = close_pairs(std::move(values), delta.value());
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, dirs.size()))));
  if (threads == 1) {
    work(0, dirs.size());
    return rows;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (dirs.size() + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t b = std::min(dirs.size(), t * chunk);
    const std::size_t e = std::min(dirs.size(), b + chunk);
    pool.emplace_back(work, b, e);
  }
  for (auto& th : pool) th.join();
  return rows;
}

struct KaufmanResult {
  std::size_t index = 0;
  Direction direction = Direction::from_angle(0.0);
  std::size_t n = 0;
  /// Directions actually projected (fewer than |E| after an early exit).
  std::size_t evaluated = 0;
  /// |E| ≥ δ^(−s).
  bool enough_directions = true;
  /// check_delta_t(P, δ, 1).worst_ratio.
  double one_set_ratio = 0.0;
};

/// argmax_{e ∈ E} N(π_e(P), δ), lowest index on ties. With early_exit the
/// scan stops once N = |P|, which no direction can beat.
inline KaufmanResult kaufman_witness(const PointSet2D& p, const DirectionSet& dirs, Scale delta, double s,
                                     bool early_exit = true) {
  if (dirs.empty()) throw std::invalid_argument("kaufman_witness: empty direction set");
  KaufmanResult out;
  out.enough_directions = static_cast<double>(dirs.size()) >= std::pow(delta.value(), -s) - 1e-9;
  out.one_set_ratio = p.empty() ? 0.0 : check_delta_t(p, delta, 1.0).worst_ratio;
  bool first = true;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const auto n = covering_number(projected_values(p, dirs[i]), delta);
    ++out.evaluated;
    if (first || n > out.n) {
      first = false;
      out.index = i;
      out.direction = dirs[i];
      out.n = n;
    }
    if (early_exit && out.n == p.size()) break;
  }
  return out;
}

}  // namespace projlab
