#pragma once

// Brute-force reference computations used to check the library. They share
// no code with it beyond the plain value types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "projlab/delta_core.hpp"

namespace oracle {

/// Portable uniform doubles in [0, 1) from a fixed-seed mt19937_64.
class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : gen_(seed) {}
  double next() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }

 private:
  std::mt19937_64 gen_;
};

inline std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  Uniform u(seed);
  std::vector<double> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * u.next());
  return v;
}

inline std::vector<projlab::Point2> random_points(std::size_t n, std::uint64_t seed) {
  Uniform u(seed);
  std::vector<projlab::Point2> p;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = u.next();
    p.push_back({x, u.next()});
  }
  return p;
}

/// Minimum number of closed intervals of length δ covering v: start an
/// interval at the leftmost uncovered value, repeat.
inline std::size_t greedy_interval_cover(std::vector<double> v, double delta) {
  std::sort(v.begin(), v.end());
  std::size_t count = 0;
  double reach = -INFINITY;
  for (double x : v) {
    if (x > reach) {
      ++count;
      reach = x + delta;
    }
  }
  return count;
}

/// Occupied cells of [kδ, (k+1)δ): k is found by stepping from the rounded
/// quotient until kδ ≤ x < (k+1)δ holds in floating point.
inline std::size_t grid_cells(const std::vector<double>& v, double delta) {
  std::set<long long> cells;
  for (double x : v) {
    long long k = std::llround(x / delta);
    while (static_cast<double>(k) * delta > x) --k;
    while (static_cast<double>(k + 1) * delta <= x) ++k;
    cells.insert(k);
  }
  return cells.size();
}

/// Ordered pairs i ≠ j with |⟨p_i − p_j, e⟩|... evaluated as |π(p_i) − π(p_j)| ≤ δ.
inline std::uint64_t close_pairs(const std::vector<projlab::Point2>& p, double c, double s, double delta) {
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (i == j) continue;
      const double a = p[i].x * c + p[i].y * s;
      const double b = p[j].x * c + p[j].y * s;
      if (std::fabs(a - b) <= delta) ++n;
    }
  }
  return n;
}

/// max over x ∈ P and r ∈ {δ, 2δ, …} ∪ {1} of |P ∩ B(x, r)| / (r/δ)^t, all pairs examined.
inline double worst_ball_ratio(const std::vector<projlab::Point2>& p, double delta, double t) {
  std::vector<double> radii;
  for (double r = delta; r <= 1.0; r *= 2.0) radii.push_back(r);
  if (radii.back() < 1.0) radii.push_back(1.0);
  double worst = 0.0;
  for (double r : radii) {
    for (const auto& x : p) {
      std::size_t c = 0;
      for (const auto& y : p) {
        const double dx = x.x - y.x;
        const double dy = x.y - y.y;
        if (dx * dx + dy * dy <= r * r) ++c;
      }
      worst = std::max(worst, static_cast<double>(c) / std::pow(r / delta, t));
    }
  }
  return worst;
}

inline std::vector<projlab::Point2> line_points(const std::vector<double>& v) {
  std::vector<projlab::Point2> p;
  for (double x : v) p.push_back({x, 0.0});
  return p;
}

/// Left endpoints of the Cantor iterate by self-similarity:
/// C_d = c·C_{d−1} ∪ (1 − c + c·C_{d−1}).
inline std::vector<double> cantor(double c, int depth) {
  if (depth == 0) return {0.0};
  std::vector<double> prev = cantor(c, depth - 1);
  std::vector<double> out;
  for (double x : prev) out.push_back(c * x);
  for (double x : prev) out.push_back(1.0 - c + c * x);
  std::sort(out.begin(), out.end());
  return out;
}

inline std::set<long long> sumset(const std::vector<long long>& a, const std::vector<long long>& b, int sign = 1) {
  std::set<long long> s;
  for (auto x : a) {
    for (auto y : b) s.insert(x + sign * y);
  }
  return s;
}

/// The members of {0..9} selected by a 10-bit mask.
inline std::vector<long long> subset_of_ten(unsigned mask) {
  std::vector<long long> v;
  for (int i = 0; i < 10; ++i) {
    if (mask & (1u << i)) v.push_back(i);
  }
  return v;
}

}  // namespace oracle
