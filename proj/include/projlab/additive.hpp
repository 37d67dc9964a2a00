#pragma once

// Arithmetic on δℤ: snapping, sumsets, Plünnecke–Ruzsa checks and a
// constructive Balog–Szemerédi–Gowers extractor. Everything runs on integer
// grid coordinates; reals appear only at the boundary.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "projlab/delta_core.hpp"

namespace projlab {

/// Largest k with fl(k·δ) ≤ x.
inline std::int64_t snap(double x, Scale delta) { return grid_cell(x, delta.value()); }

/// Finite subset of δℤ stored as sorted distinct integers k (representing kδ).
class GridSet {
 public:
  GridSet() = default;

  GridSet(double step, std::vector<std::int64_t> members) : step_(step), members_(std::move(members)) {
    if (!(step > 0.0)) throw std::invalid_argument("GridSet: step must be positive");
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  }

  /// [A]_δ: the snapped image of a real set.
  static GridSet from_reals(const ScalarSet& s, Scale delta) {
    std::vector<std::int64_t> ks;
    ks.reserve(s.size());
    for (double v : s) ks.push_back(snap(v, delta));
    return GridSet(delta.value(), std::move(ks));
  }

  double step() const { return step_; }
  const std::vector<std::int64_t>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  std::int64_t operator[](std::size_t i) const { return members_[i]; }
  auto begin() const { return members_.begin(); }
  auto end() const { return members_.end(); }
  bool contains(std::int64_t k) const { return std::binary_search(members_.begin(), members_.end(), k); }

  ScalarSet to_reals() const {
    std::vector<double> v;
    v.reserve(members_.size());
    for (auto k : members_) v.push_back(static_cast<double>(k) * step_);
    return ScalarSet(std::move(v));
  }

  friend bool operator==(const GridSet&, const GridSet&) = default;

 private:
  double step_ = 1.0;
  std::vector<std::int64_t> members_;
};

/// {0, 1, …, n−1}·step.
inline GridSet grid_interval(std::int64_t n, double step = 1.0) {
  std::vector<std::int64_t> m;
  for (std::int64_t k = 0; k < n; ++k) m.push_back(k);
  return GridSet(step, std::move(m));
}

enum class SumSign { plus, minus };

inline GridSet sumset(const GridSet& a, const GridSet& b, SumSign sign = SumSign::plus) {
  if (a.step() != b.step()) throw std::invalid_argument("sumset: mismatched grid steps");
  std::vector<std::int64_t> out;
  out.reserve(a.size() * b.size());
  for (auto x : a) {
    for (auto y : b) out.push_back(sign == SumSign::plus ? x + y : x - y);
  }
  return GridSet(a.step(), std::move(out));
}

/// mB − nB: the m-fold sumset of B minus the n-fold sumset of B.
inline GridSet iterated_sumset(const GridSet& b, int m, int n) {
  if (m < 0 || n < 0) throw std::invalid_argument("iterated_sumset: m and n must be nonnegative");
  if (m + n == 0) throw std::invalid_argument("iterated_sumset: m + n must be at least 1");
  GridSet acc(b.step(), {0});
  for (int i = 0; i < m; ++i) acc = sumset(acc, b, SumSign::plus);
  for (int i = 0; i < n; ++i) acc = sumset(acc, b, SumSign::minus);
  return acc;
}

struct PlunneckeReport {
  /// ⌈|A + B| / |A|⌉.
  std::uint64_t c = 0;
  /// |mB − nB|.
  std::uint64_t lhs = 0;
  /// C^(m+n)·|A|.
  double rhs = 0.0;
  bool holds = true;
};

inline PlunneckeReport plunnecke_report(const GridSet& a, const GridSet& b, int m, int n) {
  if (a.empty()) throw std::invalid_argument("plunnecke_report: A is empty");
  PlunneckeReport r;
  const std::uint64_t ab = sumset(a, b).size();
  r.c = (ab + a.size() - 1) / a.size();
  r.lhs = iterated_sumset(b, m, n).size();
  r.rhs = std::pow(static_cast<double>(r.c), m + n) * static_cast<double>(a.size());
  r.holds = static_cast<double>(r.lhs) <= r.rhs;
  return r;
}

/// Bipartite pair set G ⊆ A × B given by (index into A, index into B).
class PairGraph {
 public:
  PairGraph(GridSet left, GridSet right, std::vector<std::pair<std::size_t, std::size_t>> edges)
      : left_(std::move(left)), right_(std::move(right)), edges_(std::move(edges)) {
    if (left_.step() != right_.step()) throw std::invalid_argument("PairGraph: mismatched grid steps");
    for (const auto& [i, j] : edges_) {
      if (i >= left_.size() || j >= right_.size()) {
        std::ostringstream os;
        os << "PairGraph: edge (" << i << "," << j << ") outside " << left_.size() << "x" << right_.size();
        throw std::invalid_argument(os.str());
      }
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  }

  const GridSet& left() const { return left_; }
  const GridSet& right() const { return right_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }
  std::size_t size() const { return edges_.size(); }

 private:
  GridSet left_;
  GridSet right_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
};

/// {a + b : (a, b) ∈ G}, exactly from the edge list.
inline GridSet restricted_sumset(const PairGraph& g) {
  std::vector<std::int64_t> out;
  out.reserve(g.size());
  for (const auto& [i, j] : g.edges()) out.push_back(g.left()[i] + g.right()[j]);
  return GridSet(g.left().step(), std::move(out));
}

struct BsgResult {
  GridSet a_sub;
  GridSet b_sub;
  std::vector<std::size_t> a_indices;
  std::vector<std::size_t> b_indices;
  /// |G ∩ A'×B'| / (|A'||B'|).
  double achieved_density = 0.0;
  /// |A' + B'|.
  std::uint64_t achieved_sumset = 0;
  /// |G ∩ A'×B'| / (|A||B|).
  double achieved_edge_fraction = 0.0;
  /// Smallest C' with edge fraction ≥ K^(−C') and |A'+B'| ≤ K^(C')·(|A||B|)^(1/2);
  /// +∞ if K = 1 and either fails at C' = 0.
  double measured_exponent = 0.0;
};

namespace detail {

// Lower median of a nonempty list.
inline std::size_t lower_median(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

}  // namespace detail

/// The three statistics of BsgResult, recomputed from scratch for (A', B').
inline void fill_bsg_statistics(const PairGraph& g, double k, BsgResult& r) {
  std::vector<char> in_a(g.left().size(), 0);
  std::vector<char> in_b(g.right().size(), 0);
  for (auto i : r.a_indices) in_a[i] = 1;
  for (auto j : r.b_indices) in_b[j] = 1;
  std::size_t kept = 0;
  for (const auto& [i, j] : g.edges()) kept += (in_a[i] && in_b[j]) ? 1 : 0;
  const double na = static_cast<double>(r.a_sub.size());
  const double nb = static_cast<double>(r.b_sub.size());
  r.achieved_density = (na * nb) > 0 ? static_cast<double>(kept) / (na * nb) : 0.0;
  r.achieved_sumset = sumset(r.a_sub, r.b_sub).size();
  r.achieved_edge_fraction =
      static_cast<double>(kept) / (static_cast<double>(g.left().size()) * static_cast<double>(g.right().size()));
  const double growth =
      static_cast<double>(r.achieved_sumset) /
      std::sqrt(static_cast<double>(g.left().size()) * static_cast<double>(g.right().size()));
  const double loss = r.achieved_edge_fraction > 0 ? 1.0 / r.achieved_edge_fraction
                                                   : std::numeric_limits<double>::infinity();
  if (k > 1.0) {
    const double lk = std::log(k);
    r.measured_exponent = std::max({0.0, std::log(loss) / lk, std::log(growth) / lk});
  } else {
    r.measured_exponent = (loss <= 1.0 && growth <= 1.0) ? 0.0 : std::numeric_limits<double>::infinity();
  }
}

/// Path-of-length-three extraction:
///  1. B_pop = right vertices with positive degree at least the median positive degree;
///  2. pivot b* = the highest-degree vertex of B_pop (lowest index on ties);
///  3. A' = neighbours of b* whose degree into B_pop is at least the median of those degrees;
///  4. B' = right vertices with positive degree into A' at least the median of those degrees.
/// Throws HypothesisError unless |G| ≥ |A||B|/K and |{a+b : (a,b) ∈ G}| ≤ K·(|A||B|)^(1/2).
inline BsgResult bsg_extract(const PairGraph& g, double k) {
  if (g.size() == 0) throw std::invalid_argument("bsg_extract: empty pair graph");
  if (!(k >= 1.0)) throw std::invalid_argument("bsg_extract: K must be at least 1");
  const std::size_t na = g.left().size();
  const std::size_t nb = g.right().size();
  const double full = static_cast<double>(na) * static_cast<double>(nb);
  if (static_cast<double>(g.size()) < full / k) {
    std::ostringstream os;
    os << "bsg_extract: |G| = " << g.size() << " < |A||B|/K = " << full / k;
    throw HypothesisError(os.str());
  }
  const auto rs = restricted_sumset(g).size();
  if (static_cast<double>(rs) > k * std::sqrt(full)) {
    std::ostringstream os;
    os << "bsg_extract: restricted sumset " << rs << " > K(|A||B|)^(1/2) = " << k * std::sqrt(full);
    throw HypothesisError(os.str());
  }

  std::vector<std::vector<std::size_t>> left_adj(na);
  std::vector<std::vector<std::size_t>> right_adj(nb);
  for (const auto& [i, j] : g.edges()) {
    left_adj[i].push_back(j);
    right_adj[j].push_back(i);
  }

  std::vector<std::size_t> positive;
  for (std::size_t j = 0; j < nb; ++j) {
    if (!right_adj[j].empty()) positive.push_back(right_adj[j].size());
  }
  const std::size_t pop_cut = detail::lower_median(positive);
  std::vector<char> popular(nb, 0);
  std::size_t pivot = nb;
  for (std::size_t j = 0; j < nb; ++j) {
    if (right_adj[j].empty() || right_adj[j].size() < pop_cut) continue;
    popular[j] = 1;
    if (pivot == nb || right_adj[j].size() > right_adj[pivot].size()) pivot = j;
  }

  const auto& cand = right_adj[pivot];
  std::vector<std::size_t> scores;
  scores.reserve(cand.size());
  for (auto i : cand) {
    std::size_t sc = 0;
    for (auto j : left_adj[i]) sc += popular[j];
    scores.push_back(sc);
  }
  const std::size_t score_cut = detail::lower_median(scores);
  BsgResult r;
  for (std::size_t t = 0; t < cand.size(); ++t) {
    if (scores[t] >= score_cut) r.a_indices.push_back(cand[t]);
  }
  std::sort(r.a_indices.begin(), r.a_indices.end());

  std::vector<std::size_t> deg_into(nb, 0);
  for (auto i : r.a_indices) {
    for (auto j : left_adj[i]) ++deg_into[j];
  }
  std::vector<std::size_t> pos_deg;
  for (auto d : deg_into) {
    if (d > 0) pos_deg.push_back(d);
  }
  const std::size_t b_cut = detail::lower_median(pos_deg);
  for (std::size_t j = 0; j < nb; ++j) {
    if (deg_into[j] > 0 && deg_into[j] >= b_cut) r.b_indices.push_back(j);
  }

  std::vector<std::int64_t> am;
  std::vector<std::int64_t> bm;
  for (auto i : r.a_indices) am.push_back(g.left()[i]);
  for (auto j : r.b_indices) bm.push_back(g.right()[j]);
  r.a_sub = GridSet(g.left().step(), std::move(am));
  r.b_sub = GridSet(g.right().step(), std::move(bm));
  fill_bsg_statistics(g, k, r);
  return r;
}

}  // namespace projlab
