#pragma once

// Product-like sets P = ∪_b A_b × {b}, their relation graphs and tube-pair
// families, triple intersections and the compression map
// π_{b1,b2,b3}(x, y) = x + ((b2 − b1)/(b3 − b2))·y.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "projlab/delta_core.hpp"
#include "projlab/incidence.hpp"

namespace projlab {

struct ProductThresholds {
  double base = 8.0;
  double fiber = 8.0;
  double assembled = 8.0;
};

struct ProductValidation {
  double base_ratio = 0.0;
  double worst_fiber_ratio = 0.0;
  std::size_t worst_fiber = 0;
  double assembled_ratio = 0.0;
  std::vector<std::string> warnings;
};

/// Base B with one fiber A_b per base point (fibers[i] belongs to base[i]).
struct ProductLikeSet {
  ScalarSet base;
  std::vector<ScalarSet> fibers;
  double delta = 0.0;
  double s = 0.0;
  double tau = 0.0;
  std::optional<ProductValidation> validation;

  /// Points (a, b) ordered by base index, then by a.
  PointSet2D points() const {
    std::vector<Point2> pts;
    for (std::size_t i = 0; i < fibers.size(); ++i) {
      for (double a : fibers[i]) pts.push_back({a, base[i]});
    }
    return PointSet2D(std::move(pts));
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& f : fibers) n += f.size();
    return n;
  }

  /// Index of the first point of fiber i inside points().
  std::vector<std::size_t> offsets() const {
    std::vector<std::size_t> off(fibers.size() + 1, 0);
    for (std::size_t i = 0; i < fibers.size(); ++i) off[i + 1] = off[i] + fibers[i].size();
    return off;
  }
};

/// Assembles without checking any non-concentration property.
inline ProductLikeSet assemble_product(ScalarSet base, std::vector<ScalarSet> fibers, Scale delta, double s,
                                       double tau) {
  if (base.size() != fibers.size()) throw std::invalid_argument("product set: one fiber per base point required");
  ProductLikeSet p;
  p.base = std::move(base);
  p.fibers = std::move(fibers);
  p.delta = delta.value();
  p.s = s;
  p.tau = tau;
  return p;
}

namespace detail {

inline std::string witness_text(const char* what, const NonConcentrationReport& r, double threshold) {
  std::ostringstream os;
  os.precision(17);
  os << what << ": worst ratio " << r.worst_ratio << " > " << threshold << " at ball center (" << r.witness_center.x
     << "," << r.witness_center.y << ") radius " << r.witness_radius << " holding " << r.witness_count << " points";
  return os.str();
}

// Non-concentration ratio allowing exponent 0 (a bounded set).
inline NonConcentrationReport check_any(std::span<const Point2> pts, double delta, double t) {
  if (t > 0.0) return check_points(pts, delta, t);
  auto r = check_points(pts, delta, 2.0);
  // Recompute with norm 1: the worst ratio is the largest ball count.
  NonConcentrationReport out = r;
  out.t = 0.0;
  out.worst_ratio = 0.0;
  for (double rad : dyadic_radii(delta)) {
    const auto counts = ball_counts(pts, rad);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (static_cast<double>(counts[i]) > out.worst_ratio) {
        out.worst_ratio = static_cast<double>(counts[i]);
        out.witness_center = pts[i];
        out.witness_radius = rad;
        out.witness_count = counts[i];
      }
    }
  }
  out.log_power_used = log_power(out.worst_ratio, delta);
  return out;
}

}  // namespace detail

/// Validates B as a (δ,τ)-set, every fiber as a (δ,s)-set and the assembled
/// set as a (δ,s+τ)-set. Throws HypothesisError naming the witness ball, or
/// SeparationError if a fiber is not δ-separated.
inline ProductLikeSet build_product_like(ScalarSet base, std::vector<ScalarSet> fibers, Scale delta, double s,
                                         double tau, ProductThresholds thr = {}) {
  auto p = assemble_product(std::move(base), std::move(fibers), delta, s, tau);
  if (p.base.empty()) throw std::invalid_argument("product set: empty base");
  ProductValidation v;
  const auto base_pts = as_points(p.base);
  const auto rb = detail::check_any(base_pts, p.delta, tau);
  v.base_ratio = rb.worst_ratio;
  if (rb.worst_ratio > thr.base) throw HypothesisError(detail::witness_text("base", rb, thr.base));
  for (std::size_t i = 0; i < p.fibers.size(); ++i) {
    if (p.fibers[i].empty()) throw std::invalid_argument("product set: empty fiber");
    const auto fp = as_points(p.fibers[i]);
    const auto rf = detail::check_any(fp, p.delta, s);
    if (rf.worst_ratio > v.worst_fiber_ratio) {
      v.worst_fiber_ratio = rf.worst_ratio;
      v.worst_fiber = i;
    }
    if (rf.worst_ratio > thr.fiber) {
      std::ostringstream os;
      os << "fiber #" << i << " (b=" << p.base[i] << ")";
      throw HypothesisError(detail::witness_text(os.str().c_str(), rf, thr.fiber));
    }
    if (p.fibers[i].size() == 1) {
      std::ostringstream os;
      os << "fiber #" << i << " is a single point";
      v.warnings.push_back(os.str());
    }
  }
  const auto all = p.points();
  const auto ra = detail::check_any(all.points(), p.delta, std::min(2.0, s + tau));
  v.assembled_ratio = ra.worst_ratio;
  if (ra.worst_ratio > thr.assembled) throw HypothesisError(detail::witness_text("assembled set", ra, thr.assembled));
  p.validation = std::move(v);
  return p;
}

// ---------------------------------------------------------------------------
// Roughly horizontal reduction
// ---------------------------------------------------------------------------

struct HorizontalFilter {
  ProductLikeSet product;
  DirectionSet directions;
  /// Indices into the input E of the kept directions.
  std::vector<std::size_t> kept_directions;
  /// Raised when E' is empty or |E'| < |E|/2, or some fiber lost more than half.
  bool flagged = false;
  std::vector<std::string> notes;
};

/// Keeps directions with |cos θ| ≥ 1/2 and thins every fiber so that each
/// δ-tube perpendicular to a kept direction meets each A_b × {b} at most once.
inline HorizontalFilter roughly_horizontal_filter(const ProductLikeSet& p, const DirectionSet& dirs) {
  HorizontalFilter out;
  double min_cos = 1.0;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const double c = std::fabs(dirs[i].e1());
    if (c >= 0.5) {
      out.kept_directions.push_back(i);
      out.directions.push_back(dirs[i]);
      min_cos = std::min(min_cos, c);
    }
  }
  if (out.directions.empty()) {
    out.flagged = true;
    out.notes.push_back("no roughly horizontal direction: every direction has |cos theta| < 1/2");
  } else if (2 * out.directions.size() < dirs.size()) {
    out.flagged = true;
    out.notes.push_back("fewer than half of the directions are roughly horizontal");
  }

  const double gap = p.delta / min_cos;
  std::vector<ScalarSet> fibers;
  fibers.reserve(p.fibers.size());
  for (std::size_t i = 0; i < p.fibers.size(); ++i) {
    const double b = p.base[i];
    std::vector<double> kept;
    for (double a : p.fibers[i]) {
      if (!kept.empty() && a - kept.back() < gap) continue;
      // Guard against rounding: no kept direction may put a and a kept point in one cell.
      bool clash = false;
      for (const auto& e : out.directions) {
        const auto cell = grid_cell(e.dot({a, b}), p.delta);
        for (auto it = kept.rbegin(); it != kept.rend() && a - *it < 2.0 * gap; ++it) {
          if (grid_cell(e.dot({*it, b}), p.delta) == cell) {
            clash = true;
            break;
          }
        }
        if (clash) break;
      }
      if (!clash) kept.push_back(a);
    }
    if (2 * kept.size() < p.fibers[i].size()) {
      out.flagged = true;
      std::ostringstream os;
      os << "fiber #" << i << " kept " << kept.size() << " of " << p.fibers[i].size() << " points";
      out.notes.push_back(os.str());
    }
    fibers.emplace_back(std::move(kept));
  }
  out.product = assemble_product(p.base, std::move(fibers), Scale(p.delta), p.s, p.tau);
  return out;
}

/// True if some δ-tube perpendicular to some e ∈ E meets a fiber twice.
inline bool has_fiber_collision(const ProductLikeSet& p, const DirectionSet& dirs) {
  for (const auto& e : dirs) {
    for (std::size_t i = 0; i < p.fibers.size(); ++i) {
      std::vector<std::int64_t> cells;
      for (double a : p.fibers[i]) cells.push_back(grid_cell(e.dot({a, p.base[i]}), p.delta));
      std::sort(cells.begin(), cells.end());
      if (std::adjacent_find(cells.begin(), cells.end()) != cells.end()) return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Relation graph
// ---------------------------------------------------------------------------

/// Ordered pairs p ∼_e q (p ≠ q sharing a δ-tube perpendicular to e), per
/// direction and united into Q.
class RelationGraph {
 public:
  explicit RelationGraph(std::size_t n) : n_(n), bits_((n * n + 63) / 64, 0) {}

  std::size_t vertex_count() const { return n_; }
  bool related(std::size_t i, std::size_t j) const {
    const std::size_t k = i * n_ + j;
    return (bits_[k / 64] >> (k % 64)) & 1u;
  }
  void relate(std::size_t i, std::size_t j) {
    const std::size_t k = i * n_ + j;
    bits_[k / 64] |= std::uint64_t{1} << (k % 64);
  }

  /// |Q|.
  std::uint64_t union_size() const {
    std::uint64_t c = 0;
    for (auto w : bits_) c += static_cast<std::uint64_t>(__builtin_popcountll(w));
    return c;
  }

  std::vector<std::uint64_t> per_direction;
  std::vector<std::size_t> per_direction_tubes;
  /// |P|²/|T_e| − |P| for each direction.
  std::vector<double> cauchy_schwarz;
  /// |Q| / |P|².
  double q_ratio = 0.0;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> bits_;
};

inline RelationGraph relation_graph(const ProductLikeSet& p, const DirectionSet& dirs, Scale delta) {
  const auto pts = p.points();
  const std::size_t n = pts.size();
  RelationGraph g(n);
  for (const auto& e : dirs) {
    const auto fam = tube_cover(pts, e, delta);
    std::vector<std::vector<std::size_t>> members(fam.size());
    for (std::size_t i = 0; i < n; ++i) members[fam.membership[i]].push_back(i);
    std::uint64_t pairs = 0;
    for (const auto& m : members) {
      pairs += static_cast<std::uint64_t>(m.size()) * (m.size() - 1);
      for (auto i : m) {
        for (auto j : m) {
          if (i != j) g.relate(i, j);
        }
      }
    }
    g.per_direction.push_back(pairs);
    g.per_direction_tubes.push_back(fam.size());
    const double dn = static_cast<double>(n);
    g.cauchy_schwarz.push_back(fam.size() == 0 ? 0.0 : dn * dn / static_cast<double>(fam.size()) - dn);
  }
  g.q_ratio = n == 0 ? 0.0 : static_cast<double>(g.union_size()) / (static_cast<double>(n) * static_cast<double>(n));
  return g;
}

// ---------------------------------------------------------------------------
// Tube-pair families and triples
// ---------------------------------------------------------------------------

/// A tube identified by the index of its direction in E and its grid cell.
struct TubeId {
  std::size_t direction = 0;
  std::int64_t cell = 0;
  friend auto operator<=>(const TubeId&, const TubeId&) = default;
};

struct TubePairEntry {
  TubeId tube;
  /// Index of p in A_{b1} and of q in A_{b2}.
  std::size_t first = 0;
  std::size_t second = 0;
};

struct TubePairFamily {
  std::size_t b1 = 0;
  std::size_t b2 = 0;
  /// One entry per related pair, sorted by tube.
  std::vector<TubePairEntry> entries;
  std::size_t related_pairs = 0;
  /// The pair-to-tube map is injective (no tube repeats).
  bool injective = true;

  std::size_t size() const { return entries.size(); }
};

/// One tube T_(p,q) per related pair (p, q) ∈ A_{b1}×{b1} × A_{b2}×{b2}: the
/// tube of the lowest-index direction relating them. b1 = b2 gives the empty family.
inline TubePairFamily tube_pair_family(const ProductLikeSet& p, std::size_t b1, std::size_t b2,
                                       const DirectionSet& dirs, Scale delta) {
  if (b1 >= p.fibers.size() || b2 >= p.fibers.size()) throw std::out_of_range("tube_pair_family: base index");
  TubePairFamily fam;
  fam.b1 = b1;
  fam.b2 = b2;
  if (b1 == b2) return fam;
  const auto& f1 = p.fibers[b1];
  const auto& f2 = p.fibers[b2];
  const double y1 = p.base[b1];
  const double y2 = p.base[b2];
  std::vector<char> assigned(f1.size() * f2.size(), 0);
  for (std::size_t d = 0; d < dirs.size(); ++d) {
    const auto& e = dirs[d];
    std::vector<std::pair<std::int64_t, std::size_t>> c2;
    c2.reserve(f2.size());
    for (std::size_t j = 0; j < f2.size(); ++j) c2.emplace_back(grid_cell(e.dot({f2[j], y2}), delta.value()), j);
    std::sort(c2.begin(), c2.end());
    for (std::size_t i = 0; i < f1.size(); ++i) {
      const auto cell = grid_cell(e.dot({f1[i], y1}), delta.value());
      auto it = std::lower_bound(c2.begin(), c2.end(), std::pair{cell, std::size_t{0}});
      for (; it != c2.end() && it->first == cell; ++it) {
        auto& flag = assigned[i * f2.size() + it->second];
        if (flag) continue;
        flag = 1;
        fam.entries.push_back({{d, cell}, i, it->second});
      }
    }
  }
  fam.related_pairs = fam.entries.size();
  std::sort(fam.entries.begin(), fam.entries.end(), [](const TubePairEntry& a, const TubePairEntry& b) {
    return std::tie(a.tube, a.first, a.second) < std::tie(b.tube, b.first, b.second);
  });
  for (std::size_t k = 1; k < fam.entries.size(); ++k) {
    if (fam.entries[k].tube == fam.entries[k - 1].tube) fam.injective = false;
  }
  return fam;
}

struct TriplePairData {
  std::size_t b1 = 0;
  std::size_t b2 = 0;
  std::size_t b3 = 0;
  /// T_{b1,b2} ∩ T_{b2,b3}, by tube identity.
  std::vector<TubeId> common;
  /// Distinct (index in A_{b1}, index in A_{b3}) pairs read off the common tubes.
  std::vector<std::pair<std::size_t, std::size_t>> g_prime;
  /// Distinct tubes give distinct pairs, so |G'| = |T ∩ T|.
  bool injective = true;
};

inline TriplePairData triple_from_families(const TubePairFamily& t12, const TubePairFamily& t23) {
  TriplePairData out;
  out.b1 = t12.b1;
  out.b2 = t12.b2;
  out.b3 = t23.b2;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < t12.entries.size() && j < t23.entries.size()) {
    const auto& x = t12.entries[i];
    const auto& y = t23.entries[j];
    if (x.tube < y.tube) {
      ++i;
    } else if (y.tube < x.tube) {
      ++j;
    } else {
      out.common.push_back(x.tube);
      out.g_prime.emplace_back(x.first, y.second);
      // Skip repeats of this tube on either side (non-injective families).
      const TubeId t = x.tube;
      while (i < t12.entries.size() && t12.entries[i].tube == t) ++i;
      while (j < t23.entries.size() && t23.entries[j].tube == t) ++j;
    }
  }
  std::sort(out.g_prime.begin(), out.g_prime.end());
  out.g_prime.erase(std::unique(out.g_prime.begin(), out.g_prime.end()), out.g_prime.end());
  out.injective = t12.injective && t23.injective && out.g_prime.size() == out.common.size();
  return out;
}

/// Requires pairwise distinct base indices.
inline TriplePairData triple_intersections(const ProductLikeSet& p, std::size_t b1, std::size_t b2, std::size_t b3,
                                           const DirectionSet& dirs, Scale delta) {
  if (b1 == b2 || b2 == b3 || b1 == b3) throw std::invalid_argument("triple_intersections: degenerate triple");
  return triple_from_families(tube_pair_family(p, b1, b2, dirs, delta), tube_pair_family(p, b2, b3, dirs, delta));
}

/// x + ((b2 − b1)/(b3 − b2))·y.
inline double triple_projection(double x, double y, double b1, double b2, double b3) {
  if (b3 == b2) throw std::domain_error("triple_projection: b3 == b2");
  return x + ((b2 - b1) / (b3 - b2)) * y;
}

struct CompressionCheck {
  std::size_t n = 0;
  /// δ^(−s).
  double bound = 0.0;
};

/// N(π_{b1,b2,b3}(G'), δ) for G' given as (a1, a3) value pairs.
inline CompressionCheck compression_check(const std::vector<std::pair<double, double>>& g_prime, double b1, double b2,
                                          double b3, Scale delta, double s) {
  if (b3 == b2) throw std::domain_error("compression_check: b3 == b2");
  std::vector<double> v;
  v.reserve(g_prime.size());
  for (const auto& [a1, a3] : g_prime) v.push_back(triple_projection(a1, a3, b1, b2, b3));
  return {covering_number(v, delta), std::pow(delta.value(), -s)};
}

/// G' of a triple as (a1, a3) values.
inline std::vector<std::pair<double, double>> g_prime_values(const ProductLikeSet& p, const TriplePairData& t) {
  std::vector<std::pair<double, double>> out;
  out.reserve(t.g_prime.size());
  for (const auto& [i, k] : t.g_prime) out.emplace_back(p.fibers[t.b1][i], p.fibers[t.b3][k]);
  return out;
}

struct TripleRow {
  std::size_t b1 = 0;
  std::size_t b2 = 0;
  std::size_t b3 = 0;
  std::size_t intersection_size = 0;
};

struct GoodTripleScan {
  /// Ordered distinct triples passing separation and threshold, lexicographic.
  std::vector<TripleRow> triples;
  /// Σ |T_{b1,b2} ∩ T_{b2,b3}| over b1 ≠ b2 ≠ b3 (b1 = b3 allowed).
  std::uint64_t global_sum = 0;
  /// (Σ_{b,b'} |T_{b,b'}|)² / (|T|·|B|), |T| the number of distinct tubes used.
  double cauchy_schwarz_bound = 0.0;
};

inline GoodTripleScan good_triple_scan(const ProductLikeSet& p, const DirectionSet& dirs, Scale delta,
                                       double separation_min = 0.25, double threshold = 0.0) {
  const std::size_t nb = p.fibers.size();
  std::vector<TubePairFamily> fams(nb * nb);
  std::uint64_t family_total = 0;
  std::vector<TubeId> all_tubes;
  for (std::size_t a = 0; a < nb; ++a) {
    for (std::size_t b = 0; b < nb; ++b) {
      fams[a * nb + b] = tube_pair_family(p, a, b, dirs, delta);
      family_total += fams[a * nb + b].size();
      for (const auto& e : fams[a * nb + b].entries) all_tubes.push_back(e.tube);
    }
  }
  std::sort(all_tubes.begin(), all_tubes.end());
  all_tubes.erase(std::unique(all_tubes.begin(), all_tubes.end()), all_tubes.end());

  GoodTripleScan out;
  auto sep = [&](std::size_t i, std::size_t j) { return std::fabs(p.base[i] - p.base[j]) >= separation_min; };
  for (std::size_t b1 = 0; b1 < nb; ++b1) {
    for (std::size_t b2 = 0; b2 < nb; ++b2) {
      if (b2 == b1) continue;
      for (std::size_t b3 = 0; b3 < nb; ++b3) {
        if (b3 == b2) continue;
        const auto t = triple_from_families(fams[b1 * nb + b2], fams[b2 * nb + b3]);
        out.global_sum += t.common.size();
        if (b3 == b1) continue;
        if (!sep(b1, b2) || !sep(b2, b3) || !sep(b1, b3)) continue;
        if (static_cast<double>(t.common.size()) >= threshold) out.triples.push_back({b1, b2, b3, t.common.size()});
      }
    }
  }
  if (!all_tubes.empty() && nb > 0) {
    const double f = static_cast<double>(family_total);
    out.cauchy_schwarz_bound = f * f / (static_cast<double>(all_tubes.size()) * static_cast<double>(nb));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweep experiment and affine reduction
// ---------------------------------------------------------------------------

struct ProfileRow {
  double theta = 0.0;
  std::size_t n = 0;
};

struct ProductExperiment {
  std::optional<std::size_t> witness;
  std::size_t max_n = 0;
  std::size_t argmax = 0;
  /// δ^(−s−ε).
  double target = 0.0;
  std::vector<ProfileRow> profile;
  std::vector<std::string> warnings;
};

/// Exhaustive sweep of N(π_e(P), δ) over E. The witness is the first direction
/// reaching δ^(−s−ε).
inline ProductExperiment product_experiment(const ProductLikeSet& p, const DirectionSet& dirs, Scale delta, double s,
                                            double epsilon) {
  ProductExperiment out;
  out.target = std::pow(delta.value(), -s - epsilon);
  if (!p.validation) {
    out.warnings.push_back("product set was assembled without validation");
  } else {
    for (const auto& w : p.validation->warnings) out.warnings.push_back(w);
  }
  if (dirs.empty()) out.warnings.push_back("empty direction set");
  if (find_close_directions(dirs, delta.value())) out.warnings.push_back("direction set is not delta-separated");
  if (has_fiber_collision(p, dirs)) out.warnings.push_back("directions are not roughly horizontal for this set");
  const auto pts = p.points();
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const auto n = covering_number(projected_values(pts, dirs[i]), delta);
    out.profile.push_back({dirs[i].theta(), n});
    if (n > out.max_n || i == 0) {
      out.max_n = n;
      out.argmax = i;
    }
    if (!out.witness && static_cast<double>(n) >= out.target) out.witness = i;
  }
  return out;
}

struct Renormalized {
  ProductLikeSet product;
  /// (e¹/e0¹, e² − e¹·e0²/e0¹) for every e ∈ E; not unit vectors.
  std::vector<Point2> directions;
};

/// Replaces A_b by e0¹·A_b + e0²·b and E by its image under the affine map
/// sending e0 to (1, 0), so that π_(1,0)(P') = π_{e0}(P) and
/// ⟨P', e'⟩ = π_e(P) for every e.
inline Renormalized renormalize(const ProductLikeSet& p, const DirectionSet& dirs, const Direction& e0) {
  if (e0.e1() == 0.0) throw std::invalid_argument("renormalize: e0 is vertical");
  std::vector<ScalarSet> fibers;
  for (std::size_t i = 0; i < p.fibers.size(); ++i) {
    std::vector<double> v;
    for (double a : p.fibers[i]) v.push_back(e0.dot({a, p.base[i]}));
    fibers.emplace_back(std::move(v));
  }
  Renormalized out;
  out.product = assemble_product(p.base, std::move(fibers), Scale(p.delta), p.s, p.tau);
  for (const auto& e : dirs) {
    out.directions.push_back({e.e1() / e0.e1(), e.e2() - e.e1() * (e0.e2() / e0.e1())});
  }
  return out;
}

/// {x·v.x + y·v.y} for an arbitrary (not necessarily unit) vector v.
inline std::vector<double> linear_values(const PointSet2D& p, Point2 v) {
  std::vector<double> out;
  out.reserve(p.size());
  for (const auto& q : p) out.push_back(q.x * v.x + q.y * v.y);
  return out;
}

}  // namespace projlab
