#pragma once

// Seeded test-set construction. Randomness comes from a counter-based
// generator: each draw hashes (seed, stream, index), so output never depends
// on evaluation order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "projlab/delta_core.hpp"
#include "projlab/product_construction.hpp"

namespace projlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Stateless stream of 64-bit words addressed by (seed, stream, index).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : key_(splitmix64(seed ^ splitmix64(stream))) {}

  std::uint64_t word(std::uint64_t index) const { return splitmix64(key_ ^ splitmix64(index + 0x632BE59BD9B4E019ULL)); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform(std::uint64_t index) const { return static_cast<double>(word(index) >> 11) * 0x1.0p-53; }

  /// Uniform in [0, n), n > 0 (modulo bias is below n/2^64).
  std::uint64_t below(std::uint64_t index, std::uint64_t n) const { return word(index) % n; }

  CounterRng child(std::uint64_t stream) const { return CounterRng(key_, stream); }

 private:
  std::uint64_t key_;
};

/// {origin + k·step : 0 ≤ k < n}.
inline ScalarSet gen_ap(std::size_t n, double step, double origin = 0.0) {
  if (n == 0) throw std::invalid_argument("gen_ap: n must be at least 1");
  if (!(step > 0.0)) throw std::invalid_argument("gen_ap: step must be positive");
  std::vector<double> v;
  v.reserve(n);
  for (std::size_t k = 0; k < n; ++k) v.push_back(origin + static_cast<double>(k) * step);
  return ScalarSet(std::move(v));
}

/// Left endpoints of the 2^depth intervals of the depth-th iterate of the
/// Cantor construction keeping [0, c] and [1 − c, 1].
inline ScalarSet gen_cantor_1d(double contraction, int depth) {
  if (!(contraction > 0.0) || !(contraction < 0.5)) throw std::invalid_argument("gen_cantor_1d: contraction must lie in (0, 1/2)");
  if (depth < 0) throw std::invalid_argument("gen_cantor_1d: depth must be nonnegative");
  std::vector<double> v{0.0};
  double len = 1.0;
  for (int d = 0; d < depth; ++d) {
    std::vector<double> next;
    next.reserve(v.size() * 2);
    const double shift = len * (1.0 - contraction);
    for (double x : v) {
      next.push_back(x);
      next.push_back(x + shift);
    }
    v = std::move(next);
    len *= contraction;
  }
  return ScalarSet(std::move(v), 0.0, 1.0);
}

/// Product of two contraction-1/4 Cantor iterates: 4^depth points, 4^(−depth)-separated.
inline PointSet2D gen_four_corner(int depth) {
  const auto c = gen_cantor_1d(0.25, depth);
  std::vector<Point2> pts;
  pts.reserve(c.size() * c.size());
  for (double x : c) {
    for (double y : c) pts.push_back({x, y});
  }
  return PointSet2D(std::move(pts), std::ldexp(1.0, -2 * depth));
}

/// n points on the δ-lattice of [0,1]² such that every dyadic cell of side
/// 2^(−j) ≥ δ receives at most ⌊(2^(−j)/δ)^exponent⌋ points. Counts are split
/// top-down among the four children uniformly at random within the caps; leaf
/// cells (side δ) hold one lattice corner. Requires δ dyadic.
inline PointSet2D gen_random_frostman(std::size_t n, double exponent, Scale delta, std::uint64_t seed) {
  const auto jd = delta.dyadic_exponent();
  if (!jd) throw std::invalid_argument("gen_random_frostman: delta must be dyadic");
  if (!(exponent > 0.0) || exponent > 2.0) throw std::invalid_argument("gen_random_frostman: exponent must lie in (0, 2]");
  const int leaf = *jd;
  auto cap = [&](int level) {
    return static_cast<std::uint64_t>(std::floor(std::pow(std::ldexp(1.0, leaf - level), exponent) + 1e-9));
  };
  // Caps reachable through the children: eff(j) = min(cap(j), 4·eff(j+1)).
  std::vector<std::uint64_t> eff(static_cast<std::size_t>(leaf) + 1, 1);
  for (int level = leaf - 1; level >= 0; --level) {
    eff[static_cast<std::size_t>(level)] = std::min(cap(level), 4 * eff[static_cast<std::size_t>(level) + 1]);
  }
  if (n == 0 || n > eff[0]) {
    std::ostringstream os;
    os << "gen_random_frostman: n=" << n << " is infeasible; the unit cell holds at most " << eff[0] << " points";
    throw std::invalid_argument(os.str());
  }
  const CounterRng rng(seed);
  std::vector<Point2> pts;
  struct Task {
    int level;
    std::int64_t ix;
    std::int64_t iy;
    std::uint64_t count;
    std::uint64_t path;
  };
  std::vector<Task> stack{{0, 0, 0, n, 1}};
  while (!stack.empty()) {
    const Task t = stack.back();
    stack.pop_back();
    if (t.level == leaf) {
      pts.push_back({static_cast<double>(t.ix) * delta.value(), static_cast<double>(t.iy) * delta.value()});
      continue;
    }
    const std::uint64_t child_cap = eff[static_cast<std::size_t>(t.level) + 1];
    std::uint64_t counts[4] = {0, 0, 0, 0};
    const auto sub = rng.child(t.path);
    for (std::uint64_t k = 0; k < t.count; ++k) {
      std::uint64_t open[4];
      std::uint64_t m = 0;
      for (std::uint64_t c = 0; c < 4; ++c) {
        if (counts[c] < child_cap) open[m++] = c;
      }
      if (m == 0) throw std::logic_error("gen_random_frostman: caps exhausted");
      ++counts[open[sub.below(k, m)]];
    }
    for (int c = 3; c >= 0; --c) {
      if (counts[c] == 0) continue;
      stack.push_back({t.level + 1, 2 * t.ix + (c & 1), 2 * t.iy + (c >> 1), counts[c], t.path * 4 + static_cast<std::uint64_t>(c)});
    }
  }
  std::sort(pts.begin(), pts.end());
  return PointSet2D(std::move(pts), delta.value());
}

/// Fibers base_fiber + intercept + slope·(b − b₀) + jitter_b, b₀ = min B, so
/// the points (a + slope·(b − b₀), b) with a ∈ base_fiber + intercept are
/// collinear up to the jitter. Each fiber receives a uniform shift in [−jitter, jitter].
inline ProductLikeSet gen_planted_collinear(const ScalarSet& base, const ScalarSet& base_fiber, double slope,
                                           double intercept, double jitter, Scale delta, std::uint64_t seed) {
  if (base.empty()) throw std::invalid_argument("gen_planted_collinear: empty base");
  if (jitter < 0.0 || jitter > delta.value() / 2.0) throw std::invalid_argument("gen_planted_collinear: jitter must lie in [0, delta/2]");
  const CounterRng rng(seed);
  const double b0 = base[0];
  std::vector<ScalarSet> fibers;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double shift = intercept + slope * (base[i] - b0) + jitter * (2.0 * rng.uniform(i) - 1.0);
    std::vector<double> v;
    for (double a : base_fiber) v.push_back(a + shift);
    fibers.emplace_back(std::move(v));
  }
  return assemble_product(base, std::move(fibers), delta, 0.0, 0.0);
}

/// The same fiber over every base point.
inline ProductLikeSet gen_product(const ScalarSet& base, const ScalarSet& fiber, Scale delta, double s, double tau) {
  return assemble_product(base, std::vector<ScalarSet>(base.size(), fiber), delta, s, tau);
}

/// Independent random fibers: each is `count` distinct multiples of δ in [0, 1).
inline ProductLikeSet gen_random_product(const ScalarSet& base, std::size_t count, Scale delta, std::uint64_t seed,
                                         double s = 0.0, double tau = 0.0) {
  const auto cells = static_cast<std::uint64_t>(std::floor(1.0 / delta.value()));
  if (count == 0 || count > cells) throw std::invalid_argument("gen_random_product: fiber size out of range");
  const CounterRng rng(seed);
  std::vector<ScalarSet> fibers;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const auto sub = rng.child(i);
    std::vector<std::int64_t> picked;
    std::uint64_t draw = 0;
    while (picked.size() < count) {
      const auto k = static_cast<std::int64_t>(sub.below(draw++, cells));
      if (std::find(picked.begin(), picked.end(), k) == picked.end()) picked.push_back(k);
    }
    std::vector<double> v;
    for (auto k : picked) v.push_back(static_cast<double>(k) * delta.value());
    fibers.emplace_back(std::move(v));
  }
  return assemble_product(base, std::move(fibers), delta, s, tau);
}

/// n distinct uniform points of [0,1)² on the δ-lattice.
inline PointSet2D gen_random_lattice(std::size_t n, Scale delta, std::uint64_t seed) {
  const auto cells = static_cast<std::uint64_t>(std::floor(1.0 / delta.value()));
  if (n > cells * cells) throw std::invalid_argument("gen_random_lattice: more points than lattice sites");
  const CounterRng rng(seed);
  std::vector<std::uint64_t> picked;
  std::vector<Point2> pts;
  std::uint64_t draw = 0;
  while (pts.size() < n) {
    const auto k = rng.below(draw++, cells * cells);
    if (std::find(picked.begin(), picked.end(), k) != picked.end()) continue;
    picked.push_back(k);
    pts.push_back({static_cast<double>(k % cells) * delta.value(), static_cast<double>(k / cells) * delta.value()});
  }
  return PointSet2D(std::move(pts));
}

// ---------------------------------------------------------------------------
// Generator specs
// ---------------------------------------------------------------------------

enum class GeneratorKind { ap, cantor1d, four_corner, product, random_frostman, planted_collinear };

inline const char* kind_name(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::ap: return "ap";
    case GeneratorKind::cantor1d: return "cantor1d";
    case GeneratorKind::four_corner: return "four_corner";
    case GeneratorKind::product: return "product";
    case GeneratorKind::random_frostman: return "random_frostman";
    case GeneratorKind::planted_collinear: return "planted_collinear";
  }
  return "?";
}

inline GeneratorKind parse_kind(const std::string& s) {
  for (auto k : {GeneratorKind::ap, GeneratorKind::cantor1d, GeneratorKind::four_corner, GeneratorKind::product,
                 GeneratorKind::random_frostman, GeneratorKind::planted_collinear}) {
    if (s == kind_name(k)) return k;
  }
  throw std::invalid_argument("unknown generator kind '" + s + "'");
}

/// A generator invocation: kind, kind-specific numeric parameters and seed.
/// Serializes as key=value lines, keys sorted, so equal specs print equally.
struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::ap;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;

  double get(const std::string& key, std::optional<double> fallback = std::nullopt) const {
    auto it = params.find(key);
    if (it != params.end()) return it->second;
    if (fallback) return *fallback;
    throw std::invalid_argument(std::string("generator '") + kind_name(kind) + "' needs parameter '" + key + "'");
  }

  std::string serialize() const {
    std::ostringstream os;
    os.precision(17);
    os << "kind=" << kind_name(kind) << "\n";
    for (const auto& [k, v] : params) os << k << "=" << v << "\n";
    os << "seed=" << seed << "\n";
    return os.str();
  }

  static GeneratorSpec parse(const std::string& text) {
    GeneratorSpec spec;
    std::istringstream is(text);
    std::string line;
    bool have_kind = false;
    int line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw std::invalid_argument("generator spec line " + std::to_string(line_no) + ": expected key=value");
      }
      const auto key = line.substr(0, eq);
      const auto val = line.substr(eq + 1);
      if (key == "kind") {
        spec.kind = parse_kind(val);
        have_kind = true;
      } else if (key == "seed") {
        spec.seed = std::stoull(val);
      } else {
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(val, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != val.size() || val.empty()) {
          throw std::invalid_argument("generator spec line " + std::to_string(line_no) + ": '" + val + "' is not a number");
        }
        spec.params[key] = v;
      }
    }
    if (!have_kind) throw std::invalid_argument("generator spec: missing kind");
    return spec;
  }
};

/// A generated set: planar points, or a scalar set for the 1-D kinds.
struct Generated {
  std::optional<PointSet2D> points;
  std::optional<ScalarSet> scalars;
  std::optional<ProductLikeSet> product;
};

/// Runs a spec. Parameters (defaults in brackets):
///   ap:                n, step, origin[0]
///   cantor1d:          contraction, depth
///   four_corner:       depth
///   product:           base_n, base_step, fiber_n, fiber_step, delta, s[0], tau[0]
///   random_frostman:   n, exponent, delta
///   planted_collinear: base_n, base_step, fiber_n, fiber_step, slope, intercept[0], jitter[0], delta
inline Generated run_generator(const GeneratorSpec& spec) {
  auto count = [&](const std::string& key) {
    const double v = spec.get(key);
    if (v < 0 || v != std::floor(v)) throw std::invalid_argument("generator parameter '" + key + "' must be a nonnegative integer");
    return static_cast<std::size_t>(v);
  };
  Generated g;
  switch (spec.kind) {
    case GeneratorKind::ap:
      g.scalars = gen_ap(count("n"), spec.get("step"), spec.get("origin", 0.0));
      break;
    case GeneratorKind::cantor1d:
      g.scalars = gen_cantor_1d(spec.get("contraction"), static_cast<int>(count("depth")));
      break;
    case GeneratorKind::four_corner:
      g.points = gen_four_corner(static_cast<int>(count("depth")));
      break;
    case GeneratorKind::product: {
      const Scale d(spec.get("delta"));
      g.product = gen_product(gen_ap(count("base_n"), spec.get("base_step")), gen_ap(count("fiber_n"), spec.get("fiber_step")), d,
                              spec.get("s", 0.0), spec.get("tau", 0.0));
      break;
    }
    case GeneratorKind::random_frostman:
      g.points = gen_random_frostman(count("n"), spec.get("exponent"), Scale(spec.get("delta")), spec.seed);
      break;
    case GeneratorKind::planted_collinear: {
      const Scale d(spec.get("delta"));
      g.product = gen_planted_collinear(gen_ap(count("base_n"), spec.get("base_step")),
                                        gen_ap(count("fiber_n"), spec.get("fiber_step")), spec.get("slope"),
                                        spec.get("intercept", 0.0), spec.get("jitter", 0.0), d, spec.seed);
      break;
    }
  }
  if (g.product) g.points = g.product->points();
  return g;
}

}  // namespace projlab
