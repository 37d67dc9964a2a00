// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "projlab/projlab.hpp"

using namespace projlab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << o.detail << std::endl;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// ---- 1 ----------------------------------------------------------------------

Outcome covering_sandwich() {
  const auto t0 = Clock::now();
  int violations = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    oracle::Uniform u(seed + 5000);
    const std::size_t n = 1 + u.below(500);
    const double delta = 0.001 + 0.1 * u.next();
    const auto v = oracle::random_values(n, seed);
    const auto grid = covering_number(ScalarSet(v), Scale(delta));
    const auto greedy = oracle::greedy_interval_cover(v, delta);
    if (!(greedy <= grid && grid <= 2 * greedy)) ++violations;
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < 1.0, "violations=" + std::to_string(violations) + " time=" + fmt(secs) + "s"};
}

// ---- 2 ----------------------------------------------------------------------

Outcome incidence_exactness() {
  int mismatches = 0;
  int cs_failures = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    oracle::Uniform u(seed + 6000);
    const std::size_t n = 2 + u.below(499);
    const double delta = std::ldexp(1.0, -(3 + static_cast<int>(u.below(6))));
    const auto pts = oracle::random_points(n, seed);
    const PointSet2D p(pts);
    for (const auto& e : direction_net(8, u.next())) {
      if (close_pairs(p, e, Scale(delta)) != oracle::close_pairs(pts, e.e1(), e.e2(), delta)) ++mismatches;
      if (!cauchy_schwarz_lower_bound(p, e, Scale(delta)).holds) ++cs_failures;
    }
  }
  return {mismatches == 0 && cs_failures == 0,
          "instances=800 mismatches=" + std::to_string(mismatches) + " cauchy_schwarz_failures=" +
              std::to_string(cs_failures)};
}

// ---- 3 ----------------------------------------------------------------------

Outcome kaufman_double_count() {
  std::vector<double> ratios;
  bool argmax_ok = true;
  std::string sizes;
  for (int d = 3; d <= 5; ++d) {
    const auto p = gen_four_corner(d);
    const Scale delta(std::pow(4.0, -d));
    const auto count = static_cast<std::size_t>(std::ceil(std::pow(delta.value(), -0.7) - 1e-9));
    const auto dirs = direction_net(count);
    sizes += (sizes.empty() ? "" : ",") + std::to_string(count);
    ratios.push_back(direction_sum_upper_bound(p, dirs, delta).ratio);
    const auto fast = kaufman_witness(p, dirs, delta, 0.7, true);
    const auto full = kaufman_witness(p, dirs, delta, 0.7, false);
    std::size_t best = 0;
    std::size_t arg = 0;
    const auto rows = projection_sweep(p, dirs, delta);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].n_projection > best) {
        best = rows[i].n_projection;
        arg = i;
      }
    }
    argmax_ok = argmax_ok && fast.index == full.index && fast.n == full.n && full.index == arg && full.n == best;
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  const double spread = *hi / *lo;
  return {spread <= 4.0 && argmax_ok,
          "|E|=" + sizes + " ratios=" + fmt(ratios[0]) + "," + fmt(ratios[1]) + "," + fmt(ratios[2]) +
              " spread=" + fmt(spread) + " argmax_exact=" + (argmax_ok ? "yes" : "no")};
}

// ---- 4 ----------------------------------------------------------------------

Outcome plunnecke_exhaustive() {
  const auto t0 = Clock::now();
  std::size_t checks = 0;
  std::size_t violations = 0;
  for (unsigned mask = 0; mask < 1024; ++mask) {
    const auto a = oracle::subset_of_ten(mask);
    if (a.size() < 2) continue;
    const GridSet g(1.0, {a.begin(), a.end()});
    for (int m = 0; m <= 4; ++m) {
      for (int n = 0; m + n <= 4; ++n) {
        if (m + n == 0) continue;
        ++checks;
        if (!plunnecke_report(g, g, m, n).holds) ++violations;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < 10.0, "checks=" + std::to_string(checks) + " violations=" +
                                              std::to_string(violations) + " time=" + fmt(secs) + "s"};
}

// ---- 5 ----------------------------------------------------------------------

Outcome bsg_validity() {
  int graphs = 0;
  int mismatches = 0;
  const double k = 4.0;
  for (std::uint64_t seed = 0; graphs < 50 && seed < 1000; ++seed) {
    oracle::Uniform u(seed + 7000);
    const std::size_t na = 8 + u.below(57);
    const std::size_t nb = 8 + u.below(57);
    const double p = 0.3 + 0.6 * u.next();
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < na; ++i) {
      for (std::size_t j = 0; j < nb; ++j) {
        if (u.next() < p) edges.emplace_back(i, j);
      }
    }
    const PairGraph g(grid_interval(static_cast<std::int64_t>(na)), grid_interval(static_cast<std::int64_t>(nb)),
                      edges);
    const double full = static_cast<double>(na * nb);
    if (static_cast<double>(g.size()) < full / k ||
        static_cast<double>(restricted_sumset(g).size()) > k * std::sqrt(full)) {
      continue;
    }
    ++graphs;
    const auto r = bsg_extract(g, k);
    std::set<std::size_t> as(r.a_indices.begin(), r.a_indices.end());
    std::set<std::size_t> bs(r.b_indices.begin(), r.b_indices.end());
    std::size_t kept = 0;
    for (const auto& [i, j] : g.edges()) kept += as.count(i) && bs.count(j);
    const double density = static_cast<double>(kept) / static_cast<double>(as.size() * bs.size());
    const double fraction = static_cast<double>(kept) / full;
    std::vector<long long> av(r.a_sub.begin(), r.a_sub.end());
    std::vector<long long> bv(r.b_sub.begin(), r.b_sub.end());
    const auto sumset_size = oracle::sumset(av, bv).size();
    if (density != r.achieved_density || fraction != r.achieved_edge_fraction || sumset_size != r.achieved_sumset) {
      ++mismatches;
    }
  }
  const std::int64_t n = 32;
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < n; ++j) all.emplace_back(i, j);
  }
  const auto ap = grid_interval(n);
  const auto r = bsg_extract(PairGraph(ap, ap, all), 2.0);
  const bool ap_ok = r.a_sub == ap && r.b_sub == ap && r.achieved_sumset == static_cast<std::uint64_t>(2 * n - 1);
  return {graphs == 50 && mismatches == 0 && ap_ok,
          "graphs=" + std::to_string(graphs) + " mismatches=" + std::to_string(mismatches) +
              " complete_ap_sumset=" + std::to_string(r.achieved_sumset)};
}

// ---- 6 ----------------------------------------------------------------------

using TubeMap = std::map<std::pair<std::size_t, std::int64_t>, std::size_t>;

/// Tubes of the pairs between two fibers: first direction whose grid cells agree.
TubeMap brute_tubes(const ProductLikeSet& p, std::size_t b1, std::size_t b2, const DirectionSet& dirs) {
  TubeMap out;
  for (double x : p.fibers[b1]) {
    for (double y : p.fibers[b2]) {
      for (std::size_t d = 0; d < dirs.size(); ++d) {
        const auto c1 = grid_cell(dirs[d].dot({x, p.base[b1]}), p.delta);
        const auto c2 = grid_cell(dirs[d].dot({y, p.base[b2]}), p.delta);
        if (c1 == c2) {
          ++out[{d, c1}];
          break;
        }
      }
    }
  }
  return out;
}

std::size_t brute_common(const ProductLikeSet& p, std::size_t b1, std::size_t b2, std::size_t b3,
                         const DirectionSet& dirs) {
  const auto t12 = brute_tubes(p, b1, b2, dirs);
  const auto t23 = brute_tubes(p, b2, b3, dirs);
  std::size_t c = 0;
  for (const auto& [tube, n] : t12) c += t23.count(tube);
  return c;
}

DirectionSet planted_dirs(double slope, double delta) {
  const auto planted = Direction::from_components(1.0, -slope);
  DirectionSet dirs{planted};
  for (const auto& e : direction_net(8, -std::numbers::pi / 6, std::numbers::pi / 3)) {
    const double a = angular_distance(e, planted);
    if (a > 8 * delta && a < std::numbers::pi - 8 * delta) dirs.push_back(e);
  }
  return dirs;
}

Outcome product_identities() {
  int instances = 0;
  int mismatches = 0;
  const double d6 = 1.0 / 64;
  const auto horizontal = direction_net(8, -std::numbers::pi / 6, std::numbers::pi / 3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto raw = gen_random_product(gen_ap(5, 0.25), 12, Scale(d6), seed);
    const auto p = roughly_horizontal_filter(raw, horizontal).product;
    const auto t = triple_intersections(p, 0, 2, 4, horizontal, Scale(d6));
    ++instances;
    if (t.g_prime.size() != t.common.size() || t.common.size() != brute_common(p, 0, 2, 4, horizontal)) ++mismatches;
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const double slope = 0.1 + 0.05 * static_cast<double>(seed);
    const auto p = gen_planted_collinear(gen_ap(3, 0.5), gen_ap(16, 4 * d6), slope, 0.0, d6 / 4, Scale(d6), seed);
    const auto dirs = planted_dirs(slope, d6);
    const auto t = triple_intersections(p, 0, 1, 2, dirs, Scale(d6));
    ++instances;
    if (t.g_prime.size() != t.common.size() || t.common.size() != brute_common(p, 0, 1, 2, dirs)) ++mismatches;
  }

  double worst_proj = 0.0;
  oracle::Uniform u(8000);
  for (int i = 0; i < 10000; ++i) {
    const double x = u.next();
    const double y = u.next();
    worst_proj = std::max(worst_proj, std::fabs(triple_projection(x, y, 0.0, 0.5, 1.0) - (x + y)));
  }

  const double d10 = std::ldexp(1.0, -10);
  const double slope = 0.3;
  const auto base = gen_ap(3, 0.5);
  const auto fiber = gen_ap(64, 8 * d10);
  const auto dirs = planted_dirs(slope, d10);
  auto compression = [&](double jitter) {
    const auto p = gen_planted_collinear(base, fiber, slope, 0.0, jitter, Scale(d10), 11);
    const auto t = triple_intersections(p, 0, 1, 2, dirs, Scale(d10));
    return compression_check(g_prime_values(p, t), base[0], base[1], base[2], Scale(d10), 1.0).n;
  };
  const auto clean = compression(0.0);
  const auto jittered = compression(d10 / 2);
  // Jitter may only lose pairs from G', so the tolerance is one-sided.
  const bool within = jittered <= clean + 2;
  return {mismatches == 0 && worst_proj <= 1e-12 && within,
          "instances=" + std::to_string(instances) + " mismatches=" + std::to_string(mismatches) +
              " projection_err=" + fmt(worst_proj) + " compression_clean=" + std::to_string(clean) +
              " compression_jittered=" + std::to_string(jittered)};
}

// ---- 7 ----------------------------------------------------------------------

Outcome two_scale_pipeline() {
  const Scale d(std::ldexp(1.0, -8));
  std::string detail;
  bool ok = true;
  std::vector<Point2> grid;
  for (int i = 0; i < 256; ++i) {
    for (int j = 0; j < 256; ++j) grid.push_back({i * d.value(), j * d.value()});
  }
  const std::vector<std::pair<std::string, PointSet2D>> inputs{
      {"random_frostman", gen_random_frostman(256, 1.0, d, 0)}, {"full_grid", PointSet2D(grid, d.value())}};
  for (const auto& [name, k] : inputs) {
    const auto ts = two_scale_decomposition(k, frostman_weights(k, 1.0, d), d);
    const double fine = check_delta_t(ts.fine, d, 1.0).worst_ratio;
    const double coarse = check_delta_t(ts.anchors, d.sqrt(), 1.0).worst_ratio;
    ok = ok && fine <= 8.0 && coarse <= 8.0;
    detail += name + ":fine=" + fmt(fine) + ",coarse=" + fmt(coarse) + ",balls=" + std::to_string(ts.balls.size()) + " ";
  }
  int failures_pick = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    oracle::Uniform u(seed + 9000);
    const std::size_t n = 1 + u.below(60);
    const PointSet2D pts(oracle::random_points(n, seed + 9000));
    WeightedPointSet mu;
    mu.points = pts;
    for (std::size_t i = 0; i < n; ++i) mu.weights.push_back(u.next() < 0.2 ? 0.0 : u.next());
    mu.weights[u.below(n)] += 1e-6;
    for (double w : mu.weights) mu.total_mass += w;
    const auto cover = efficient_cover(pts, Scale(0.5), std::ldexp(1.0, -static_cast<int>(2 + u.below(8))));
    try {
      pick_scale(cover, mu);
    } catch (const std::exception&) {
      ++failures_pick;
    }
  }
  ok = ok && failures_pick == 0;
  return {ok, detail + "pick_scale_failures=" + std::to_string(failures_pick) + "/1000"};
}

// ---- 8 ----------------------------------------------------------------------

Outcome dilation_exactness() {
  int unequal = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const CounterRng rng(seed, 31);
    const int j = 2 * (2 + static_cast<int>(rng.below(0, 4)));  // δ = 4^-2 .. 4^-5
    const Scale d(std::ldexp(1.0, -j));
    const auto cells = static_cast<std::size_t>(1) << j;
    const std::size_t base_n = 2 + rng.below(1, 6);
    const std::size_t fiber_n = 1 + rng.below(2, std::min<std::size_t>(cells, 40));
    const auto f = gen_random_product(gen_ap(base_n, std::ldexp(1.0, -3)), fiber_n, d, seed);
    const auto root_cells = static_cast<std::uint64_t>(1) << (j / 2);
    const double t = static_cast<double>(rng.below(3, root_cells + 1)) * d.value();
    if (!rescaled_projection_identity(f, t, d).equal()) ++unequal;
  }
  return {unequal == 0, "instances=50 unequal=" + std::to_string(unequal)};
}

// ---- 9 ----------------------------------------------------------------------

Outcome containment_bound() {
  int runs = 0;
  int violations = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const CounterRng rng(seed, 41);
    const Scale d(std::ldexp(1.0, -(5 + static_cast<int>(rng.below(0, 4)))));
    ProductLikeSet p;
    if (seed % 2 == 0) {
      p = gen_random_product(gen_ap(2 + rng.below(1, 6), 0.125), 1 + rng.below(2, 30), d, seed);
    } else {
      p = gen_planted_collinear(gen_ap(2 + rng.below(1, 6), 0.125), gen_ap(1 + rng.below(2, 20), 2 * d.value()),
                                rng.uniform(3), 0.0, d.value() * rng.uniform(4) / 2, d, seed);
    }
    const auto dirs = direction_net(4 + rng.below(5, 60));  // starts at θ = 0
    const auto x = product_experiment(p, dirs, d, 0.5, 0.0);
    std::size_t fiber_max = 0;
    for (const auto& f : p.fibers) fiber_max = std::max(fiber_max, covering_number(f, d));
    ++runs;
    if (x.max_n < fiber_max) ++violations;
  }
  return {violations == 0, "runs=" + std::to_string(runs) + " violations=" + std::to_string(violations)};
}

// ---- 10 ---------------------------------------------------------------------

int run_shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Outcome end_to_end(Clock::time_point suite_start) {
  const auto dir = fs::temp_directory_path() / "projlab_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string base = std::string(PROJLAB_CLI_PATH) + " verify --input " + PROJLAB_FIXTURES_DIR + " --output ";
  const int c1 = run_shell(base + (dir / "r1.txt").string() + " > /dev/null");
  const int c2 = run_shell(base + (dir / "r2.txt").string() + " > /dev/null");
  const auto r1 = slurp(dir / "r1.txt");
  const auto r2 = slurp(dir / "r2.txt");
  fs::remove_all(dir);
  const bool identical = !r1.empty() && r1 == r2;
  const double secs = seconds_since(suite_start);
  return {c1 == 0 && c2 == 0 && identical && secs < 60.0,
          "exit=" + std::to_string(c1) + "," + std::to_string(c2) + " identical=" + (identical ? "yes" : "no") +
              " report_bytes=" + std::to_string(r1.size()) + " suite_time=" + fmt(secs) + "s"};
}

}  // namespace

int main() {
  const auto start = Clock::now();
  report(1, "covering number sandwich", covering_sandwich);
  report(2, "close-pair exactness", incidence_exactness);
  report(3, "double count and witness argmax", kaufman_double_count);
  report(4, "iterated sumset bound, exhaustive", plunnecke_exhaustive);
  report(5, "pair-graph extraction statistics", bsg_validity);
  report(6, "tube-family identities", product_identities);
  report(7, "two-scale decomposition", two_scale_pipeline);
  report(8, "dilation exactness", dilation_exactness);
  report(9, "containment bound", containment_bound);
  report(10, "end-to-end determinism", [&] { return end_to_end(start); });
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
