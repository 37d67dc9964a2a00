#pragma once

// Command runner behind the `projlab` executable. Configuration is a flat
// key=value map (from a file and/or flags); run() executes one command and
// returns the process exit code: 0 success, 1 input/validation error,
// 2 invariant failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "projlab/additive.hpp"
#include "projlab/csv.hpp"
#include "projlab/delta_core.hpp"
#include "projlab/generators.hpp"
#include "projlab/incidence.hpp"
#include "projlab/product_construction.hpp"
#include "projlab/scale_blowup.hpp"

namespace projlab {

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"generate", "project-sweep", "kaufman", "product-experiment",
                                              "bsg",      "plunnecke",     "two-scale", "verify"};
  return names;
}

/// Every tunable constant with its default. Reports echo all of them.
inline const std::map<std::string, std::string>& config_defaults() {
  static const std::map<std::string, std::string> d{
      {"s", "1"},
      {"tau", "0.5"},
      {"eps0", "0"},
      {"seed", "0"},
      {"net", "64"},
      {"m", "1"},
      {"n", "1"},
      {"k", "2"},
      {"threads", "1"},
      {"threshold-ratio", "8"},
      {"threshold-base", "8"},
      {"threshold-fiber", "8"},
      {"threshold-assembled", "8"},
      {"threshold-mass", "0.25"},
      {"threshold-separation", "0.25"},
      {"threshold-triple", "0"},
  };
  return d;
}

/// Keys naming paths or words rather than numbers.
inline bool is_text_key(const std::string& key) {
  return key == "command" || key == "input" || key == "output" || key == "directions" || key == "left" ||
         key == "right" || key == "triples" || key == "kind";
}

struct ExperimentConfig {
  /// Raw key=value settings; defaults apply to missing numeric keys.
  std::map<std::string, std::string> values;

  void set(const std::string& key, const std::string& value) {
    const bool known = is_text_key(key) || key == "delta" || config_defaults().count(key) || key.rfind("param.", 0) == 0;
    if (!known) throw std::invalid_argument("unknown parameter '" + key + "'");
    values[key] = value;
  }

  bool has(const std::string& key) const { return values.count(key) > 0; }

  std::string text(const std::string& key, const std::string& fallback = "") const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
  }

  std::string require_text(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end() || it->second.empty()) throw std::invalid_argument("parameter '" + key + "' is required");
    return it->second;
  }

  double number(const std::string& key) const {
    auto it = values.find(key);
    std::string raw;
    if (it != values.end()) {
      raw = it->second;
    } else if (auto d = config_defaults().find(key); d != config_defaults().end()) {
      raw = d->second;
    } else {
      throw std::invalid_argument("parameter '" + key + "' is required");
    }
    char* end = nullptr;
    const double v = std::strtod(raw.c_str(), &end);
    if (raw.empty() || end != raw.c_str() + raw.size() || !std::isfinite(v)) {
      throw std::invalid_argument("parameter '" + key + "': '" + raw + "' is not a number");
    }
    return v;
  }

  std::uint64_t integer(const std::string& key, std::uint64_t lo = 0) const {
    const double v = number(key);
    if (v < static_cast<double>(lo) || v != std::floor(v) || v > 9.0e15) {
      throw std::invalid_argument("parameter '" + key + "' must be an integer >= " + std::to_string(lo));
    }
    return static_cast<std::uint64_t>(v);
  }

  Scale delta() const {
    const double d = number("delta");
    if (!(d > 0.0) || d > 0.5) throw std::invalid_argument("parameter 'delta' must lie in (0, 1/2]");
    return Scale(d);
  }

  double ranged(const std::string& key, double lo, double hi, bool open_lo) const {
    const double v = number(key);
    if ((open_lo ? !(v > lo) : !(v >= lo)) || v > hi) {
      std::ostringstream os;
      os << "parameter '" << key << "' must lie in " << (open_lo ? "(" : "[") << lo << ", " << hi << "]";
      throw std::invalid_argument(os.str());
    }
    return v;
  }

  /// Every effective setting (explicit values and defaults), sorted by key.
  Provenance provenance() const {
    std::map<std::string, std::string> all = config_defaults();
    for (const auto& [k, v] : values) all[k] = v;
    return Provenance(all.begin(), all.end());
  }
};

/// Reads `key=value` lines; blank lines and lines starting with '#' are skipped.
inline void load_config_text(ExperimentConfig& cfg, std::istream& is, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, line_no, "expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    try {
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
}

inline void load_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config '" + path + "'");
  load_config_text(cfg, is, path);
}

namespace cli_detail {

inline DirectionSet directions_for(const ExperimentConfig& cfg) {
  if (cfg.has("directions")) return read_directions(cfg.require_text("directions"));
  const auto n = cfg.integer("net", 1);
  return direction_net(n);
}

inline void emit(const ExperimentConfig& cfg, const std::string& body) {
  if (!cfg.has("output")) return;
  auto os = open_output(cfg.require_text("output"));
  os << body;
  if (!os) throw IoError("failed writing '" + cfg.require_text("output") + "'");
}

inline Provenance with_command(const ExperimentConfig& cfg) {
  Provenance p{{"command", cfg.text("command")}};
  for (const auto& kv : cfg.provenance()) {
    if (kv.first != "command") p.push_back(kv);
  }
  return p;
}

// ---- generate --------------------------------------------------------------

inline int cmd_generate(const ExperimentConfig& cfg, std::ostream& out) {
  GeneratorSpec spec;
  if (cfg.has("kind")) {
    spec.kind = parse_kind(cfg.require_text("kind"));
    for (const auto& [k, v] : cfg.values) {
      if (k.rfind("param.", 0) == 0) spec.params[k.substr(6)] = cfg.number(k);
    }
    spec.seed = cfg.integer("seed");
  } else {
    std::ifstream is(cfg.require_text("input"));
    if (!is) throw IoError("cannot open generator spec '" + cfg.require_text("input") + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    spec = GeneratorSpec::parse(ss.str());
  }
  const auto g = run_generator(spec);
  Provenance prov;
  std::istringstream lines(spec.serialize());
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    prov.emplace_back("generator." + line.substr(0, eq), line.substr(eq + 1));
  }
  std::ostringstream body;
  std::size_t count = 0;
  if (g.product) {
    write_product(body, *g.product, prov);
    count = g.product->size();
  } else if (g.points) {
    write_points(body, *g.points, prov);
    count = g.points->size();
  } else {
    write_scalars(body, *g.scalars, prov);
    count = g.scalars->size();
  }
  if (cfg.has("output")) {
    emit(cfg, body.str());
  } else {
    out << body.str();
    return 0;
  }
  out << "generated " << count << " " << (g.product ? "product points" : g.points ? "points" : "values") << " ("
      << kind_name(spec.kind) << ")\n";
  return 0;
}

// ---- project-sweep -----------------------------------------------------------

inline int cmd_project_sweep(const ExperimentConfig& cfg, std::ostream& out) {
  const auto p = read_points(cfg.require_text("input"));
  const auto delta = cfg.delta();
  const auto dirs = directions_for(cfg);
  const auto rows = projection_sweep(p, dirs, delta, static_cast<unsigned>(cfg.integer("threads", 1)));
  std::ostringstream body;
  write_sweep(body, rows, with_command(cfg));
  emit(cfg, body.str());
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].n_projection > rows[best].n_projection) best = i;
  }
  out << "points=" << p.size() << "\n";
  out << "directions=" << rows.size() << "\n";
  if (!rows.empty()) {
    out << "max_N=" << rows[best].n_projection << "\n";
    out << "argmax_theta=" << format_double(rows[best].theta) << "\n";
  }
  // Every row must satisfy the Cauchy–Schwarz pair bound.
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double n = static_cast<double>(p.size());
    const double bound = rows[i].n_projection ? n * n / static_cast<double>(rows[i].n_projection) - n : 0.0;
    if (static_cast<double>(rows[i].close_pairs) < bound) {
      std::ostringstream os;
      os << "close pairs " << rows[i].close_pairs << " below the Cauchy-Schwarz bound " << bound << " at theta="
         << format_double(rows[i].theta);
      throw InvariantError(os.str());
    }
  }
  return 0;
}

// ---- kaufman -------------------------------------------------------------------

inline int cmd_kaufman(const ExperimentConfig& cfg, std::ostream& out) {
  const auto p = read_points(cfg.require_text("input"));
  const auto delta = cfg.delta();
  const double s = cfg.ranged("s", 0.0, 2.0, true);
  const auto dirs = directions_for(cfg);
  const auto w = kaufman_witness(p, dirs, delta, s);
  std::ostringstream body;
  write_provenance(body, with_command(cfg));
  body << "points=" << p.size() << "\n";
  body << "directions=" << dirs.size() << "\n";
  body << "witness_index=" << w.index << "\n";
  body << "witness_theta=" << format_double(w.direction.theta()) << "\n";
  body << "N=" << w.n << "\n";
  body << "delta_pow_minus_s=" << format_double(std::pow(delta.value(), -s)) << "\n";
  body << "enough_directions=" << (w.enough_directions ? "true" : "false") << "\n";
  body << "one_set_ratio=" << format_double(w.one_set_ratio) << "\n";
  if (!find_close_directions(dirs, delta.value())) {
    const auto sum = direction_sum_upper_bound(p, dirs, delta);
    body << "pair_sum=" << sum.lhs << "\n";
    body << "pair_sum_ratio=" << format_double(sum.ratio) << "\n";
  }
  emit(cfg, body.str());
  out << body.str();
  return 0;
}

// ---- product-experiment --------------------------------------------------------

inline int cmd_product_experiment(const ExperimentConfig& cfg, std::ostream& out) {
  const auto delta = cfg.delta();
  const double s = cfg.ranged("s", 0.0, 2.0, true);
  const double tau = cfg.ranged("tau", 0.0, 2.0, false);
  const double eps = cfg.ranged("eps0", 0.0, 2.0, false);
  const auto raw = read_product(cfg.require_text("input"), delta, s, tau);
  ProductThresholds thr{cfg.number("threshold-base"), cfg.number("threshold-fiber"), cfg.number("threshold-assembled")};
  const auto p = build_product_like(raw.base, raw.fibers, delta, s, tau, thr);
  const auto dirs = directions_for(cfg);
  const auto r = product_experiment(p, dirs, delta, s, eps);
  std::ostringstream body;
  write_profile(body, r.profile, with_command(cfg));
  emit(cfg, body.str());
  out << "points=" << p.size() << "\n";
  out << "base_ratio=" << format_double(p.validation->base_ratio) << "\n";
  out << "fiber_ratio=" << format_double(p.validation->worst_fiber_ratio) << "\n";
  out << "assembled_ratio=" << format_double(p.validation->assembled_ratio) << "\n";
  out << "max_N=" << r.max_n << "\n";
  out << "target=" << format_double(r.target) << "\n";
  if (r.witness) {
    out << "witness_theta=" << format_double(dirs[*r.witness].theta()) << "\n";
  } else {
    out << "witness=none\n";
  }
  for (const auto& w : r.warnings) out << "warning=" << w << "\n";
  if (cfg.has("triples")) {
    const auto scan =
        good_triple_scan(p, dirs, delta, cfg.number("threshold-separation"), cfg.number("threshold-triple"));
    auto os = open_output(cfg.require_text("triples"));
    write_triples(os, p, scan.triples, with_command(cfg));
    out << "triples=" << scan.triples.size() << "\n";
    out << "triple_sum=" << scan.global_sum << "\n";
    out << "triple_cauchy_schwarz=" << format_double(scan.cauchy_schwarz_bound) << "\n";
  }
  return 0;
}

// ---- bsg ---------------------------------------------------------------------

inline int cmd_bsg(const ExperimentConfig& cfg, std::ostream& out) {
  const auto left = read_gridset(cfg.require_text("left"));
  const auto right = read_gridset(cfg.require_text("right"));
  const PairGraph g(left, right, read_pairs(cfg.require_text("input")));
  const double k = cfg.number("k");
  const auto r = bsg_extract(g, k);
  BsgResult check = r;
  fill_bsg_statistics(g, k, check);
  if (check.achieved_density != r.achieved_density || check.achieved_sumset != r.achieved_sumset ||
      check.achieved_edge_fraction != r.achieved_edge_fraction) {
    throw InvariantError("bsg statistics do not recompute from the returned subsets");
  }
  std::ostringstream body;
  write_provenance(body, with_command(cfg));
  body << "edges=" << g.size() << "\n";
  body << "a_sub_size=" << r.a_sub.size() << "\n";
  body << "b_sub_size=" << r.b_sub.size() << "\n";
  body << "achieved_density=" << format_double(r.achieved_density) << "\n";
  body << "achieved_sumset=" << r.achieved_sumset << "\n";
  body << "achieved_edge_fraction=" << format_double(r.achieved_edge_fraction) << "\n";
  body << "measured_exponent=" << format_double(r.measured_exponent) << "\n";
  body << "a_sub=";
  for (std::size_t i = 0; i < r.a_sub.size(); ++i) body << (i ? " " : "") << r.a_sub[i];
  body << "\nb_sub=";
  for (std::size_t i = 0; i < r.b_sub.size(); ++i) body << (i ? " " : "") << r.b_sub[i];
  body << "\n";
  emit(cfg, body.str());
  out << body.str();
  return 0;
}

// ---- plunnecke -------------------------------------------------------------------

inline int cmd_plunnecke(const ExperimentConfig& cfg, std::ostream& out) {
  const auto a = read_gridset(cfg.require_text("input"));
  const auto b = cfg.has("right") ? read_gridset(cfg.require_text("right")) : a;
  const auto m = static_cast<int>(cfg.integer("m"));
  const auto n = static_cast<int>(cfg.integer("n"));
  const auto r = plunnecke_report(a, b, m, n);
  std::ostringstream body;
  write_provenance(body, with_command(cfg));
  body << "C=" << r.c << "\n";
  body << "lhs=" << r.lhs << "\n";
  body << "rhs=" << format_double(r.rhs) << "\n";
  body << "holds=" << (r.holds ? "true" : "false") << "\n";
  emit(cfg, body.str());
  out << body.str();
  if (!r.holds) {
    std::ostringstream os;
    os << "|" << m << "B-" << n << "B| = " << r.lhs << " exceeds C^(m+n)|A| = " << r.rhs;
    throw InvariantError(os.str());
  }
  return 0;
}

// ---- two-scale -------------------------------------------------------------------

inline int cmd_two_scale(const ExperimentConfig& cfg, std::ostream& out) {
  const auto k = read_points(cfg.require_text("input"));
  const auto delta = cfg.delta();
  const auto mu = frostman_weights(k, 1.0, delta);
  TwoScaleOptions opt{cfg.number("threshold-mass"), cfg.number("threshold-ratio")};
  const auto ts = two_scale_decomposition(k, mu, delta, opt);
  const auto dir = std::filesystem::path(cfg.require_text("output"));
  std::filesystem::create_directories(dir);
  const auto prov = with_command(cfg);
  {
    auto os = open_output((dir / "anchors.csv").string());
    write_points(os, ts.anchors, prov);
  }
  {
    auto os = open_output((dir / "fine.csv").string());
    write_points(os, ts.fine, prov);
  }
  {
    auto os = open_output((dir / "balls.csv").string());
    write_provenance(os, prov);
    os << "cx,cy,level\n";
    for (const auto& b : ts.balls) os << format_double(b.center.x) << "," << format_double(b.center.y) << "," << b.level << "\n";
  }
  std::ostringstream manifest;
  write_provenance(manifest, prov);
  manifest << "delta=" << format_double(ts.delta) << "\n";
  manifest << "mass_threshold=" << format_double(ts.mass_threshold) << "\n";
  manifest << "ratio_threshold=" << format_double(ts.ratio_threshold) << "\n";
  manifest << "balls=" << ts.balls.size() << "\n";
  manifest << "fine_points=" << ts.fine.size() << "\n";
  manifest << "coarse_ratio=" << format_double(ts.coarse_ratio) << "\n";
  manifest << "fine_ratio=" << format_double(ts.fine_ratio) << "\n";
  manifest << "pruned=" << ts.pruned << "\n";
  {
    auto os = open_output((dir / "manifest").string());
    os << manifest.str();
  }
  out << manifest.str();
  return 0;
}

// ---- verify ----------------------------------------------------------------------

struct VerifyLog {
  std::ostringstream text;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::string first_failure;

  void record(bool ok, const std::string& file, const std::string& check, const std::string& detail) {
    text << (ok ? "PASS " : "FAIL ") << file << " " << check << " " << detail << "\n";
    if (ok) {
      ++passed;
    } else {
      if (failed == 0) first_failure = file + " " + check + " " + detail;
      ++failed;
    }
  }
};

inline std::map<std::string, std::string> parse_manifest_line(const std::string& line) {
  std::map<std::string, std::string> kv;
  std::istringstream is(line);
  for (std::string tok; is >> tok;) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("manifest token '" + tok + "' is not key=value");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

inline double manifest_number(const std::map<std::string, std::string>& kv, const std::string& key,
                              std::optional<double> fallback = std::nullopt) {
  auto it = kv.find(key);
  if (it == kv.end()) {
    if (fallback) return *fallback;
    throw std::invalid_argument("manifest entry needs '" + key + "'");
  }
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (end != it->second.c_str() + it->second.size()) throw std::invalid_argument("manifest value '" + it->second + "'");
  return v;
}

/// Smallest number of closed length-δ intervals covering the values (greedy, exact in 1-D).
inline std::size_t greedy_interval_cover(std::vector<double> v, double delta) {
  std::sort(v.begin(), v.end());
  std::size_t n = 0;
  std::size_t i = 0;
  while (i < v.size()) {
    const double start = v[i];
    ++n;
    while (i < v.size() && v[i] - start <= delta) ++i;
  }
  return n;
}

inline std::string fmt(double v) { return format_double(v); }

inline void verify_points(VerifyLog& log, const std::string& name, const PointSet2D& p,
                          const std::map<std::string, std::string>& kv) {
  const Scale delta(manifest_number(kv, "delta"));
  const double t = manifest_number(kv, "t", 1.0);
  const double thr = manifest_number(kv, "threshold", 8.0);
  const auto rep = check_delta_t(p, delta, t);
  log.record(rep.worst_ratio <= thr, name, "non_concentration", "ratio=" + fmt(rep.worst_ratio) + " threshold=" + fmt(thr));
  const auto n2 = covering_number_2d(p, delta);
  const auto dirs = direction_net(8);
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    auto values = projected_values(p, dirs[i]);
    const auto n1 = covering_number(values, delta);
    log.record(n1 <= 3 * n2, name, "projection_contraction[" + std::to_string(i) + "]",
               "N=" + std::to_string(n1) + " N2d=" + std::to_string(n2));
    std::uint64_t brute = 0;
    for (std::size_t a = 0; a < values.size(); ++a) {
      for (std::size_t b = 0; b < values.size(); ++b) {
        if (a != b && std::fabs(values[a] - values[b]) <= delta.value()) ++brute;
      }
    }
    const auto cs = cauchy_schwarz_lower_bound(p, dirs[i], delta);
    log.record(cs.actual == brute && cs.holds, name, "close_pairs[" + std::to_string(i) + "]",
               "sweep=" + std::to_string(cs.actual) + " brute=" + std::to_string(brute) + " bound=" + fmt(cs.bound));
  }
}

inline void verify_scalars(VerifyLog& log, const std::string& name, const ScalarSet& s,
                           const std::map<std::string, std::string>& kv) {
  const Scale delta(manifest_number(kv, "delta"));
  const double t = manifest_number(kv, "t", 1.0);
  const double thr = manifest_number(kv, "threshold", 8.0);
  const auto rep = check_delta_t(s, delta, t);
  log.record(rep.worst_ratio <= thr, name, "non_concentration", "ratio=" + fmt(rep.worst_ratio) + " threshold=" + fmt(thr));
  const auto grid = covering_number(s, delta);
  const auto greedy = greedy_interval_cover(std::vector<double>(s.begin(), s.end()), delta.value());
  log.record(greedy <= grid && grid <= 2 * greedy, name, "covering_sandwich",
             "grid=" + std::to_string(grid) + " greedy=" + std::to_string(greedy));
}

inline void verify_product(VerifyLog& log, const std::string& name, const std::string& path,
                           const std::map<std::string, std::string>& kv) {
  const Scale delta(manifest_number(kv, "delta"));
  const double s = manifest_number(kv, "s");
  const double tau = manifest_number(kv, "tau");
  const double thr = manifest_number(kv, "threshold", 8.0);
  const auto raw = read_product(path, delta, s, tau);
  try {
    const auto p = build_product_like(raw.base, raw.fibers, delta, s, tau, {thr, thr, thr});
    log.record(true, name, "product_validation", "assembled_ratio=" + fmt(p.validation->assembled_ratio));
    auto dirs = direction_net(static_cast<std::size_t>(manifest_number(kv, "net", 16.0)));
    const auto r = product_experiment(p, dirs, delta, s, 0.0);
    std::size_t fiber_max = 0;
    for (const auto& f : p.fibers) fiber_max = std::max(fiber_max, covering_number(f, delta));
    log.record(r.max_n >= fiber_max, name, "containment_bound",
               "max_N=" + std::to_string(r.max_n) + " max_fiber_N=" + std::to_string(fiber_max));
  } catch (const HypothesisError& e) {
    log.record(false, name, "product_validation", e.what());
  }
}

inline void verify_gridset(VerifyLog& log, const std::string& name, const GridSet& a,
                           const std::map<std::string, std::string>& kv) {
  const int total = static_cast<int>(manifest_number(kv, "max_order", 3.0));
  for (int m = 0; m <= total; ++m) {
    for (int n = 0; m + n <= total; ++n) {
      if (m + n == 0) continue;
      const auto r = plunnecke_report(a, a, m, n);
      log.record(r.holds, name, "plunnecke[m=" + std::to_string(m) + ",n=" + std::to_string(n) + "]",
                 "lhs=" + std::to_string(r.lhs) + " rhs=" + fmt(r.rhs));
    }
  }
}

inline std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void verify_spec(VerifyLog& log, const std::string& name, const std::filesystem::path& dir,
                        const std::map<std::string, std::string>& kv) {
  const auto spec = GeneratorSpec::parse(slurp((dir / kv.at("file")).string()));
  const auto expected = slurp((dir / kv.at("data")).string());
  ExperimentConfig gen;
  gen.set("command", "generate");
  gen.set("input", (dir / kv.at("file")).string());
  std::ostringstream produced;
  cmd_generate(gen, produced);
  log.record(produced.str() == expected, name, "regenerates", "data=" + kv.at("data") + " kind=" + kind_name(spec.kind));
}

inline void verify_pairs(VerifyLog& log, const std::string& name, const std::filesystem::path& dir,
                         const std::map<std::string, std::string>& kv) {
  const PairGraph g(read_gridset((dir / kv.at("left")).string()), read_gridset((dir / kv.at("right")).string()),
                    read_pairs((dir / kv.at("file")).string()));
  const double k = manifest_number(kv, "k");
  const auto r = bsg_extract(g, k);
  BsgResult again = r;
  fill_bsg_statistics(g, k, again);
  log.record(again.achieved_density == r.achieved_density && again.achieved_sumset == r.achieved_sumset &&
                 again.achieved_edge_fraction == r.achieved_edge_fraction,
             name, "bsg_statistics",
             "sumset=" + std::to_string(r.achieved_sumset) + " density=" + fmt(r.achieved_density));
}

/// Runs the invariant suite over the fixtures listed in <dir>/manifest.txt.
inline int cmd_verify(const ExperimentConfig& cfg, std::ostream& out) {
  const std::filesystem::path dir = cfg.require_text("input");
  const auto manifest_path = dir / "manifest.txt";
  std::ifstream is(manifest_path);
  if (!is) throw IoError("cannot open '" + manifest_path.string() + "'");
  VerifyLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::map<std::string, std::string> kv;
    try {
      kv = parse_manifest_line(line);
    } catch (const std::invalid_argument& e) {
      throw ParseError(manifest_path.string(), line_no, e.what());
    }
    if (!kv.count("file") || !kv.count("type")) throw ParseError(manifest_path.string(), line_no, "needs file= and type=");
    const auto& file = kv.at("file");
    const auto path = (dir / file).string();
    const auto& type = kv.at("type");
    if (type == "points") {
      verify_points(log, file, read_points(path), kv);
    } else if (type == "scalars") {
      verify_scalars(log, file, read_scalars(path), kv);
    } else if (type == "product") {
      verify_product(log, file, path, kv);
    } else if (type == "gridset") {
      verify_gridset(log, file, read_gridset(path), kv);
    } else if (type == "spec") {
      verify_spec(log, file, dir, kv);
    } else if (type == "pairs") {
      verify_pairs(log, file, dir, kv);
    } else {
      throw ParseError(manifest_path.string(), line_no, "unknown fixture type '" + type + "'");
    }
  }
  std::ostringstream body;
  body << "# command=verify\n";
  body << log.text.str();
  body << "passed=" << log.passed << "\n";
  body << "failed=" << log.failed << "\n";
  emit(cfg, body.str());
  out << "passed=" << log.passed << "\nfailed=" << log.failed << "\n";
  if (log.failed > 0) throw InvariantError("first failing check: " + log.first_failure);
  return 0;
}

}  // namespace cli_detail

/// Executes cfg's command. Errors are printed to `err`; the return value is
/// the process exit code.
inline int run(const ExperimentConfig& cfg, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const auto command = cfg.require_text("command");
    if (command == "generate") return cli_detail::cmd_generate(cfg, out);
    if (command == "project-sweep") return cli_detail::cmd_project_sweep(cfg, out);
    if (command == "kaufman") return cli_detail::cmd_kaufman(cfg, out);
    if (command == "product-experiment") return cli_detail::cmd_product_experiment(cfg, out);
    if (command == "bsg") return cli_detail::cmd_bsg(cfg, out);
    if (command == "plunnecke") return cli_detail::cmd_plunnecke(cfg, out);
    if (command == "two-scale") return cli_detail::cmd_two_scale(cfg, out);
    if (command == "verify") return cli_detail::cmd_verify(cfg, out);
    throw std::invalid_argument("unknown command '" + command + "'");
  } catch (const InvariantError& e) {
    err << "invariant failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace projlab
