#pragma once

// CSV readers and writers for every set type. Numbers print with 17
// significant digits so values round-trip; lines starting with '#' carry
// key=value provenance and are skipped by the readers (except `# delta=`
// on grid sets, which is read back).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "projlab/additive.hpp"
#include "projlab/delta_core.hpp"
#include "projlab/product_construction.hpp"

namespace projlab {

/// Malformed input; the message names the source and line.
class ParseError : public std::invalid_argument {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::invalid_argument(source + ":" + std::to_string(line) + ": " + what) {}
};

/// A file could not be opened or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Provenance = std::vector<std::pair<std::string, std::string>>;

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_provenance(std::ostream& os, const Provenance& prov) {
  for (const auto& [k, v] : prov) os << "# " << k << "=" << v << "\n";
}

/// Parsed body of a CSV file: header-checked data rows plus `# key=value` comments.
struct CsvTable {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
  std::map<std::string, std::string> comments;
  std::string source;

  double number(std::size_t row, std::size_t col) const {
    const auto& cell = rows[row][col];
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v)) {
      throw ParseError(source, line_numbers[row], "'" + cell + "' is not a finite number");
    }
    return v;
  }

  std::int64_t integer(std::size_t row, std::size_t col) const {
    const auto& cell = rows[row][col];
    char* end = nullptr;
    const long long v = std::strtoll(cell.c_str(), &end, 10);
    if (cell.empty() || end != cell.c_str() + cell.size()) {
      throw ParseError(source, line_numbers[row], "'" + cell + "' is not an integer");
    }
    return v;
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ' && c != '\t' && c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline CsvTable parse_csv(std::istream& is, const std::vector<std::string>& header, const std::string& source) {
  CsvTable t;
  t.source = source;
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto body = line.substr(line.find_first_not_of("# ") == std::string::npos ? line.size()
                                                                                       : line.find_first_not_of("# "));
      const auto eq = body.find('=');
      if (eq != std::string::npos) t.comments[body.substr(0, eq)] = body.substr(eq + 1);
      continue;
    }
    auto cells = detail::split_csv_line(line);
    if (!seen_header) {
      if (cells != header) {
        std::string want;
        for (std::size_t i = 0; i < header.size(); ++i) want += (i ? "," : "") + header[i];
        throw ParseError(source, line_no, "expected header '" + want + "'");
      }
      seen_header = true;
      continue;
    }
    if (cells.size() != header.size()) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(line_no);
  }
  if (!seen_header) throw ParseError(source, line_no == 0 ? 1 : line_no, "missing header");
  return t;
}

inline CsvTable read_csv_file(const std::string& path, const std::vector<std::string>& header) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "' for reading");
  return parse_csv(is, header, path);
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  return os;
}

// ---------------------------------------------------------------------------
// Typed readers
// ---------------------------------------------------------------------------

inline PointSet2D points_from(const CsvTable& t) {
  std::vector<Point2> pts;
  pts.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) pts.push_back({t.number(r, 0), t.number(r, 1)});
  return PointSet2D(std::move(pts));
}

inline PointSet2D read_points(const std::string& path) { return points_from(read_csv_file(path, {"x", "y"})); }

inline ScalarSet read_scalars(const std::string& path) {
  const auto t = read_csv_file(path, {"v"});
  std::vector<double> v;
  for (std::size_t r = 0; r < t.rows.size(); ++r) v.push_back(t.number(r, 0));
  return ScalarSet(std::move(v));
}

inline DirectionSet read_directions(const std::string& path) {
  const auto t = read_csv_file(path, {"theta"});
  DirectionSet d;
  for (std::size_t r = 0; r < t.rows.size(); ++r) d.push_back(Direction::from_angle(t.number(r, 0)));
  return d;
}

inline GridSet read_gridset(const std::string& path, std::optional<double> fallback_step = std::nullopt) {
  const auto t = read_csv_file(path, {"k"});
  double step = fallback_step.value_or(1.0);
  if (auto it = t.comments.find("delta"); it != t.comments.end()) {
    char* end = nullptr;
    step = std::strtod(it->second.c_str(), &end);
    if (end != it->second.c_str() + it->second.size() || !(step > 0.0)) {
      throw ParseError(path, 1, "bad '# delta=' header value '" + it->second + "'");
    }
  }
  std::vector<std::int64_t> ks;
  for (std::size_t r = 0; r < t.rows.size(); ++r) ks.push_back(t.integer(r, 0));
  return GridSet(step, std::move(ks));
}

inline std::vector<std::pair<std::size_t, std::size_t>> read_pairs(const std::string& path) {
  const auto t = read_csv_file(path, {"a_index", "b_index"});
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto a = t.integer(r, 0);
    const auto b = t.integer(r, 1);
    if (a < 0 || b < 0) throw ParseError(path, t.line_numbers[r], "negative index");
    out.emplace_back(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
  }
  return out;
}

/// Groups `b,a` rows into a base and fibers (unvalidated).
inline ProductLikeSet read_product(const std::string& path, Scale delta, double s, double tau) {
  const auto t = read_csv_file(path, {"b", "a"});
  std::map<double, std::vector<double>> groups;
  for (std::size_t r = 0; r < t.rows.size(); ++r) groups[t.number(r, 0)].push_back(t.number(r, 1));
  std::vector<double> base;
  std::vector<ScalarSet> fibers;
  for (auto& [b, as] : groups) {
    base.push_back(b);
    fibers.emplace_back(std::move(as));
  }
  return assemble_product(ScalarSet(std::move(base)), std::move(fibers), delta, s, tau);
}

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

inline void write_points(std::ostream& os, const PointSet2D& p, const Provenance& prov = {}) {
  write_provenance(os, prov);
  os << "x,y\n";
  for (const auto& q : p) os << format_double(q.x) << "," << format_double(q.y) << "\n";
}

inline void write_scalars(std::ostream& os, const ScalarSet& s, const Provenance& prov = {}) {
  write_provenance(os, prov);
  os << "v\n";
  for (double v : s) os << format_double(v) << "\n";
}

inline void write_directions(std::ostream& os, const DirectionSet& d, const Provenance& prov = {}) {
  write_provenance(os, prov);
  os << "theta\n";
  for (const auto& e : d) os << format_double(e.theta()) << "\n";
}

inline void write_gridset(std::ostream& os, const GridSet& g, const Provenance& prov = {}) {
  os << "# delta=" << format_double(g.step()) << "\n";
  write_provenance(os, prov);
  os << "k\n";
  for (auto k : g) os << k << "\n";
}

inline void write_pairs(std::ostream& os, const PairGraph& g, const Provenance& prov = {}) {
  write_provenance(os, prov);
  os << "a_index,b_index\n";
  for (const auto& [a, b] : g.edges()) os << a << "," << b << "\n";
}

inline void write_product(std::ostream& os, const ProductLikeSet& p, const Provenance& prov = {}) {
  write_provenance(os, prov);
  os << "b,a\n";
  for (std::size_t i = 0; i < p.fibers.size(); ++i) {
    for (double a : p.fibers[i]) os << format_double(p.base[i]) << "," << format_double(a) << "\n";
  }
}

inline void write_sweep(std::ostream& os, const std::vector<SweepRow>& rows, const Provenance& prov = {}) {
  write_provenance(os, prov);
  os << "theta,N_projection,close_pairs\n";
  for (const auto& r : rows) os << format_double(r.theta) << "," << r.n_projection << "," << r.close_pairs << "\n";
}

inline void write_profile(std::ostream& os, const std::vector<ProfileRow>& rows, const Provenance& prov = {}) {
  write_provenance(os, prov);
  os << "theta,N\n";
  for (const auto& r : rows) os << format_double(r.theta) << "," << r.n << "\n";
}

/// Triple rows with base values (not indices).
inline void write_triples(std::ostream& os, const ProductLikeSet& p, const std::vector<TripleRow>& rows,
                          const Provenance& prov = {}) {
  write_provenance(os, prov);
  os << "b1,b2,b3,intersection_size\n";
  for (const auto& r : rows) {
    os << format_double(p.base[r.b1]) << "," << format_double(p.base[r.b2]) << "," << format_double(p.base[r.b3])
       << "," << r.intersection_size << "\n";
  }
}

inline void write_weighted(std::ostream& os, const PointSet2D& p, const std::vector<double>& w,
                           const Provenance& prov = {}) {
  write_provenance(os, prov);
  os << "x,y,w\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    os << format_double(p[i].x) << "," << format_double(p[i].y) << "," << format_double(w[i]) << "\n";
  }
}

}  // namespace projlab
