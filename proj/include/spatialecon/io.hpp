#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "geometry.hpp"
#include "weights.hpp"

namespace spatialecon {

/// Shortest decimal that parses back to exactly `v`.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

[[noreturn]] inline void parse_fail(const std::string& source, std::size_t line, const std::string& msg) {
  throw InputError(ErrorKind::parse_error, source + ":" + std::to_string(line) + ": " + msg);
}

inline bool parse_finite(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

template <class Int>
inline bool parse_int(std::string_view s, Int& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(ErrorKind::parse_error, "cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError(ErrorKind::invalid_input, "cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace detail

/// Comma-separated table with a header row. Columns `id`, `x` and `y` are required and
/// hold the label and planar coordinates; every other column is a numeric variable.
inline PointSet read_dataset(std::istream& in, const std::string& source = "<stream>") {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    for (auto f : detail::split(line, ',')) header.emplace_back(f);
    break;
  }
  if (header.empty()) detail::parse_fail(source, lineno, "missing header row");
  const auto col = [&](std::string_view name) -> std::ptrdiff_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<std::ptrdiff_t>(i);
    }
    return -1;
  };
  for (const char* req : {"id", "x", "y"}) {
    if (col(req) < 0) detail::parse_fail(source, lineno, std::string("missing required column '") + req + "'");
  }
  {
    std::set<std::string> seen;
    for (const auto& h : header) {
      if (h.empty()) detail::parse_fail(source, lineno, "empty column name");
      if (!seen.insert(h).second) detail::parse_fail(source, lineno, "duplicate column '" + h + "'");
    }
  }
  const auto id_col = static_cast<std::size_t>(col("id"));
  const auto x_col = static_cast<std::size_t>(col("x"));
  const auto y_col = static_cast<std::size_t>(col("y"));
  std::vector<std::size_t> var_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i != id_col && i != x_col && i != y_col) var_cols.push_back(i);
  }

  std::vector<std::string> ids;
  std::vector<Point> coords;
  std::vector<std::vector<double>> columns(var_cols.size());
  std::unordered_map<std::string, std::size_t> first_seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split(line, ',');
    if (fields.size() != header.size()) {
      detail::parse_fail(source, lineno, "expected " + std::to_string(header.size()) + " fields, found " +
                                             std::to_string(fields.size()));
    }
    std::string id(fields[id_col]);
    if (id.empty()) detail::parse_fail(source, lineno, "empty id");
    if (const auto [it, inserted] = first_seen.emplace(id, lineno); !inserted) {
      detail::parse_fail(source, lineno, "duplicate id '" + id + "' (first seen on line " +
                                             std::to_string(it->second) + ")");
    }
    const auto number = [&](std::size_t c) {
      double v = 0.0;
      if (!detail::parse_finite(fields[c], v)) {
        detail::parse_fail(source, lineno, "column '" + header[c] + "': '" + std::string(fields[c]) +
                                               "' is not a finite number");
      }
      return v;
    };
    coords.push_back({number(x_col), number(y_col)});
    for (std::size_t v = 0; v < var_cols.size(); ++v) columns[v].push_back(number(var_cols[v]));
    ids.push_back(std::move(id));
  }
  if (ids.size() < 2) detail::parse_fail(source, lineno, "need at least 2 data rows");
  std::vector<Variable> vars;
  for (std::size_t v = 0; v < var_cols.size(); ++v) {
    vars.push_back({header[var_cols[v]], Eigen::Map<const Eigen::VectorXd>(
                                             columns[v].data(), static_cast<Eigen::Index>(columns[v].size()))});
  }
  return PointSet(std::move(ids), std::move(coords), std::move(vars));
}

inline PointSet load_dataset(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_dataset(in, path.string());
}

inline void write_dataset(std::ostream& out, const PointSet& points) {
  out << "id,x,y";
  for (const auto& v : points.variables()) out << ',' << v.name;
  out << '\n';
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& id = points.ids()[i];
    if (id.find_first_of(",\n\r") != std::string::npos || detail::trim(id) != id) {
      throw InputError(ErrorKind::invalid_input, "id '" + id + "' cannot be written to a CSV field");
    }
    out << id << ',' << format_double(points.coords()[i].x) << ',' << format_double(points.coords()[i].y);
    for (const auto& v : points.variables()) out << ',' << format_double(v.values(static_cast<Eigen::Index>(i)));
    out << '\n';
  }
}

inline void save_dataset(const std::filesystem::path& path, const PointSet& points) {
  auto out = detail::open_out(path);
  write_dataset(out, points);
}

/// Text interchange format for weights:
///   N standardized(0|1) metric transform [threshold=..] [gamma=..]
///   i j w            (zero-based, one line per nonzero entry, row-major)
inline void write_weights(std::ostream& out, const SpatialWeights& w) {
  out << w.size() << ' ' << (w.standardized() ? 1 : 0) << ' ' << to_string(w.metric()) << ' '
      << to_string(w.spec().kind);
  if (w.spec().threshold) out << " threshold=" << format_double(*w.spec().threshold);
  if (w.spec().gamma) out << " gamma=" << format_double(*w.spec().gamma);
  out << '\n';
  const Eigen::MatrixXd& m = w.values();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) != 0.0) out << i << ' ' << j << ' ' << format_double(m(i, j)) << '\n';
    }
  }
}

inline void save_weights(const std::filesystem::path& path, const SpatialWeights& w) {
  auto out = detail::open_out(path);
  write_weights(out, w);
}

inline SpatialWeights read_weights(std::istream& in, const std::string& source = "<stream>") {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string_view> head;
  std::string head_line;
  while (std::getline(in, head_line)) {
    ++lineno;
    head = detail::split_ws(head_line);
    if (!head.empty()) break;
  }
  if (head.size() < 4) detail::parse_fail(source, lineno, "header must be 'N standardized metric transform [params]'");
  std::size_t n = 0;
  if (!detail::parse_int(head[0], n) || n < 2) detail::parse_fail(source, lineno, "invalid N '" + std::string(head[0]) + "'");
  if (head[1] != "0" && head[1] != "1") detail::parse_fail(source, lineno, "standardized flag must be 0 or 1");
  const bool standardized = head[1] == "1";
  Metric metric{};
  WeightsSpec spec;
  try {
    metric = parse_metric(head[2]);
    spec.kind = parse_weights_kind(head[3]);
  } catch (const InputError& e) {
    detail::parse_fail(source, lineno, e.what());
  }
  for (std::size_t t = 4; t < head.size(); ++t) {
    const auto eq = head[t].find('=');
    double v = 0.0;
    if (eq == std::string_view::npos || !detail::parse_finite(head[t].substr(eq + 1), v)) {
      detail::parse_fail(source, lineno, "malformed parameter '" + std::string(head[t]) + "'");
    }
    const auto key = head[t].substr(0, eq);
    if (key == "threshold") {
      spec.threshold = v;
    } else if (key == "gamma") {
      spec.gamma = v;
    } else {
      detail::parse_fail(source, lineno, "unknown parameter '" + std::string(key) + "'");
    }
  }

  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(nn, nn);
  std::vector<bool> seen(n * n, false);
  while (std::getline(in, line)) {
    ++lineno;
    const auto f = detail::split_ws(line);
    if (f.empty()) continue;
    std::size_t i = 0, j = 0;
    double v = 0.0;
    if (f.size() != 3 || !detail::parse_int(f[0], i) || !detail::parse_int(f[1], j) || !detail::parse_finite(f[2], v)) {
      detail::parse_fail(source, lineno, "expected 'i j w'");
    }
    if (i >= n || j >= n) detail::parse_fail(source, lineno, "index out of range for N = " + std::to_string(n));
    if (i == j) detail::parse_fail(source, lineno, "diagonal entry (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    if (!(v > 0.0)) detail::parse_fail(source, lineno, "weight must be positive");
    if (seen[i * n + j]) {
      detail::parse_fail(source, lineno, "duplicate entry (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    }
    seen[i * n + j] = true;
    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
  }
  return SpatialWeights(std::move(m), spec, metric, standardized);
}

inline SpatialWeights load_weights(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_weights(in, path.string());
}

}  // namespace spatialecon
