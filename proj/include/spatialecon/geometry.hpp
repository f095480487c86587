#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace spatialecon {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

enum class Metric { euclidean, manhattan };

inline std::string_view to_string(Metric m) {
  return m == Metric::euclidean ? "euclidean" : "manhattan";
}

inline Metric parse_metric(std::string_view name) {
  if (name == "euclidean") return Metric::euclidean;
  if (name == "manhattan") return Metric::manhattan;
  throw InputError(ErrorKind::invalid_input, "unknown metric '" + std::string(name) + "'");
}

/// A named numeric column attached to a PointSet.
struct Variable {
  std::string name;
  Eigen::VectorXd values;

  friend bool operator==(const Variable& a, const Variable& b) {
    return a.name == b.name && a.values.size() == b.values.size() &&
           (a.values.array() == b.values.array()).all();
  }
};

/// Observation labels, planar coordinates and attached variables.
/// The constructor enforces: N >= 2, unique ids, matching column lengths, finite values.
class PointSet {
 public:
  PointSet(std::vector<std::string> ids, std::vector<Point> coords,
           std::vector<Variable> variables = {})
      : ids_(std::move(ids)), coords_(std::move(coords)), variables_(std::move(variables)) {
    if (ids_.size() != coords_.size()) {
      throw InputError(ErrorKind::invalid_input, "ids and coordinates differ in length");
    }
    if (ids_.size() < 2) {
      throw InputError(ErrorKind::too_few_observations,
                       "a point set needs at least 2 observations, got " +
                           std::to_string(ids_.size()));
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : ids_) {
      if (!seen.insert(id).second) {
        throw InputError(ErrorKind::invalid_input, "duplicate observation id '" + id + "'");
      }
    }
    for (std::size_t i = 0; i < coords_.size(); ++i) {
      if (!std::isfinite(coords_[i].x) || !std::isfinite(coords_[i].y)) {
        throw InputError(ErrorKind::invalid_input,
                         "non-finite coordinate for observation '" + ids_[i] + "'");
      }
    }
    std::unordered_set<std::string> names;
    for (const auto& v : variables_) {
      if (!names.insert(v.name).second) {
        throw InputError(ErrorKind::invalid_input, "duplicate variable name '" + v.name + "'");
      }
      if (static_cast<std::size_t>(v.values.size()) != ids_.size()) {
        throw InputError(ErrorKind::invalid_input,
                         "variable '" + v.name + "' has the wrong number of values");
      }
      if (!v.values.allFinite()) {
        throw InputError(ErrorKind::invalid_input,
                         "variable '" + v.name + "' contains non-finite values");
      }
    }
  }

  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::vector<Point>& coords() const noexcept { return coords_; }
  const std::vector<Variable>& variables() const noexcept { return variables_; }

  bool has_variable(std::string_view name) const {
    for (const auto& v : variables_) {
      if (v.name == name) return true;
    }
    return false;
  }

  const Eigen::VectorXd& variable(std::string_view name) const {
    for (const auto& v : variables_) {
      if (v.name == name) return v.values;
    }
    throw InputError(ErrorKind::invalid_input, "no variable named '" + std::string(name) + "'");
  }

  friend bool operator==(const PointSet&, const PointSet&) = default;

 private:
  std::vector<std::string> ids_;
  std::vector<Point> coords_;
  std::vector<Variable> variables_;
};

inline double distance(const Point& p, const Point& q, Metric metric) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(q.x) ||
      !std::isfinite(q.y)) {
    throw InputError(ErrorKind::invalid_input, "non-finite coordinate");
  }
  const double dx = p.x - q.x;
  const double dy = p.y - q.y;
  switch (metric) {
    case Metric::euclidean: return std::sqrt(dy * dy + dx * dx);
    case Metric::manhattan: return std::abs(dy) + std::abs(dx);
  }
  return 0.0;
}

/// Dense symmetric matrix of pairwise distances with zero diagonal.
class DistanceMatrix {
 public:
  DistanceMatrix(Metric metric, Eigen::MatrixXd values)
      : metric_(metric), values_(std::move(values)) {}

  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  Metric metric() const noexcept { return metric_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }

 private:
  Metric metric_;
  Eigen::MatrixXd values_;
};

inline DistanceMatrix build_distance_matrix(std::span<const Point> points, Metric metric) {
  const auto n = static_cast<Eigen::Index>(points.size());
  if (n < 2) {
    throw InputError(ErrorKind::too_few_observations,
                     "distance matrix needs at least 2 points, got " + std::to_string(n));
  }
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = distance(points[i], points[j], metric);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return DistanceMatrix(metric, std::move(d));
}

inline DistanceMatrix build_distance_matrix(const PointSet& points, Metric metric) {
  return build_distance_matrix(std::span<const Point>(points.coords()), metric);
}

}  // namespace spatialecon
