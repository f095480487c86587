#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "geometry.hpp"

namespace spatialecon {

enum class WeightsKind {
  connectivity,
  inverse_distance,
  inverse_exponential,
  gaussian,
  inverse_distance_thresholded,
  custom,  // supplied directly as a matrix, no distance provenance
};

inline std::string_view to_string(WeightsKind kind) {
  switch (kind) {
    case WeightsKind::connectivity: return "connectivity";
    case WeightsKind::inverse_distance: return "inverse_distance";
    case WeightsKind::inverse_exponential: return "inverse_exponential";
    case WeightsKind::gaussian: return "gaussian";
    case WeightsKind::inverse_distance_thresholded: return "inverse_distance_thresholded";
    case WeightsKind::custom: return "custom";
  }
  return "custom";
}

inline WeightsKind parse_weights_kind(std::string_view name) {
  for (auto k : {WeightsKind::connectivity, WeightsKind::inverse_distance,
                 WeightsKind::inverse_exponential, WeightsKind::gaussian,
                 WeightsKind::inverse_distance_thresholded, WeightsKind::custom}) {
    if (to_string(k) == name) return k;
  }
  throw InputError(ErrorKind::invalid_input, "unknown weights transform '" + std::string(name) + "'");
}

/// Which transformation produced a weights matrix, with its parameters.
struct WeightsSpec {
  WeightsKind kind = WeightsKind::connectivity;
  std::optional<double> threshold;  // d-bar
  std::optional<double> gamma;      // distance decay exponent

  bool needs_threshold() const {
    return kind == WeightsKind::connectivity || kind == WeightsKind::gaussian ||
           kind == WeightsKind::inverse_distance_thresholded;
  }
  bool needs_gamma() const {
    return kind == WeightsKind::inverse_distance ||
           kind == WeightsKind::inverse_distance_thresholded;
  }

  void validate() const {
    if (needs_threshold() && !threshold) {
      throw InputError(ErrorKind::invalid_input,
                       std::string(to_string(kind)) + " weights require a distance threshold");
    }
    if (needs_gamma() && !gamma) {
      throw InputError(ErrorKind::invalid_input,
                       std::string(to_string(kind)) + " weights require gamma");
    }
    if (threshold && !(*threshold > 0.0 && std::isfinite(*threshold))) {
      throw InputError(ErrorKind::invalid_input, "distance threshold must be positive");
    }
    if (gamma && !(*gamma > 0.0 && std::isfinite(*gamma))) {
      throw InputError(ErrorKind::invalid_input, "gamma must be positive");
    }
  }

  friend bool operator==(const WeightsSpec&, const WeightsSpec&) = default;
};

/// Nonnegative N x N weights with zero diagonal, tagged with its provenance.
class SpatialWeights {
 public:
  SpatialWeights(Eigen::MatrixXd values, WeightsSpec spec, Metric metric, bool standardized)
      : values_(std::move(values)), spec_(spec), metric_(metric), standardized_(standardized) {
    if (values_.rows() != values_.cols()) {
      throw InputError(ErrorKind::invalid_input, "weights matrix must be square");
    }
    if (values_.rows() < 2) {
      throw InputError(ErrorKind::too_few_observations, "weights matrix needs N >= 2");
    }
    for (Eigen::Index i = 0; i < values_.rows(); ++i) {
      if (values_(i, i) != 0.0) {
        throw InputError(ErrorKind::invalid_input,
                         "weights diagonal must be zero (row " + std::to_string(i) + ")");
      }
    }
    if (!values_.allFinite() || (values_.array() < 0.0).any()) {
      throw InputError(ErrorKind::invalid_input, "weights must be finite and nonnegative");
    }
  }

  /// Wraps an arbitrary matrix (kind = custom, not standardized).
  static SpatialWeights from_matrix(Eigen::MatrixXd values) {
    return SpatialWeights(std::move(values), WeightsSpec{WeightsKind::custom, {}, {}},
                          Metric::euclidean, false);
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }
  const WeightsSpec& spec() const noexcept { return spec_; }
  Metric metric() const noexcept { return metric_; }
  bool standardized() const noexcept { return standardized_; }

  /// Sum of all entries (s0).
  double total() const { return values_.sum(); }

  /// Indices of observations whose row is entirely zero.
  std::vector<std::size_t> isolates() const {
    std::vector<std::size_t> out;
    for (Eigen::Index i = 0; i < values_.rows(); ++i) {
      if ((values_.row(i).array() == 0.0).all()) out.push_back(static_cast<std::size_t>(i));
    }
    return out;
  }

  std::size_t nonzeros() const { return static_cast<std::size_t>((values_.array() != 0.0).count()); }

  friend bool operator==(const SpatialWeights& a, const SpatialWeights& b) {
    return a.spec_ == b.spec_ && a.metric_ == b.metric_ && a.standardized_ == b.standardized_ &&
           a.values_.rows() == b.values_.rows() && (a.values_.array() == b.values_.array()).all();
  }

 private:
  Eigen::MatrixXd values_;
  WeightsSpec spec_;
  Metric metric_;
  bool standardized_;
};

/// Applies one of the distance-to-weight transformations. Threshold tests are inclusive.
inline SpatialWeights transform(const DistanceMatrix& d, const WeightsSpec& spec) {
  spec.validate();
  if (spec.kind == WeightsKind::custom) {
    throw InputError(ErrorKind::invalid_input, "custom weights cannot be built from distances");
  }
  const auto n = static_cast<Eigen::Index>(d.size());
  const bool inverse = spec.kind == WeightsKind::inverse_distance ||
                       spec.kind == WeightsKind::inverse_distance_thresholded;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double dij = d(i, j);
      if (inverse && dij == 0.0) {
        std::ostringstream msg;
        msg << "observations " << i << " and " << j
            << " share a location; inverse-distance weights are undefined";
        throw InputError(ErrorKind::coincident_points, msg.str());
      }
      double v = 0.0;
      switch (spec.kind) {
        case WeightsKind::connectivity:
          v = dij <= *spec.threshold ? 1.0 : 0.0;
          break;
        case WeightsKind::inverse_distance:
          v = std::pow(dij, -*spec.gamma);
          break;
        case WeightsKind::inverse_exponential:
          v = std::exp(-dij);
          break;
        case WeightsKind::gaussian:
          if (dij <= *spec.threshold) {
            const double r = dij / *spec.threshold;
            const double k = 1.0 - r * r;
            v = k * k;
          }
          break;
        case WeightsKind::inverse_distance_thresholded:
          v = dij <= *spec.threshold ? std::pow(dij, -*spec.gamma) : 0.0;
          break;
        case WeightsKind::custom:
          break;
      }
      w(i, j) = v;
    }
  }
  return SpatialWeights(std::move(w), spec, d.metric(), false);
}

/// Divides every row by its sum. All-zero rows (isolates) stay zero.
/// Re-standardizing an already standardized matrix is allowed and leaves it unchanged
/// up to rounding.
inline SpatialWeights row_standardize(const SpatialWeights& w) {
  Eigen::MatrixXd out = w.values();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double s = out.row(i).sum();
    if (s > 0.0) out.row(i) /= s;
  }
  return SpatialWeights(std::move(out), w.spec(), w.metric(), true);
}

enum class RegionExtent { large, small };

struct GuidelineHint {
  WeightsKind recommended;
  std::string rule;
  std::string threshold_advice;
};

/// Rule-of-thumb choice of transformation. Advisory only.
inline GuidelineHint guideline_hint(RegionExtent extent, bool local_influence) {
  GuidelineHint hint;
  if (local_influence) {
    hint.recommended = WeightsKind::connectivity;
    hint.rule = "influence is mainly local: use connectivity weights";
  } else if (extent == RegionExtent::large) {
    hint.recommended = WeightsKind::inverse_distance;
    hint.rule = "large study region: use inverse-distance weights";
  } else {
    hint.recommended = WeightsKind::inverse_exponential;
    hint.rule = "small study region: use inverse-exponential weights";
  }
  hint.threshold_advice =
      "when unsure of the true distance threshold, err on the small side rather than the "
      "large side";
  return hint;
}

}  // namespace spatialecon
