#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "weights.hpp"

namespace spatialecon {

namespace detail {

inline void check_conformable(const Eigen::VectorXd& y, const SpatialWeights& w) {
  if (static_cast<std::size_t>(y.size()) != w.size()) {
    throw InputError(ErrorKind::invalid_input,
                     "variable has " + std::to_string(y.size()) + " values but weights are " +
                         std::to_string(w.size()) + " x " + std::to_string(w.size()));
  }
  if (!y.allFinite()) throw InputError(ErrorKind::invalid_input, "variable contains non-finite values");
}

/// Deviations from the mean; rejects constant input.
inline Eigen::VectorXd deviations(const Eigen::VectorXd& y) {
  if ((y.array() == y(0)).all()) {
    throw InputError(ErrorKind::zero_variance, "variable is constant");
  }
  Eigen::VectorXd z = y.array() - y.mean();
  if (z.squaredNorm() == 0.0) throw InputError(ErrorKind::zero_variance, "variable is constant");
  return z;
}

inline double positive_total(const SpatialWeights& w) {
  const double s0 = w.total();
  if (!(s0 > 0.0)) throw InputError(ErrorKind::empty_weights, "weights matrix has no positive entry");
  return s0;
}

inline double moran_from_deviations(const Eigen::VectorXd& z, const Eigen::MatrixXd& w, double s0) {
  const double n = static_cast<double>(z.size());
  return (n / s0) * z.dot(w * z) / z.squaredNorm();
}

}  // namespace detail

struct MoranValue {
  double statistic = 0.0;
  double s0 = 0.0;  // sum of all weights
};

inline MoranValue global_moran(const Eigen::VectorXd& y, const SpatialWeights& w) {
  detail::check_conformable(y, w);
  if (y.size() < 3) throw InputError(ErrorKind::too_few_observations, "Moran's I needs N >= 3");
  const double s0 = detail::positive_total(w);
  const Eigen::VectorXd z = detail::deviations(y);
  return {detail::moran_from_deviations(z, w.values(), s0), s0};
}

struct MoranMoments {
  double expected = 0.0;
  double variance = 0.0;
};

/// Mean and variance of Moran's I under the normality assumption.
inline MoranMoments moran_moments(const SpatialWeights& w, std::size_t n) {
  if (n < 4) throw InputError(ErrorKind::sample_too_small, "Moran moments need N >= 4");
  if (n != w.size()) throw InputError(ErrorKind::invalid_input, "N does not match weights size");
  const Eigen::MatrixXd& m = w.values();
  const double s0 = detail::positive_total(w);
  const double s1 = 0.5 * (m + m.transpose()).squaredNorm();
  const Eigen::VectorXd margins = m.rowwise().sum() + m.colwise().sum().transpose();
  const double s2 = margins.squaredNorm();
  const double nn = static_cast<double>(n);
  const double expected = -1.0 / (nn - 1.0);
  const double second = (nn * nn * s1 - nn * s2 + 3.0 * s0 * s0) / (s0 * s0 * (nn * nn - 1.0));
  return {expected, second - expected * expected};
}

struct MoranReport {
  double statistic = 0.0;
  double expected = 0.0;
  double variance = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  Alternative alternative = Alternative::two_sided;
  double s0 = 0.0;
  std::size_t n = 0;

  static constexpr std::string_view reference = "standard normal (z-test)";
};

inline MoranReport moran_test(const Eigen::VectorXd& y, const SpatialWeights& w,
                              Alternative alternative = Alternative::two_sided) {
  const MoranValue value = global_moran(y, w);
  const MoranMoments moments = moran_moments(w, static_cast<std::size_t>(y.size()));
  MoranReport r;
  r.statistic = value.statistic;
  r.expected = moments.expected;
  r.variance = moments.variance;
  if (!(moments.variance > 0.0)) {
    throw NumericalError(ErrorKind::ill_conditioned_information, "Var[I] is not positive");
  }
  r.z = (value.statistic - moments.expected) / std::sqrt(moments.variance);
  r.p_value = normal_p_value(r.z, alternative);
  r.alternative = alternative;
  r.s0 = value.s0;
  r.n = static_cast<std::size_t>(y.size());
  return r;
}

/// I_i = (y_i - mean) * sum_j w_ij (y_j - mean), in the units of y squared.
inline Eigen::VectorXd local_moran(const Eigen::VectorXd& y, const SpatialWeights& w) {
  detail::check_conformable(y, w);
  if (y.size() < 3) throw InputError(ErrorKind::too_few_observations, "local Moran needs N >= 3");
  detail::positive_total(w);
  const Eigen::VectorXd z = detail::deviations(y);
  return z.cwiseProduct(w.values() * z);
}

struct LocalRecord {
  double value = 0.0;     // I_i as defined above
  double scaled = 0.0;    // I_i / m2, the scale on which the moments hold
  double expected = 0.0;  // -w_i. / (N - 1)
  double variance = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  bool significant = false;
  bool testable = true;   // false for isolates and degenerate variance
};

struct LisaReport {
  std::vector<LocalRecord> sites;
  double alpha = 0.05;
  bool bonferroni = false;
  double threshold = 0.05;  // alpha / N with bonferroni, alpha otherwise
  double m2 = 0.0;          // sum of squared deviations / N
  double kurtosis = 0.0;    // m4 / m2^2
  std::vector<std::size_t> non_testable;

  static constexpr std::string_view caveat =
      "local Moran p-values rely on a normal approximation; the statistic is known not to be "
      "normally distributed, so treat significance as indicative";
  static constexpr std::string_view reference = "standard normal (z-test), two-sided";
};

/// Per-site tests. Moments are those of the scaled statistic I_i / m2 under random
/// relabelling of the observed values; the two-sided normal p-value is compared with
/// alpha or, with `bonferroni`, alpha / N.
inline LisaReport lisa_test(const Eigen::VectorXd& y, const SpatialWeights& w, double alpha,
                            bool bonferroni) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InputError(ErrorKind::invalid_input, "alpha must lie in (0, 1)");
  }
  detail::check_conformable(y, w);
  const auto n = y.size();
  if (n < 4) throw InputError(ErrorKind::sample_too_small, "local Moran tests need N >= 4");
  detail::positive_total(w);
  const Eigen::VectorXd z = detail::deviations(y);
  const double nn = static_cast<double>(n);
  const double m2 = z.squaredNorm() / nn;
  const double m4 = z.array().pow(4).sum() / nn;
  const double b2 = m4 / (m2 * m2);

  LisaReport report;
  report.alpha = alpha;
  report.bonferroni = bonferroni;
  report.threshold = bonferroni ? alpha / nn : alpha;
  report.m2 = m2;
  report.kurtosis = b2;
  report.sites.resize(static_cast<std::size_t>(n));

  const Eigen::MatrixXd& m = w.values();
  const Eigen::VectorXd lag = m * z;
  for (Eigen::Index i = 0; i < n; ++i) {
    LocalRecord& rec = report.sites[static_cast<std::size_t>(i)];
    const double wi = m.row(i).sum();
    const double wi2 = m.row(i).squaredNorm();
    const double wkh = wi * wi - wi2;  // sum over ordered pairs k != h
    rec.value = z(i) * lag(i);
    rec.scaled = rec.value / m2;
    rec.expected = wi == 0.0 ? 0.0 : -wi / (nn - 1.0);
    rec.variance = wi2 * (nn - b2) / (nn - 1.0) +
                   wkh * (2.0 * b2 - nn) / ((nn - 1.0) * (nn - 2.0)) -
                   wi * wi / ((nn - 1.0) * (nn - 1.0));
    if (wi == 0.0 || !(rec.variance > 0.0)) {
      rec.testable = false;
      rec.variance = std::max(rec.variance, 0.0);
      report.non_testable.push_back(static_cast<std::size_t>(i));
      continue;
    }
    rec.z = (rec.scaled - rec.expected) / std::sqrt(rec.variance);
    rec.p_value = normal_p_value(rec.z, Alternative::two_sided);
    rec.significant = rec.p_value < report.threshold;
  }
  return report;
}

enum class Statistic { global, local };

struct PermutationSummary {
  double observed = 0.0;
  double centre = 0.0;  // value deviations are measured from in the two-sided count
  double p_value = 1.0;
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct PermutationResult {
  Statistic statistic = Statistic::global;
  Alternative alternative = Alternative::two_sided;
  std::size_t draws = 0;
  std::uint64_t seed = 0;
  std::vector<PermutationSummary> entries;  // one for global, N for local

  static constexpr std::string_view rng = Rng::algorithm;
};

namespace detail {

struct Tally {
  std::size_t extreme = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();

  void add(double v, double observed, double centre, Alternative alt) {
    bool hit = false;
    switch (alt) {
      case Alternative::two_sided: hit = std::abs(v - centre) >= std::abs(observed - centre); break;
      case Alternative::greater: hit = v >= observed; break;
      case Alternative::less: hit = v <= observed; break;
    }
    extreme += hit ? 1 : 0;
    sum += v;
    sum_sq += v * v;
    min = std::min(min, v);
    max = std::max(max, v);
  }

  PermutationSummary finish(double observed, double centre, std::size_t draws) const {
    const double d = static_cast<double>(draws);
    PermutationSummary s;
    s.observed = observed;
    s.centre = centre;
    s.p_value = (1.0 + static_cast<double>(extreme)) / (1.0 + d);
    s.mean = sum / d;
    s.sd = std::sqrt(std::max(0.0, (sum_sq - d * s.mean * s.mean) / (d - 1.0)));
    s.min = min;
    s.max = max;
    return s;
  }
};

}  // namespace detail

/// Monte Carlo reference distribution by random relabelling of y.
///
/// Global: all values are permuted. Local: y_i is held fixed and the remaining values
/// are permuted (conditional randomization); the two-sided count is centred on the
/// exact conditional mean -(y_i - mean)^2 w_i. / (N - 1).
/// Draw d uses a generator seeded with derive_seed(seed, d), so the result does not
/// depend on evaluation order.
inline PermutationResult permutation_test(const Eigen::VectorXd& y, const SpatialWeights& w,
                                          Statistic statistic, std::size_t draws,
                                          std::uint64_t seed,
                                          Alternative alternative = Alternative::two_sided) {
  if (draws < 999) {
    throw InputError(ErrorKind::insufficient_draws,
                     "permutation tests need at least 999 draws, got " + std::to_string(draws));
  }
  detail::check_conformable(y, w);
  const auto n = y.size();
  if (n < 3) throw InputError(ErrorKind::too_few_observations, "permutation test needs N >= 3");
  const double s0 = detail::positive_total(w);
  const Eigen::VectorXd z = detail::deviations(y);
  const Eigen::MatrixXd& m = w.values();

  PermutationResult result;
  result.statistic = statistic;
  result.alternative = alternative;
  result.draws = draws;
  result.seed = seed;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  Eigen::VectorXd permuted(n);

  if (statistic == Statistic::global) {
    const double observed = detail::moran_from_deviations(z, m, s0);
    const double centre = -1.0 / (static_cast<double>(n) - 1.0);
    detail::Tally tally;
    for (std::size_t d = 0; d < draws; ++d) {
      Rng rng(derive_seed(seed, d));
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      rng.shuffle(order.begin(), order.end());
      for (Eigen::Index i = 0; i < n; ++i) permuted(i) = z(order[static_cast<std::size_t>(i)]);
      tally.add(detail::moran_from_deviations(permuted, m, s0), observed, centre, alternative);
    }
    result.entries.push_back(tally.finish(observed, centre, draws));
    return result;
  }

  const Eigen::VectorXd observed = z.cwiseProduct(m * z);
  const Eigen::MatrixXd by_row = m.transpose();  // column i holds row i of w
  const Eigen::VectorXd row_sums = m.rowwise().sum();
  std::vector<detail::Tally> tallies(static_cast<std::size_t>(n));
  Eigen::VectorXd centres(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    centres(i) = -z(i) * z(i) * row_sums(i) / (static_cast<double>(n) - 1.0);
  }
  for (std::size_t d = 0; d < draws; ++d) {
    Rng rng(derive_seed(seed, d));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    rng.shuffle(order.begin(), order.end());
    for (Eigen::Index i = 0; i < n; ++i) {
      // The permutation with i removed, laid onto the positions j != i, is a uniform
      // permutation of the other values.
      double lag = 0.0;
      Eigen::Index pos = 0;
      for (const Eigen::Index src : order) {
        if (src == i) continue;
        if (pos == i) ++pos;
        lag += by_row(pos, i) * z(src);
        ++pos;
      }
      tallies[static_cast<std::size_t>(i)].add(z(i) * lag, observed(i), centres(i), alternative);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    result.entries.push_back(
        tallies[static_cast<std::size_t>(i)].finish(observed(i), centres(i), draws));
  }
  return result;
}

}  // namespace spatialecon
