#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "autocorr.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "logdet.hpp"
#include "stats.hpp"
#include "weights.hpp"

namespace spatialecon {

enum class Family { slx, sar, sem, sdm };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::slx: return "slx";
    case Family::sar: return "sar";
    case Family::sem: return "sem";
    case Family::sdm: return "sdm";
  }
  return "slx";
}

inline Family parse_family(std::string_view s) {
  if (s == "slx") return Family::slx;
  if (s == "sar") return Family::sar;
  if (s == "sem") return Family::sem;
  if (s == "sdm") return Family::sdm;
  throw InputError(ErrorKind::invalid_input, "unknown model family '" + std::string(s) + "'");
}

inline bool lags_regressors(Family f) { return f == Family::slx || f == Family::sdm; }
inline bool lags_response(Family f) { return f == Family::sar || f == Family::sdm; }

struct ModelSpec {
  Family family = Family::sar;
  std::string response;
  std::vector<std::string> regressors;
  bool intercept = true;
  std::shared_ptr<const SpatialWeights> weights;
};

struct FitOptions {
  /// Hold rho (sar, sdm) or lambda (sem) at this value instead of estimating it.
  std::optional<double> fixed_spatial;
  LogDetMethod logdet = LogDetMethod::lu;
  /// Reuse a log-determinant built for the same W across many fits.
  std::shared_ptr<const LogDeterminant> logdet_engine;
  double bound = 0.999;
  int grid_points = 40;
  double tolerance = 1e-7;
  double hessian_step = 1e-5;
  double alpha = 0.05;
};

struct MeanZeroCheck {
  double statistic = 0.0;   // |mean| / sd
  std::optional<bool> pass; // only judged for models with an intercept
};

struct HomoscedasticityCheck {
  double statistic = 0.0;  // N R^2 of e^2 on [1, yhat, yhat^2]
  double df = 2.0;
  double p_value = 1.0;
  bool pass = true;
};

struct ResidualDiagnostics {
  MeanZeroCheck mean_zero;
  HomoscedasticityCheck homoscedastic;
  MoranReport residual_moran;
  bool residual_moran_pass = true;
};

struct ModelFit {
  ModelSpec spec;
  Family family = Family::sar;
  std::size_t n = 0;
  std::vector<std::string> coefficient_names;  // beta (intercept first) then gamma
  Eigen::VectorXd beta;
  Eigen::VectorXd gamma;  // one per regressor for slx / sdm
  std::optional<double> rho;
  std::optional<double> lambda;
  bool spatial_fixed = false;
  double sigma2 = 0.0;  // maximum likelihood error variance e'e / N
  double loglik = 0.0;
  Eigen::VectorXd y;
  Eigen::MatrixXd design;  // [1 | X | WX] as used in estimation
  Eigen::VectorXd fitted;
  Eigen::VectorXd residuals;
  std::vector<std::string> parameter_names;  // rows of vcov
  Eigen::MatrixXd vcov;
  ResidualDiagnostics diagnostics;

  /// Free parameters including sigma^2.
  std::size_t parameter_count() const {
    return static_cast<std::size_t>(beta.size() + gamma.size()) + (spatial_free() ? 1 : 0) + 1;
  }

  bool spatial_free() const { return (rho || lambda) && !spatial_fixed; }

  double spatial_value() const { return rho ? *rho : (lambda ? *lambda : 0.0); }

  Eigen::VectorXd coefficients() const {
    Eigen::VectorXd c(beta.size() + gamma.size());
    c << beta, gamma;
    return c;
  }

  double variance_of(std::string_view name) const {
    for (std::size_t i = 0; i < parameter_names.size(); ++i) {
      if (parameter_names[i] == name) {
        const auto k = static_cast<Eigen::Index>(i);
        return vcov(k, k);
      }
    }
    throw InputError(ErrorKind::invalid_input, "fit has no parameter '" + std::string(name) + "'");
  }

  double std_error(std::string_view name) const { return std::sqrt(variance_of(name)); }
};

namespace detail {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline Eigen::MatrixXd build_design(const ModelSpec& spec, const PointSet& data,
                                    std::vector<std::string>& names) {
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto k = static_cast<Eigen::Index>(spec.regressors.size());
  const bool lag = lags_regressors(spec.family);
  const Eigen::Index cols = (spec.intercept ? 1 : 0) + k + (lag ? k : 0);
  Eigen::MatrixXd x(n, cols);
  Eigen::Index c = 0;
  names.clear();
  if (spec.intercept) {
    x.col(c++).setOnes();
    names.emplace_back("(intercept)");
  }
  Eigen::MatrixXd raw(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    raw.col(j) = data.variable(spec.regressors[static_cast<std::size_t>(j)]);
    x.col(c++) = raw.col(j);
    names.push_back(spec.regressors[static_cast<std::size_t>(j)]);
  }
  if (lag) {
    const Eigen::MatrixXd lagged = spec.weights->values() * raw;
    for (Eigen::Index j = 0; j < k; ++j) {
      x.col(c++) = lagged.col(j);
      names.push_back("W*" + spec.regressors[static_cast<std::size_t>(j)]);
    }
  }
  return x;
}

inline void check_rank(const Eigen::MatrixXd& x, const std::vector<std::string>& names) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() == x.cols()) return;
  std::string dependent;
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index i = qr.rank(); i < x.cols(); ++i) {
    if (!dependent.empty()) dependent += ", ";
    dependent += names[static_cast<std::size_t>(perm(i))];
  }
  throw NumericalError(ErrorKind::collinearity,
                       "design matrix is rank deficient; linearly dependent column(s): " + dependent);
}

inline void validate_spec(const ModelSpec& spec, const PointSet& data) {
  if (!spec.weights) throw InputError(ErrorKind::invalid_input, "model needs a weights matrix");
  if (spec.weights->size() != data.size()) {
    throw InputError(ErrorKind::invalid_input, "weights size does not match the data");
  }
  if (spec.regressors.empty()) throw InputError(ErrorKind::invalid_input, "model needs at least one regressor");
  if (!data.has_variable(spec.response)) {
    throw InputError(ErrorKind::invalid_input, "unknown response '" + spec.response + "'");
  }
  for (const auto& r : spec.regressors) {
    if (r == spec.response) {
      throw InputError(ErrorKind::invalid_input, "response '" + r + "' is also a regressor");
    }
    if (!data.has_variable(r)) throw InputError(ErrorKind::invalid_input, "unknown regressor '" + r + "'");
  }
  if (spec.family != Family::slx && !spec.weights->standardized()) {
    throw InputError(ErrorKind::invalid_input,
                     std::string(to_string(spec.family)) + " models need row-standardized weights");
  }
}

/// Scalar maximizer: coarse grid, then golden-section search around the best grid point.
/// Grid ties go to the smaller |x|.
inline double maximize_scalar(const std::function<double(double)>& f, double bound, int grid,
                              double tol) {
  double best_x = 0.0;
  double best_f = -std::numeric_limits<double>::infinity();
  int best_k = -1;
  std::vector<double> xs(static_cast<std::size_t>(grid));
  for (int k = 0; k < grid; ++k) {
    const double x = -bound + 2.0 * bound * k / (grid - 1);
    xs[static_cast<std::size_t>(k)] = x;
    const double v = f(x);
    if (!std::isfinite(v)) continue;
    if (v > best_f || (v == best_f && std::abs(x) < std::abs(best_x))) {
      best_f = v;
      best_x = x;
      best_k = k;
    }
  }
  if (best_k < 0) {
    throw NumericalError(ErrorKind::singular_system, "log-likelihood is not finite anywhere on the grid");
  }
  double lo = xs[static_cast<std::size_t>(std::max(best_k - 1, 0))];
  double hi = xs[static_cast<std::size_t>(std::min(best_k + 1, grid - 1))];
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - ratio * (hi - lo);
  double b = lo + ratio * (hi - lo);
  double fa = f(a);
  double fb = f(b);
  while (hi - lo > tol) {
    if (fa >= fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - ratio * (hi - lo);
      fa = f(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + ratio * (hi - lo);
      fb = f(b);
    }
  }
  const double x = 0.5 * (lo + hi);
  const double fx = f(x);
  if (!(fx >= best_f)) return best_x;
  return x;
}

/// Central-difference Hessian. Step for coordinate i is steps(i).
inline Eigen::MatrixXd numerical_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                                         const Eigen::VectorXd& at, const Eigen::VectorXd& steps) {
  const auto p = at.size();
  Eigen::MatrixXd h(p, p);
  const double f0 = f(at);
  for (Eigen::Index i = 0; i < p; ++i) {
    Eigen::VectorXd up = at, down = at;
    up(i) += steps(i);
    down(i) -= steps(i);
    h(i, i) = (f(up) - 2.0 * f0 + f(down)) / (steps(i) * steps(i));
    for (Eigen::Index j = 0; j < i; ++j) {
      Eigen::VectorXd pp = at, pm = at, mp = at, mm = at;
      pp(i) += steps(i); pp(j) += steps(j);
      pm(i) += steps(i); pm(j) -= steps(j);
      mp(i) -= steps(i); mp(j) += steps(j);
      mm(i) -= steps(i); mm(j) -= steps(j);
      h(i, j) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * steps(i) * steps(j));
      h(j, i) = h(i, j);
    }
  }
  return h;
}

inline Eigen::MatrixXd invert_information(const Eigen::MatrixXd& information) {
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(information);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      (ldlt.vectorD().array() <= 0.0).any()) {
    return Eigen::MatrixXd::Constant(information.rows(), information.cols(),
                                     std::numeric_limits<double>::quiet_NaN());
  }
  return ldlt.solve(Eigen::MatrixXd::Identity(information.rows(), information.cols()));
}

/// Least squares through a Householder QR; returns coefficients.
inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return x.householderQr().solve(y);
}

inline std::shared_ptr<const LogDeterminant> logdet_for(const ModelSpec& spec, const FitOptions& opt) {
  if (opt.logdet_engine) return opt.logdet_engine;
  return std::make_shared<const LogDeterminant>(spec.weights->values(), opt.logdet);
}

inline void check_interior(double value, const FitOptions& opt, std::string_view name) {
  if (opt.bound - std::abs(value) < 1e-6) {
    throw NumericalError(ErrorKind::boundary_solution,
                         std::string(name) + " estimate " + std::to_string(value) +
                             " sits on the admissible boundary; the model is likely misspecified");
  }
}

}  // namespace detail

/// Mean-zero, homoscedasticity and residual-independence checks.
inline ResidualDiagnostics residual_diagnostics(const ModelFit& fit, const SpatialWeights& w,
                                                double alpha = 0.05) {
  ResidualDiagnostics d;
  const Eigen::VectorXd& e = fit.residuals;
  const auto n = e.size();
  const double mean = e.mean();
  const double sd = std::sqrt((e.array() - mean).square().sum() / static_cast<double>(n - 1));
  d.mean_zero.statistic = sd > 0.0 ? std::abs(mean) / sd : 0.0;
  if (fit.spec.intercept) d.mean_zero.pass = d.mean_zero.statistic < 1e-8;

  Eigen::MatrixXd aux(n, 3);
  aux.col(0).setOnes();
  aux.col(1) = fit.fitted;
  aux.col(2) = fit.fitted.array().square();
  const Eigen::VectorXd e2 = e.array().square();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(aux);
  const Eigen::VectorXd coef = qr.solve(e2);
  const double sst = (e2.array() - e2.mean()).square().sum();
  const double ssr = (e2 - aux * coef).squaredNorm();
  const double r2 = sst > 0.0 ? 1.0 - ssr / sst : 0.0;
  d.homoscedastic.df = static_cast<double>(std::max<Eigen::Index>(qr.rank() - 1, 1));
  d.homoscedastic.statistic = static_cast<double>(n) * std::max(r2, 0.0);
  d.homoscedastic.p_value = chi_square_sf(d.homoscedastic.statistic, d.homoscedastic.df);
  d.homoscedastic.pass = d.homoscedastic.p_value >= alpha;

  d.residual_moran = moran_test(e, w, Alternative::two_sided);
  d.residual_moran_pass = d.residual_moran.p_value >= alpha;
  return d;
}

/// Ordinary least squares on [1 | X | WX].
inline ModelFit fit_slx(const ModelSpec& spec, const PointSet& data, const FitOptions& opt = {}) {
  if (spec.family != Family::slx) throw InputError(ErrorKind::invalid_input, "fit_slx needs family slx");
  detail::validate_spec(spec, data);
  ModelFit fit;
  fit.spec = spec;
  fit.family = Family::slx;
  fit.n = data.size();
  fit.y = data.variable(spec.response);
  fit.design = detail::build_design(spec, data, fit.coefficient_names);
  detail::check_rank(fit.design, fit.coefficient_names);
  const auto n = fit.design.rows();
  const auto p = fit.design.cols();
  if (n <= p) throw InputError(ErrorKind::too_few_observations, "more coefficients than observations");

  const Eigen::VectorXd coef = detail::least_squares(fit.design, fit.y);
  const auto k = static_cast<Eigen::Index>(spec.regressors.size());
  fit.beta = coef.head(p - k);
  fit.gamma = coef.tail(k);
  fit.fitted = fit.design * coef;
  fit.residuals = fit.y - fit.fitted;
  const double ssr = fit.residuals.squaredNorm();
  fit.sigma2 = ssr / static_cast<double>(n);
  fit.loglik = -0.5 * static_cast<double>(n) * (detail::kLog2Pi + std::log(fit.sigma2) + 1.0);
  const double s2 = ssr / static_cast<double>(n - p);
  const Eigen::MatrixXd xtx = fit.design.transpose() * fit.design;
  fit.vcov = s2 * xtx.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  fit.parameter_names = fit.coefficient_names;
  fit.diagnostics = residual_diagnostics(fit, *spec.weights, opt.alpha);
  return fit;
}

namespace detail {

/// Shared maximum-likelihood machinery for the lag (sar, sdm) and error (sem) models.
inline ModelFit fit_spatial_ml(const ModelSpec& spec, const PointSet& data, const FitOptions& opt) {
  validate_spec(spec, data);
  const bool error_model = spec.family == Family::sem;
  ModelFit fit;
  fit.spec = spec;
  fit.family = spec.family;
  fit.n = data.size();
  fit.y = data.variable(spec.response);
  fit.design = build_design(spec, data, fit.coefficient_names);
  check_rank(fit.design, fit.coefficient_names);
  const Eigen::MatrixXd& x = fit.design;
  const Eigen::VectorXd& y = fit.y;
  const auto n = x.rows();
  const auto p = x.cols();
  const double nn = static_cast<double>(n);
  if (n <= p + 1) throw InputError(ErrorKind::too_few_observations, "more parameters than observations");

  const Eigen::MatrixXd& w = spec.weights->values();
  const Eigen::VectorXd wy = w * y;
  const Eigen::MatrixXd wx = error_model ? Eigen::MatrixXd(w * x) : Eigen::MatrixXd();
  const auto logdet = logdet_for(spec, opt);
  std::map<double, double> logdet_cache;
  const auto cached_logdet = [&](double r) {
    const auto it = logdet_cache.find(r);
    if (it != logdet_cache.end()) return it->second;
    const double v = (*logdet)(r);
    logdet_cache.emplace(r, v);
    return v;
  };

  // Lag model: coefficients and residuals are linear in rho.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr;
  Eigen::VectorXd e0, e_lag;
  if (!error_model) {
    qr.compute(x);
    e0 = y - x * qr.solve(y);
    e_lag = wy - x * qr.solve(wy);
  }
  const auto coefficients_at = [&](double r) -> Eigen::VectorXd {
    if (!error_model) return qr.solve(Eigen::VectorXd(y - r * wy));
    const Eigen::MatrixXd xs = x - r * wx;
    return least_squares(xs, y - r * wy);
  };
  const auto ssr_at = [&](double r) -> double {
    if (!error_model) return (e0 - r * e_lag).squaredNorm();
    const Eigen::MatrixXd xs = x - r * wx;
    const Eigen::VectorXd ys = y - r * wy;
    return (ys - xs * least_squares(xs, ys)).squaredNorm();
  };
  const auto profile = [&](double r) {
    const double ld = cached_logdet(r);
    if (!std::isfinite(ld)) return -std::numeric_limits<double>::infinity();
    return -0.5 * nn * (kLog2Pi + std::log(ssr_at(r) / nn) + 1.0) + ld;
  };

  double r_hat = 0.0;
  if (opt.fixed_spatial) {
    r_hat = *opt.fixed_spatial;
    if (!(std::abs(r_hat) < opt.bound)) {
      throw InputError(ErrorKind::invalid_input, "fixed spatial parameter outside the admissible interval");
    }
  } else {
    r_hat = maximize_scalar(profile, opt.bound, opt.grid_points, opt.tolerance);
    check_interior(r_hat, opt, error_model ? "lambda" : "rho");
  }

  const Eigen::VectorXd coef = coefficients_at(r_hat);
  Eigen::VectorXd resid;
  if (error_model) {
    resid = (y - r_hat * wy) - (x - r_hat * wx) * coef;
    fit.lambda = r_hat;
    // y - yhat equals the filtered residual: yhat = X b + lambda W (y - X b)
    fit.fitted = y - resid;
  } else {
    resid = y - r_hat * wy - x * coef;
    fit.rho = r_hat;
    fit.fitted = y - resid;
  }
  fit.spatial_fixed = opt.fixed_spatial.has_value();
  fit.residuals = resid;
  fit.sigma2 = resid.squaredNorm() / nn;
  fit.loglik = -0.5 * nn * (kLog2Pi + std::log(fit.sigma2) + 1.0) + cached_logdet(r_hat);
  if (!std::isfinite(fit.loglik)) {
    throw NumericalError(ErrorKind::singular_system, "log-likelihood is not finite at the estimate");
  }

  const auto k = static_cast<Eigen::Index>(spec.regressors.size());
  if (lags_regressors(spec.family)) {
    fit.beta = coef.head(p - k);
    fit.gamma = coef.tail(k);
  } else {
    fit.beta = coef;
    fit.gamma = Eigen::VectorXd();
  }

  // Observed information from the full log-likelihood in (coefficients, [spatial], sigma^2).
  const bool free = !fit.spatial_fixed;
  const Eigen::Index dim = p + (free ? 1 : 0) + 1;
  Eigen::VectorXd theta(dim), steps(dim);
  theta.head(p) = coef;
  for (Eigen::Index i = 0; i < p; ++i) steps(i) = opt.hessian_step * std::max(1.0, std::abs(coef(i)));
  if (free) {
    theta(p) = r_hat;
    steps(p) = opt.hessian_step;
  }
  theta(dim - 1) = fit.sigma2;
  steps(dim - 1) = opt.hessian_step * fit.sigma2;
  const auto full_loglik = [&](const Eigen::VectorXd& t) {
    const double r = free ? t(p) : r_hat;
    const double s2 = t(dim - 1);
    if (!(s2 > 0.0)) return -std::numeric_limits<double>::infinity();
    const Eigen::VectorXd c = t.head(p);
    const double ssr = error_model ? ((y - r * wy) - (x - r * wx) * c).squaredNorm()
                                   : (y - r * wy - x * c).squaredNorm();
    return -0.5 * nn * (kLog2Pi + std::log(s2)) + cached_logdet(r) - ssr / (2.0 * s2);
  };
  const Eigen::MatrixXd hessian = numerical_hessian(full_loglik, theta, steps);
  const Eigen::MatrixXd cov = invert_information(-hessian);
  fit.vcov = cov.topLeftCorner(dim - 1, dim - 1);
  fit.parameter_names = fit.coefficient_names;
  if (free) fit.parameter_names.emplace_back(error_model ? "lambda" : "rho");

  fit.diagnostics = residual_diagnostics(fit, *spec.weights, opt.alpha);
  return fit;
}

}  // namespace detail

/// Spatial lag model y = rho W y + X b + e by concentrated maximum likelihood.
inline ModelFit fit_sar(const ModelSpec& spec, const PointSet& data, const FitOptions& opt = {}) {
  if (spec.family != Family::sar) throw InputError(ErrorKind::invalid_input, "fit_sar needs family sar");
  return detail::fit_spatial_ml(spec, data, opt);
}

/// Spatial error model y = X b + (I - lambda W)^-1 e. Residuals are the filtered e.
inline ModelFit fit_sem(const ModelSpec& spec, const PointSet& data, const FitOptions& opt = {}) {
  if (spec.family != Family::sem) throw InputError(ErrorKind::invalid_input, "fit_sem needs family sem");
  return detail::fit_spatial_ml(spec, data, opt);
}

/// Spatial Durbin model: lag model on [1 | X | WX].
inline ModelFit fit_sdm(const ModelSpec& spec, const PointSet& data, const FitOptions& opt = {}) {
  if (spec.family != Family::sdm) throw InputError(ErrorKind::invalid_input, "fit_sdm needs family sdm");
  return detail::fit_spatial_ml(spec, data, opt);
}

inline ModelFit fit_model(const ModelSpec& spec, const PointSet& data, const FitOptions& opt = {}) {
  switch (spec.family) {
    case Family::slx: return fit_slx(spec, data, opt);
    case Family::sar: return fit_sar(spec, data, opt);
    case Family::sem: return fit_sem(spec, data, opt);
    case Family::sdm: return fit_sdm(spec, data, opt);
  }
  throw InputError(ErrorKind::invalid_input, "unknown family");
}

/// Full log-likelihood at the fit's stored estimates (beta, gamma, rho/lambda, sigma^2).
inline double evaluate_loglik(const ModelFit& fit) {
  const Eigen::MatrixXd& w = fit.spec.weights->values();
  const double nn = static_cast<double>(fit.n);
  const double r = fit.spatial_value();
  const Eigen::VectorXd c = fit.coefficients();
  Eigen::VectorXd e;
  if (fit.family == Family::sem) {
    const Eigen::VectorXd u = fit.y - fit.design * c;
    e = u - r * (w * u);
  } else {
    e = fit.y - r * (w * fit.y) - fit.design * c;
  }
  const double ld = r == 0.0 ? 0.0 : LogDeterminant(w, LogDetMethod::lu)(r);
  return -0.5 * nn * (detail::kLog2Pi + std::log(fit.sigma2)) + ld - e.squaredNorm() / (2.0 * fit.sigma2);
}

struct RegressorEffect {
  std::string regressor;
  Eigen::MatrixXd matrix;  // d y / d x_k, N x N
  double direct = 0.0;     // mean diagonal
  double total = 0.0;      // mean row sum
  double indirect = 0.0;   // total - direct
};

/// Marginal-effects matrices of each (non-intercept) regressor.
inline std::vector<RegressorEffect> marginal_effects(const ModelFit& fit) {
  const Eigen::MatrixXd& w = fit.spec.weights->values();
  const auto n = w.rows();
  const auto k = fit.spec.regressors.size();
  const Eigen::Index offset = fit.spec.intercept ? 1 : 0;
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);

  Eigen::MatrixXd multiplier;  // (I - rho W)^-1 for lag models
  if (lags_response(fit.family) && fit.spatial_value() != 0.0) {
    const Eigen::MatrixXd a = identity - fit.spatial_value() * w;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    if (!(lu.rcond() > 1e-12)) {
      throw NumericalError(ErrorKind::singular_system, "I - rho W is numerically singular");
    }
    multiplier = lu.solve(identity);
  }

  std::vector<RegressorEffect> out;
  for (std::size_t j = 0; j < k; ++j) {
    const double b = fit.beta(offset + static_cast<Eigen::Index>(j));
    const double g = lags_regressors(fit.family) ? fit.gamma(static_cast<Eigen::Index>(j)) : 0.0;
    RegressorEffect eff;
    eff.regressor = fit.spec.regressors[j];
    Eigen::MatrixXd local = b * identity;
    if (lags_regressors(fit.family)) local += g * w;
    eff.matrix = multiplier.size() > 0 ? Eigen::MatrixXd(multiplier * local) : local;
    const double nn = static_cast<double>(n);
    eff.direct = eff.matrix.trace() / nn;
    eff.total = eff.matrix.sum() / nn;
    eff.indirect = eff.total - eff.direct;
    out.push_back(std::move(eff));
  }
  return out;
}

struct TestResult {
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

namespace detail {

struct Components {
  bool lag_y = false;
  bool lag_x = false;
  bool lag_error = false;

  bool contains(const Components& o) const {
    return (lag_y || !o.lag_y) && (lag_x || !o.lag_x) && (lag_error || !o.lag_error);
  }
  friend bool operator==(const Components&, const Components&) = default;
};

inline Components components(const ModelFit& f) {
  Components c;
  c.lag_x = lags_regressors(f.family);
  c.lag_y = lags_response(f.family) && f.spatial_free();
  c.lag_error = f.family == Family::sem && f.spatial_free();
  return c;
}

}  // namespace detail

/// Likelihood ratio test of `restricted` against `full`, which must nest it.
inline TestResult lr_test(const ModelFit& full, const ModelFit& restricted) {
  const auto cf = detail::components(full);
  const auto cr = detail::components(restricted);
  const bool same_data = full.n == restricted.n && full.spec.response == restricted.spec.response &&
                         full.spec.regressors == restricted.spec.regressors &&
                         full.spec.intercept == restricted.spec.intercept &&
                         full.y.size() == restricted.y.size() &&
                         (full.y.array() == restricted.y.array()).all();
  if (!same_data) {
    throw InputError(ErrorKind::invalid_comparison, "models were not fitted to the same data and regressors");
  }
  if (!cf.contains(cr)) {
    throw InputError(ErrorKind::invalid_comparison,
                     std::string(to_string(restricted.family)) + " is not nested in " +
                         std::string(to_string(full.family)));
  }
  TestResult r;
  r.df = static_cast<double>(full.parameter_count()) - static_cast<double>(restricted.parameter_count());
  r.statistic = std::max(0.0, 2.0 * (full.loglik - restricted.loglik));
  r.p_value = r.statistic == 0.0 ? 1.0 : chi_square_sf(r.statistic, r.df);
  return r;
}

enum class SpatialParameter { rho, lambda };

/// Wald test of rho = 0 (or lambda = 0) using the observed-information variance.
inline TestResult wald_test(const ModelFit& fit, SpatialParameter which) {
  const bool want_rho = which == SpatialParameter::rho;
  const auto& value = want_rho ? fit.rho : fit.lambda;
  if (!value || fit.spatial_fixed) {
    throw InputError(ErrorKind::invalid_input,
                     std::string("fit has no estimated ") + (want_rho ? "rho" : "lambda"));
  }
  TestResult r;
  r.df = 1.0;
  if (*value == 0.0) return r;
  const double var = fit.variance_of(want_rho ? "rho" : "lambda");
  if (!(var > 0.0) || !std::isfinite(var)) {
    throw NumericalError(ErrorKind::ill_conditioned_information,
                         "variance estimate of the spatial parameter is not positive");
  }
  r.statistic = (*value) * (*value) / var;
  r.p_value = chi_square_sf(r.statistic, 1.0);
  return r;
}

}  // namespace spatialecon
