#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "geometry.hpp"
#include "logdet.hpp"
#include "models.hpp"
#include "rng.hpp"
#include "weights.hpp"

namespace spatialecon {

struct Lattice {
  std::size_t rows = 20;
  std::size_t cols = 20;
  double spacing = 1.0;
};

struct UniformRandom {
  std::size_t n = 100;
  double extent = 10.0;
};

using Layout = std::variant<Lattice, UniformRandom>;

/// Data-generating process with known parameters. beta(0) is the intercept.
struct DgpSpec {
  Family family = Family::sar;
  Eigen::VectorXd beta = Eigen::Vector2d(1.0, 2.0);
  Eigen::VectorXd gamma;  // one per regressor for slx / sdm
  double rho = 0.0;
  double lambda = 0.0;
  double sigma = 1.0;
  Layout layout = Lattice{};
  std::uint64_t seed = 0;

  std::size_t size() const {
    if (const auto* l = std::get_if<Lattice>(&layout)) return l->rows * l->cols;
    return std::get<UniformRandom>(layout).n;
  }

  std::size_t regressor_count() const { return beta.size() > 0 ? static_cast<std::size_t>(beta.size() - 1) : 0; }

  void validate() const {
    if (beta.size() < 2) throw InputError(ErrorKind::invalid_input, "beta needs an intercept and at least one slope");
    if (!(std::abs(rho) < 0.999) || !(std::abs(lambda) < 0.999)) {
      throw InputError(ErrorKind::invalid_input, "rho and lambda must lie in (-0.999, 0.999)");
    }
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InputError(ErrorKind::invalid_input, "sigma must be positive");
    if (lags_regressors(family) && static_cast<std::size_t>(gamma.size()) != regressor_count()) {
      throw InputError(ErrorKind::invalid_input, "gamma needs one value per regressor");
    }
    if (const auto* l = std::get_if<Lattice>(&layout)) {
      if (l->rows * l->cols < 9) throw InputError(ErrorKind::invalid_input, "lattice needs at least 9 cells");
      if (!(l->spacing > 0.0)) throw InputError(ErrorKind::invalid_input, "lattice spacing must be positive");
    } else {
      const auto& u = std::get<UniformRandom>(layout);
      if (u.n < 9) throw InputError(ErrorKind::invalid_input, "uniform layout needs N >= 9");
      if (!(u.extent > 0.0)) throw InputError(ErrorKind::invalid_input, "extent must be positive");
    }
  }
};

struct SimulatedData {
  PointSet points;
  std::shared_ptr<const SpatialWeights> weights;  // row-standardized
  DgpSpec truth;
  std::vector<std::string> regressors;
  std::string response = "outcome";

  static constexpr std::string_view rng = Rng::algorithm;

  ModelSpec model_spec(Family family) const {
    return ModelSpec{family, response, regressors, true, weights};
  }
};

/// Lattice point i sits at (col * spacing, row * spacing), row-major.
inline std::vector<Point> lattice_points(const Lattice& l) {
  std::vector<Point> pts;
  pts.reserve(l.rows * l.cols);
  for (std::size_t r = 0; r < l.rows; ++r) {
    for (std::size_t c = 0; c < l.cols; ++c) {
      pts.push_back({static_cast<double>(c) * l.spacing, static_cast<double>(r) * l.spacing});
    }
  }
  return pts;
}

/// Draws a data set from `dgp`. Draw order: coordinates (uniform layout only), then the
/// regressors column by column, then the errors.
inline SimulatedData generate(const DgpSpec& dgp, const WeightsSpec& weights_spec,
                              std::size_t regressor_count, Metric metric = Metric::euclidean) {
  dgp.validate();
  if (regressor_count != dgp.regressor_count()) {
    throw InputError(ErrorKind::invalid_input, "regressor count does not match beta");
  }
  Rng rng(dgp.seed);
  std::vector<Point> pts;
  if (const auto* l = std::get_if<Lattice>(&dgp.layout)) {
    pts = lattice_points(*l);
  } else {
    const auto& u = std::get<UniformRandom>(dgp.layout);
    pts.resize(u.n);
    for (auto& p : pts) {
      p.x = u.extent * rng.uniform();
      p.y = u.extent * rng.uniform();
    }
  }
  const auto n = static_cast<Eigen::Index>(pts.size());
  const auto k = static_cast<Eigen::Index>(regressor_count);
  auto weights = std::make_shared<const SpatialWeights>(
      row_standardize(transform(build_distance_matrix(pts, metric), weights_spec)));
  const Eigen::MatrixXd& w = weights->values();

  Eigen::MatrixXd x(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = rng.normal();
  }
  Eigen::VectorXd eps(n);
  for (Eigen::Index i = 0; i < n; ++i) eps(i) = dgp.sigma * rng.normal();

  Eigen::VectorXd mean = x * dgp.beta.tail(k);
  mean.array() += dgp.beta(0);
  if (lags_regressors(dgp.family)) mean += w * (x * dgp.gamma);

  const auto solve = [&](double r, const Eigen::VectorXd& rhs) -> Eigen::VectorXd {
    if (r == 0.0) return rhs;
    Eigen::MatrixXd a = -r * w;
    a.diagonal().array() += 1.0;
    return a.partialPivLu().solve(rhs);
  };

  Eigen::VectorXd y;
  switch (dgp.family) {
    case Family::slx: y = mean + eps; break;
    case Family::sar:
    case Family::sdm: y = solve(dgp.rho, mean + eps); break;
    case Family::sem: y = mean + solve(dgp.lambda, eps); break;
  }

  std::vector<std::string> ids;
  ids.reserve(pts.size());
  for (Eigen::Index i = 0; i < n; ++i) ids.push_back("p" + std::to_string(i));
  std::vector<Variable> vars;
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < k; ++j) {
    names.push_back("x" + std::to_string(j + 1));
    vars.push_back({names.back(), x.col(j)});
  }
  vars.push_back({"outcome", y});
  return SimulatedData{PointSet(std::move(ids), std::move(pts), std::move(vars)), std::move(weights),
                       dgp, std::move(names)};
}

/// True value of a named fit parameter under `dgp`.
inline double true_value(const DgpSpec& dgp, const std::string& name) {
  if (name == "(intercept)") return dgp.beta(0);
  if (name == "rho") return dgp.rho;
  if (name == "lambda") return dgp.lambda;
  const bool lagged = name.rfind("W*x", 0) == 0;
  const auto idx = std::stoul(name.substr(lagged ? 3 : 1));
  return lagged ? dgp.gamma(static_cast<Eigen::Index>(idx - 1)) : dgp.beta(static_cast<Eigen::Index>(idx));
}

struct ParameterRecovery {
  std::string name;
  double truth = 0.0;
  std::size_t fits = 0;
  double mean = 0.0;
  double bias = 0.0;
  double rmse = 0.0;
  double mean_abs_error = 0.0;
  double coverage = 0.0;  // share of 95% Wald intervals containing the truth
};

struct RecoveryFailure {
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  std::string message;
};

struct RecoveryTable {
  DgpSpec dgp;
  WeightsSpec weights;
  std::size_t replicates = 0;
  std::vector<ParameterRecovery> parameters;
  std::vector<RecoveryFailure> failures;
};

/// Fits the DGP's own family to `replicates` independent draws; replicate r uses seed
/// derive_seed(dgp.seed, r). Failed fits are recorded and skipped.
inline RecoveryTable recovery_experiment(const DgpSpec& dgp, std::size_t replicates,
                                         const WeightsSpec& weights_spec = {WeightsKind::connectivity, 1.0, {}},
                                         FitOptions options = {}) {
  if (replicates < 20) throw InputError(ErrorKind::invalid_input, "recovery experiments need at least 20 seeds");
  dgp.validate();
  RecoveryTable table;
  table.dgp = dgp;
  table.weights = weights_spec;
  table.replicates = replicates;

  std::map<std::string, std::vector<std::pair<double, double>>> draws;  // estimate, se
  std::vector<std::string> order;
  const bool fixed_geometry = std::holds_alternative<Lattice>(dgp.layout);
  for (std::size_t r = 0; r < replicates; ++r) {
    DgpSpec rep = dgp;
    rep.seed = derive_seed(dgp.seed, r);
    try {
      const SimulatedData data = generate(rep, weights_spec, rep.regressor_count());
      if (fixed_geometry && !options.logdet_engine && dgp.family != Family::slx) {
        options.logdet_engine = std::make_shared<const LogDeterminant>(data.weights->values(), options.logdet);
      }
      const ModelFit fit = fit_model(data.model_spec(dgp.family), data.points, options);
      const Eigen::VectorXd coef = fit.coefficients();
      for (std::size_t i = 0; i < fit.parameter_names.size(); ++i) {
        const auto& name = fit.parameter_names[i];
        if (!draws.contains(name)) order.push_back(name);
        const auto ii = static_cast<Eigen::Index>(i);
        const double est = ii < coef.size() ? coef(ii) : fit.spatial_value();
        draws[name].emplace_back(est, std::sqrt(fit.vcov(ii, ii)));
      }
    } catch (const Error& e) {
      table.failures.push_back({r, rep.seed, e.what()});
    }
  }
  for (const auto& name : order) {
    const auto& v = draws[name];
    ParameterRecovery p;
    p.name = name;
    p.truth = true_value(dgp, name);
    p.fits = v.size();
    double sum = 0.0, sq = 0.0, abs = 0.0;
    std::size_t covered = 0;
    for (const auto& [est, se] : v) {
      const double err = est - p.truth;
      sum += est;
      sq += err * err;
      abs += std::abs(err);
      if (std::abs(err) <= 1.959963984540054 * se) ++covered;
    }
    const double m = static_cast<double>(v.size());
    p.mean = sum / m;
    p.bias = p.mean - p.truth;
    p.rmse = std::sqrt(sq / m);
    p.mean_abs_error = abs / m;
    p.coverage = static_cast<double>(covered) / m;
    table.parameters.push_back(p);
  }
  return table;
}

}  // namespace spatialecon
