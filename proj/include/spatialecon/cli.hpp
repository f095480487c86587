#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "autocorr.hpp"
#include "io.hpp"
#include "models.hpp"
#include "report.hpp"
#include "simulate.hpp"
#include "weights.hpp"

namespace spatialecon {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitInput = 2, kExitNumerical = 3 };

namespace cli {

inline std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed, Provenance& prov) {
  if (seed) {
    prov.seed = *seed;
    return *seed;
  }
  std::random_device rd;
  const std::uint64_t drawn = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  prov.seed = drawn;
  prov.seed_generated = true;
  return drawn;
}

inline void write_json(const std::string& path, const Provenance& prov, json result) {
  if (path.empty()) return;
  json doc;
  doc["provenance"] = to_json(prov);
  doc["result"] = std::move(result);
  auto out = detail::open_out(path);
  out << doc.dump(2) << '\n';
}

inline WeightsKind transform_from_flag(const std::string& name) {
  if (name == "connectivity") return WeightsKind::connectivity;
  if (name == "idw") return WeightsKind::inverse_distance;
  if (name == "exp") return WeightsKind::inverse_exponential;
  if (name == "gaussian") return WeightsKind::gaussian;
  if (name == "idw-threshold") return WeightsKind::inverse_distance_thresholded;
  throw InputError(ErrorKind::invalid_input, "unknown transform '" + name + "'");
}

inline Lattice parse_lattice(const std::string& text) {
  const auto x = text.find_first_of("xX");
  std::size_t rows = 0, cols = 0;
  if (x == std::string::npos || !detail::parse_int(std::string_view(text).substr(0, x), rows) ||
      !detail::parse_int(std::string_view(text).substr(x + 1), cols)) {
    throw InputError(ErrorKind::invalid_input, "lattice must look like RxC, got '" + text + "'");
  }
  return Lattice{rows, cols, 1.0};
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

struct Loaded {
  PointSet points;
  std::shared_ptr<const SpatialWeights> weights;
};

inline Loaded load_inputs(const std::string& input, const std::string& weights_path, bool raw, Provenance& prov) {
  PointSet points = load_dataset(input);
  SpatialWeights w = load_weights(weights_path);
  if (w.size() != points.size()) {
    throw InputError(ErrorKind::invalid_input, "weights are " + std::to_string(w.size()) + " x " +
                                                   std::to_string(w.size()) + " but the dataset has " +
                                                   std::to_string(points.size()) + " rows");
  }
  prov.inputs.emplace_back("input", input);
  prov.inputs.emplace_back("weights", weights_path);
  const bool standardize = !raw && !w.standardized();
  prov.parameters.emplace_back("weights_used", w.standardized() ? "standardized (as loaded)"
                                               : standardize   ? "row-standardized on load"
                                                               : "raw");
  if (standardize) w = row_standardize(w);
  return {std::move(points), std::make_shared<const SpatialWeights>(std::move(w))};
}

struct WeightsArgs {
  std::string input, output, metric = "euclidean", transform, hint_region, json;
  std::optional<double> threshold, gamma;
  bool standardize = false, hint_local = false;
};

inline int run_weights(const WeightsArgs& a, std::ostream& out) {
  Provenance prov{"weights"};
  prov.inputs.emplace_back("input", a.input);
  const PointSet points = load_dataset(a.input);
  WeightsSpec spec{transform_from_flag(a.transform), a.threshold, a.gamma};
  const Metric metric = parse_metric(a.metric);
  prov.parameters.emplace_back("metric", std::string(to_string(metric)));
  prov.parameters.emplace_back("transform", std::string(to_string(spec.kind)));
  if (spec.threshold) prov.parameters.emplace_back("threshold", format_double(*spec.threshold));
  if (spec.gamma) prov.parameters.emplace_back("gamma", format_double(*spec.gamma));
  prov.parameters.emplace_back("standardize", a.standardize ? "true" : "false");
  prov.parameters.emplace_back("output", a.output);

  SpatialWeights w = transform(build_distance_matrix(points, metric), spec);
  if (a.standardize) w = row_standardize(w);
  save_weights(a.output, w);

  json result{{"n", w.size()}, {"nonzeros", w.nonzeros()}, {"standardized", w.standardized()}, {"output", a.output}};
  json isolates = json::array();
  for (auto i : w.isolates()) isolates.push_back(points.ids()[i]);
  result["isolates"] = isolates;

  render(out, prov);
  out << "wrote " << w.nonzeros() << " nonzero weights for N = " << w.size() << " to " << a.output << '\n';
  if (!isolates.empty()) {
    out << "isolates (no neighbours):";
    for (const auto& id : isolates) out << ' ' << id.get<std::string>();
    out << '\n';
  }
  if (!a.hint_region.empty() || a.hint_local) {
    RegionExtent extent = RegionExtent::large;
    if (a.hint_region == "small") {
      extent = RegionExtent::small;
    } else if (!a.hint_region.empty() && a.hint_region != "large") {
      throw InputError(ErrorKind::invalid_input, "--hint-region must be large or small");
    }
    const GuidelineHint hint = guideline_hint(extent, a.hint_local);
    out << "guideline: " << hint.rule << '\n' << "guideline: " << hint.threshold_advice << '\n';
    result["guideline"] = json{{"recommended", to_string(hint.recommended)},
                               {"rule", hint.rule},
                               {"threshold_advice", hint.threshold_advice}};
  }
  write_json(a.json, prov, std::move(result));
  return kExitOk;
}

struct MoranArgs {
  std::string input, weights, var, alternative = "two-sided", json;
  std::size_t permutations = 0;
  std::optional<std::uint64_t> seed;
  bool raw = false;
};

inline int run_moran(const MoranArgs& a, std::ostream& out) {
  Provenance prov{"moran"};
  const Loaded in = load_inputs(a.input, a.weights, a.raw, prov);
  const Alternative alt = parse_alternative(a.alternative);
  prov.parameters.emplace_back("var", a.var);
  prov.parameters.emplace_back("alternative", std::string(to_string(alt)));
  const Eigen::VectorXd& y = in.points.variable(a.var);
  const MoranReport report = moran_test(y, *in.weights, alt);
  json result{{"moran", to_json(report)}};
  std::optional<PermutationResult> perm;
  if (a.permutations > 0) {
    prov.parameters.emplace_back("permutations", std::to_string(a.permutations));
    prov.rng = std::string(PermutationResult::rng);
    const std::uint64_t seed = resolve_seed(a.seed, prov);
    perm = permutation_test(y, *in.weights, Statistic::global, a.permutations, seed, alt);
    result["permutation"] = to_json(*perm);
  }
  render(out, prov);
  render(out, report);
  if (perm) render(out, *perm);
  write_json(a.json, prov, std::move(result));
  return kExitOk;
}

struct LisaArgs {
  std::string input, weights, var, json;
  double alpha = 0.05;
  bool bonferroni = false, raw = false;
  std::size_t permutations = 0;
  std::optional<std::uint64_t> seed;
};

inline int run_lisa(const LisaArgs& a, std::ostream& out) {
  Provenance prov{"lisa"};
  const Loaded in = load_inputs(a.input, a.weights, a.raw, prov);
  prov.parameters.emplace_back("var", a.var);
  prov.parameters.emplace_back("alpha", format_double(a.alpha));
  prov.parameters.emplace_back("bonferroni", a.bonferroni ? "true" : "false");
  const Eigen::VectorXd& y = in.points.variable(a.var);
  const LisaReport report = lisa_test(y, *in.weights, a.alpha, a.bonferroni);
  json result{{"lisa", to_json(report, in.points.ids())}};
  std::optional<PermutationResult> perm;
  if (a.permutations > 0) {
    prov.parameters.emplace_back("permutations", std::to_string(a.permutations));
    prov.rng = std::string(PermutationResult::rng);
    const std::uint64_t seed = resolve_seed(a.seed, prov);
    perm = permutation_test(y, *in.weights, Statistic::local, a.permutations, seed);
    result["permutation"] = to_json(*perm, &in.points.ids());
  }
  render(out, prov);
  render(out, report, in.points.ids(), perm ? &*perm : nullptr);
  write_json(a.json, prov, std::move(result));
  return kExitOk;
}

struct FitArgs {
  std::string input, weights, model, y, lr_against, logdet = "lu", json;
  std::vector<std::string> x;
  bool no_intercept = false, effects = false, wald = false, raw = false;
};

inline int run_fit(const FitArgs& a, std::ostream& out) {
  Provenance prov{"fit"};
  const Loaded in = load_inputs(a.input, a.weights, a.raw, prov);
  ModelSpec spec{parse_family(a.model), a.y, a.x, !a.no_intercept, in.weights};
  FitOptions opt;
  if (a.logdet == "spectral") {
    opt.logdet = LogDetMethod::spectral;
  } else if (a.logdet != "lu") {
    throw InputError(ErrorKind::invalid_input, "--logdet must be lu or spectral");
  }
  prov.parameters.emplace_back("model", std::string(to_string(spec.family)));
  prov.parameters.emplace_back("y", a.y);
  prov.parameters.emplace_back("x", join(a.x));
  prov.parameters.emplace_back("intercept", spec.intercept ? "true" : "false");
  prov.parameters.emplace_back("logdet", a.logdet);
  if (spec.family != Family::slx) {
    opt.logdet_engine = std::make_shared<const LogDeterminant>(in.weights->values(), opt.logdet);
  }

  const ModelFit fit = fit_model(spec, in.points, opt);
  json result{{"fit", to_json(fit)}};
  std::optional<std::vector<RegressorEffect>> effects;
  if (a.effects) {
    effects = marginal_effects(fit);
    result["effects"] = to_json(*effects);
  }
  std::optional<TestResult> lr;
  if (!a.lr_against.empty()) {
    prov.parameters.emplace_back("lr_against", a.lr_against);
    ModelSpec restricted_spec = spec;
    FitOptions ropt = opt;
    if (a.lr_against == "ols") {
      restricted_spec.family = Family::sar;
      ropt.fixed_spatial = 0.0;
    } else {
      restricted_spec.family = parse_family(a.lr_against);
    }
    if (restricted_spec.family == Family::slx) ropt.logdet_engine.reset();
    const ModelFit restricted = fit_model(restricted_spec, in.points, ropt);
    lr = lr_test(fit, restricted);
    result["lr_test"] = to_json(*lr);
    result["lr_test"]["restricted_loglik"] = restricted.loglik;
  }
  std::optional<TestResult> wald;
  if (a.wald) {
    if (spec.family == Family::slx) throw InputError(ErrorKind::invalid_input, "slx has no spatial parameter to test");
    wald = wald_test(fit, spec.family == Family::sem ? SpatialParameter::lambda : SpatialParameter::rho);
    result["wald_test"] = to_json(*wald);
  }

  render(out, prov);
  render(out, fit);
  if (effects) render(out, *effects);
  if (lr) {
    out << "likelihood ratio vs " << a.lr_against << ": LR = " << format_double(lr->statistic)
        << ", df = " << format_double(lr->df) << ", p = " << format_p(lr->p_value) << '\n';
  }
  if (wald) {
    out << "Wald test " << (spec.family == Family::sem ? "lambda" : "rho") << " = 0: W = "
        << format_double(wald->statistic) << ", p = " << format_p(wald->p_value) << '\n';
  }
  write_json(a.json, prov, std::move(result));
  return kExitOk;
}

struct DgpArgs {
  std::string model = "sar", lattice = "20x20", json;
  double rho = 0.0, lambda = 0.0, sigma = 1.0, threshold = 1.0;
  std::vector<double> beta{1.0, 2.0}, gamma;
  std::optional<std::uint64_t> seed;
};

inline DgpSpec make_dgp(const DgpArgs& a, std::uint64_t seed) {
  DgpSpec dgp;
  dgp.family = parse_family(a.model);
  dgp.beta = Eigen::Map<const Eigen::VectorXd>(a.beta.data(), static_cast<Eigen::Index>(a.beta.size()));
  if (lags_regressors(dgp.family)) {
    std::vector<double> g = a.gamma;
    if (g.empty()) g.assign(a.beta.size() > 0 ? a.beta.size() - 1 : 0, 0.0);
    dgp.gamma = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
  }
  dgp.rho = a.rho;
  dgp.lambda = a.lambda;
  dgp.sigma = a.sigma;
  dgp.layout = parse_lattice(a.lattice);
  dgp.seed = seed;
  return dgp;
}

inline void describe_dgp(const DgpArgs& a, Provenance& prov) {
  prov.parameters.emplace_back("model", a.model);
  prov.parameters.emplace_back("beta", join(a.beta));
  if (!a.gamma.empty()) prov.parameters.emplace_back("gamma", join(a.gamma));
  prov.parameters.emplace_back("rho", format_double(a.rho));
  prov.parameters.emplace_back("lambda", format_double(a.lambda));
  prov.parameters.emplace_back("sigma", format_double(a.sigma));
  prov.parameters.emplace_back("lattice", a.lattice);
  prov.parameters.emplace_back("weights", "connectivity threshold=" + format_double(a.threshold) + ", row-standardized");
  prov.rng = std::string(SimulatedData::rng);
}

inline int run_simulate(const DgpArgs& a, const std::string& prefix, std::ostream& out) {
  Provenance prov{"simulate"};
  describe_dgp(a, prov);
  prov.parameters.emplace_back("output_prefix", prefix);
  const std::uint64_t seed = resolve_seed(a.seed, prov);
  const DgpSpec dgp = make_dgp(a, seed);
  const SimulatedData data =
      generate(dgp, WeightsSpec{WeightsKind::connectivity, a.threshold, {}}, dgp.regressor_count());
  const std::string csv = prefix + ".csv";
  const std::string wfile = prefix + ".weights";
  save_dataset(csv, data.points);
  save_weights(wfile, *data.weights);
  render(out, prov);
  out << "wrote " << data.points.size() << " observations to " << csv << " and weights to " << wfile << '\n'
      << "response column: " << data.response << ", regressors: " << join(data.regressors) << '\n';
  write_json(a.json, prov,
             json{{"dataset", csv}, {"weights", wfile}, {"n", data.points.size()}, {"response", data.response},
                  {"regressors", data.regressors}});
  return kExitOk;
}

inline int run_recover(const DgpArgs& a, std::size_t seeds, const std::string& logdet, std::ostream& out) {
  Provenance prov{"recover"};
  describe_dgp(a, prov);
  prov.parameters.emplace_back("seeds", std::to_string(seeds));
  prov.parameters.emplace_back("logdet", logdet);
  const std::uint64_t seed = resolve_seed(a.seed, prov);
  FitOptions opt;
  if (logdet == "spectral") {
    opt.logdet = LogDetMethod::spectral;
  } else if (logdet != "lu") {
    throw InputError(ErrorKind::invalid_input, "--logdet must be lu or spectral");
  }
  const RecoveryTable table =
      recovery_experiment(make_dgp(a, seed), seeds, WeightsSpec{WeightsKind::connectivity, a.threshold, {}}, opt);
  render(out, prov);
  render(out, table);
  write_json(a.json, prov, to_json(table));
  return kExitOk;
}

inline void add_dgp_options(CLI::App* cmd, DgpArgs& a) {
  cmd->add_option("--model", a.model, "slx | sar | sem | sdm")->check(CLI::IsMember({"slx", "sar", "sem", "sdm"}));
  cmd->add_option("--rho", a.rho, "spatial lag parameter");
  cmd->add_option("--lambda", a.lambda, "spatial error parameter");
  cmd->add_option("--beta", a.beta, "intercept followed by slopes, comma separated")->delimiter(',');
  cmd->add_option("--gamma", a.gamma, "lagged-regressor coefficients, comma separated")->delimiter(',');
  cmd->add_option("--sigma", a.sigma, "error standard deviation");
  cmd->add_option("--lattice", a.lattice, "lattice size RxC with unit spacing");
  cmd->add_option("--threshold", a.threshold, "connectivity distance threshold");
  cmd->add_option("--seed", a.seed, "random seed (drawn from entropy when absent)");
  cmd->add_option("--json", a.json, "write the machine-readable report here");
}

}  // namespace cli

/// Runs the command-line interface. Returns the process exit code.
inline int cli_run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatial weights, Moran's I / LISA tests and spatial autoregressive models"};
  app.name(std::string(kToolName));
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_version_flag("--version", std::string(kVersion));

  cli::WeightsArgs wa;
  auto* wcmd = app.add_subcommand("weights", "build a spatial weights matrix from point coordinates");
  wcmd->add_option("--input", wa.input, "dataset CSV with id,x,y columns")->required();
  wcmd->add_option("--metric", wa.metric, "euclidean | manhattan")->check(CLI::IsMember({"euclidean", "manhattan"}));
  wcmd->add_option("--transform", wa.transform, "connectivity | idw | exp | gaussian | idw-threshold")
      ->required()
      ->check(CLI::IsMember({"connectivity", "idw", "exp", "gaussian", "idw-threshold"}));
  wcmd->add_option("--threshold", wa.threshold, "distance threshold d-bar");
  wcmd->add_option("--gamma", wa.gamma, "distance decay exponent");
  wcmd->add_flag("--standardize", wa.standardize, "row-standardize the result");
  wcmd->add_option("--output", wa.output, "weights file to write")->required();
  wcmd->add_option("--hint-region", wa.hint_region, "large | small: print the transformation guideline")
      ->check(CLI::IsMember({"large", "small"}));
  wcmd->add_flag("--hint-local", wa.hint_local, "influence is mainly local: print the guideline");
  wcmd->add_option("--json", wa.json, "write the machine-readable report here");

  cli::MoranArgs ma;
  auto* mcmd = app.add_subcommand("moran", "global Moran's I test");
  mcmd->add_option("--input", ma.input)->required();
  mcmd->add_option("--weights", ma.weights)->required();
  mcmd->add_option("--var", ma.var, "variable to test")->required();
  mcmd->add_option("--alternative", ma.alternative, "two-sided | greater | less")
      ->check(CLI::IsMember({"two-sided", "greater", "less"}));
  mcmd->add_option("--permutations", ma.permutations, "Monte Carlo draws (>= 999)");
  mcmd->add_option("--seed", ma.seed, "random seed (drawn from entropy when absent)");
  mcmd->add_flag("--raw", ma.raw, "use the weights as stored instead of row-standardizing");
  mcmd->add_option("--json", ma.json, "write the machine-readable report here");

  cli::LisaArgs la;
  auto* lcmd = app.add_subcommand("lisa", "local Moran tests");
  lcmd->add_option("--input", la.input)->required();
  lcmd->add_option("--weights", la.weights)->required();
  lcmd->add_option("--var", la.var, "variable to test")->required();
  lcmd->add_option("--alpha", la.alpha, "significance level");
  lcmd->add_flag("--bonferroni", la.bonferroni, "compare p-values with alpha / N");
  lcmd->add_option("--permutations", la.permutations, "conditional permutation draws (>= 999)");
  lcmd->add_option("--seed", la.seed, "random seed (drawn from entropy when absent)");
  lcmd->add_flag("--raw", la.raw, "use the weights as stored instead of row-standardizing");
  lcmd->add_option("--json", la.json, "write the machine-readable report here");

  cli::FitArgs fa;
  auto* fcmd = app.add_subcommand("fit", "fit a spatial regression model");
  fcmd->add_option("--input", fa.input)->required();
  fcmd->add_option("--weights", fa.weights)->required();
  fcmd->add_option("--model", fa.model, "slx | sar | sem | sdm")
      ->required()
      ->check(CLI::IsMember({"slx", "sar", "sem", "sdm"}));
  fcmd->add_option("--y", fa.y, "response variable")->required();
  fcmd->add_option("--x", fa.x, "regressors, comma separated")->required()->delimiter(',');
  fcmd->add_flag("--no-intercept", fa.no_intercept);
  fcmd->add_flag("--effects", fa.effects, "report direct / indirect / total effects");
  fcmd->add_option("--lr-against", fa.lr_against, "restricted model: ols | slx | sar | sem | sdm")
      ->check(CLI::IsMember({"ols", "slx", "sar", "sem", "sdm"}));
  fcmd->add_flag("--wald", fa.wald, "Wald test of the spatial parameter");
  fcmd->add_option("--logdet", fa.logdet, "lu | spectral")->check(CLI::IsMember({"lu", "spectral"}));
  fcmd->add_flag("--raw", fa.raw, "use the weights as stored instead of row-standardizing");
  fcmd->add_option("--json", fa.json, "write the machine-readable report here");

  cli::DgpArgs sa;
  std::string prefix;
  auto* scmd = app.add_subcommand("simulate", "draw a synthetic data set on a lattice");
  cli::add_dgp_options(scmd, sa);
  scmd->add_option("--output-prefix", prefix, "writes PREFIX.csv and PREFIX.weights")->required();

  cli::DgpArgs ra;
  std::size_t seeds = 100;
  std::string recover_logdet = "lu";
  auto* rcmd = app.add_subcommand("recover", "parameter recovery experiment over many seeds");
  cli::add_dgp_options(rcmd, ra);
  rcmd->add_option("--seeds", seeds, "number of replicates (>= 20)");
  rcmd->add_option("--logdet", recover_logdet, "lu | spectral")->check(CLI::IsMember({"lu", "spectral"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*wcmd) return cli::run_weights(wa, out);
    if (*mcmd) return cli::run_moran(ma, out);
    if (*lcmd) return cli::run_lisa(la, out);
    if (*fcmd) return cli::run_fit(fa, out);
    if (*scmd) return cli::run_simulate(sa, prefix, out);
    if (*rcmd) return cli::run_recover(ra, seeds, recover_logdet, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  err << app.help();
  return kExitInput;
}

}  // namespace spatialecon
