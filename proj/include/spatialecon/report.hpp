#pragma once

#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "autocorr.hpp"
#include "io.hpp"
#include "models.hpp"
#include "simulate.hpp"
#include "version.hpp"

namespace spatialecon {

using json = nlohmann::ordered_json;

/// Everything needed to reproduce a report from its own header.
struct Provenance {
  explicit Provenance(std::string cmd) : command(std::move(cmd)) {}

  std::string command;
  std::vector<std::pair<std::string, std::string>> inputs;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::optional<std::uint64_t> seed;
  bool seed_generated = false;
  std::optional<std::string> rng;
};

/// p-values are shown with 4 significant digits; other numbers round-trip exactly.
inline std::string format_p(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", p);
  return buf;
}

inline json to_json(const Provenance& p) {
  json j;
  j["tool"] = std::string(kToolName);
  j["version"] = std::string(kVersion);
  j["command"] = p.command;
  json inputs = json::object();
  for (const auto& [k, v] : p.inputs) inputs[k] = v;
  j["inputs"] = inputs;
  json params = json::object();
  for (const auto& [k, v] : p.parameters) params[k] = v;
  j["parameters"] = params;
  j["seed"] = p.seed ? json(*p.seed) : json(nullptr);
  if (p.seed) j["seed_generated"] = p.seed_generated;
  if (p.rng) j["rng"] = *p.rng;
  return j;
}

inline void render(std::ostream& out, const Provenance& p) {
  out << "# " << kToolName << ' ' << kVersion << ' ' << p.command << '\n';
  for (const auto& [k, v] : p.inputs) out << "# input " << k << " = " << v << '\n';
  for (const auto& [k, v] : p.parameters) out << "# param " << k << " = " << v << '\n';
  if (p.seed) out << "# seed = " << *p.seed << (p.seed_generated ? " (drawn from entropy)" : "") << '\n';
  if (p.rng) out << "# rng = " << *p.rng << '\n';
}

inline json to_json(const MoranReport& r) {
  return json{{"statistic", r.statistic}, {"expected", r.expected}, {"variance", r.variance},
              {"z", r.z},                 {"p_value", r.p_value},   {"alternative", to_string(r.alternative)},
              {"s0", r.s0},               {"n", r.n},               {"reference", MoranReport::reference}};
}

inline void render(std::ostream& out, const MoranReport& r) {
  out << "Moran's I      " << format_double(r.statistic) << '\n'
      << "E[I]           " << format_double(r.expected) << '\n'
      << "Var[I]         " << format_double(r.variance) << '\n'
      << "z              " << format_double(r.z) << '\n'
      << "p-value        " << format_p(r.p_value) << " (" << to_string(r.alternative) << ")\n"
      << "sum of weights " << format_double(r.s0) << '\n'
      << "N              " << r.n << '\n'
      << "reference      " << MoranReport::reference << '\n';
}

inline json to_json(const PermutationResult& r, const std::vector<std::string>* ids = nullptr) {
  json entries = json::array();
  for (std::size_t i = 0; i < r.entries.size(); ++i) {
    const auto& e = r.entries[i];
    json row{{"observed", e.observed}, {"centre", e.centre}, {"p_value", e.p_value},
             {"mean", e.mean},         {"sd", e.sd},         {"min", e.min},
             {"max", e.max}};
    if (ids && r.statistic == Statistic::local) row["id"] = (*ids)[i];
    entries.push_back(row);
  }
  return json{{"statistic", r.statistic == Statistic::global ? "global" : "local"},
              {"alternative", to_string(r.alternative)},
              {"draws", r.draws},
              {"seed", r.seed},
              {"rng", PermutationResult::rng},
              {"entries", entries}};
}

inline void render(std::ostream& out, const PermutationResult& r) {
  out << "permutation draws " << r.draws << " (seed " << r.seed << ", " << to_string(r.alternative) << ")\n";
  if (r.statistic == Statistic::global && !r.entries.empty()) {
    const auto& e = r.entries.front();
    out << "pseudo p-value " << format_p(e.p_value) << '\n'
        << "reference mean " << format_double(e.mean) << ", sd " << format_double(e.sd) << ", range ["
        << format_double(e.min) << ", " << format_double(e.max) << "]\n";
  }
}

inline json to_json(const LisaReport& r, const std::vector<std::string>& ids) {
  json sites = json::array();
  for (std::size_t i = 0; i < r.sites.size(); ++i) {
    const auto& s = r.sites[i];
    sites.push_back(json{{"id", ids[i]},
                         {"value", s.value},
                         {"scaled", s.scaled},
                         {"expected", s.expected},
                         {"variance", s.variance},
                         {"z", s.z},
                         {"p_value", s.p_value},
                         {"significant", s.significant},
                         {"testable", s.testable}});
  }
  json non_testable = json::array();
  for (auto i : r.non_testable) non_testable.push_back(ids[i]);
  return json{{"alpha", r.alpha},          {"bonferroni", r.bonferroni}, {"threshold", r.threshold},
              {"m2", r.m2},                {"kurtosis", r.kurtosis},     {"reference", LisaReport::reference},
              {"caveat", LisaReport::caveat}, {"non_testable", non_testable}, {"sites", sites}};
}

inline void render(std::ostream& out, const LisaReport& r, const std::vector<std::string>& ids,
                   const PermutationResult* perm = nullptr) {
  out << "significance threshold " << format_double(r.threshold)
      << (r.bonferroni ? " (alpha / N)" : " (alpha)") << '\n';
  out << "moments refer to I_i / m2, m2 = " << format_double(r.m2) << '\n';
  out << "id\tI_i\tI_i/m2\tE\tVar\tz\tp\tsignificant";
  if (perm) out << "\tpseudo_p";
  out << '\n';
  for (std::size_t i = 0; i < r.sites.size(); ++i) {
    const auto& s = r.sites[i];
    out << ids[i] << '\t' << format_double(s.value) << '\t' << format_double(s.scaled) << '\t'
        << format_double(s.expected) << '\t'
        << format_double(s.variance) << '\t';
    if (s.testable) {
      out << format_double(s.z) << '\t' << format_p(s.p_value) << '\t' << (s.significant ? "yes" : "no");
    } else {
      out << "-\t-\tnot testable";
    }
    if (perm) out << '\t' << format_p(perm->entries[i].p_value);
    out << '\n';
  }
  if (!r.non_testable.empty()) {
    out << "not testable (no neighbours or degenerate variance):";
    for (auto i : r.non_testable) out << ' ' << ids[i];
    out << '\n';
  }
  out << "note: " << LisaReport::caveat << '\n';
}

inline json to_json(const ResidualDiagnostics& d) {
  return json{{"mean_zero", {{"statistic", d.mean_zero.statistic},
                             {"pass", d.mean_zero.pass ? json(*d.mean_zero.pass) : json(nullptr)}}},
              {"homoscedastic", {{"statistic", d.homoscedastic.statistic},
                                 {"df", d.homoscedastic.df},
                                 {"p_value", d.homoscedastic.p_value},
                                 {"pass", d.homoscedastic.pass}}},
              {"residual_moran", to_json(d.residual_moran)},
              {"residual_moran_pass", d.residual_moran_pass}};
}

inline json to_json(const ModelFit& f) {
  json coefs = json::array();
  const Eigen::VectorXd c = f.coefficients();
  for (std::size_t i = 0; i < f.coefficient_names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const double se = std::sqrt(f.vcov(k, k));
    const double z = c(k) / se;
    coefs.push_back(json{{"name", f.coefficient_names[i]},
                         {"estimate", c(k)},
                         {"std_error", se},
                         {"z", z},
                         {"p_value", normal_p_value(z, Alternative::two_sided)}});
  }
  json j{{"family", to_string(f.family)}, {"n", f.n}, {"response", f.spec.response}, {"coefficients", coefs}};
  if (f.rho) j["rho"] = *f.rho;
  if (f.lambda) j["lambda"] = *f.lambda;
  if (f.spatial_free()) j["spatial_std_error"] = f.std_error(f.rho ? "rho" : "lambda");
  j["spatial_fixed"] = f.spatial_fixed;
  j["sigma2"] = f.sigma2;
  j["loglik"] = f.loglik;
  j["diagnostics"] = to_json(f.diagnostics);
  return j;
}

inline void render(std::ostream& out, const ModelFit& f) {
  out << "model " << to_string(f.family) << ", N = " << f.n << ", response " << f.spec.response << '\n';
  out << "term\testimate\tstd_error\tz\tp\n";
  const Eigen::VectorXd c = f.coefficients();
  for (std::size_t i = 0; i < f.coefficient_names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const double se = std::sqrt(f.vcov(k, k));
    const double z = c(k) / se;
    out << f.coefficient_names[i] << '\t' << format_double(c(k)) << '\t' << format_double(se) << '\t'
        << format_double(z) << '\t' << format_p(normal_p_value(z, Alternative::two_sided)) << '\n';
  }
  if (f.rho || f.lambda) {
    out << (f.rho ? "rho" : "lambda") << '\t' << format_double(f.spatial_value());
    if (f.spatial_free()) {
      out << '\t' << format_double(f.std_error(f.rho ? "rho" : "lambda"));
    } else {
      out << "\t(fixed)";
    }
    out << '\n';
  }
  out << "sigma2 (ML)\t" << format_double(f.sigma2) << '\n' << "log-likelihood\t" << format_double(f.loglik) << '\n';
  const auto& d = f.diagnostics;
  out << "residual checks:\n"
      << "  mean zero      |mean|/sd = " << format_double(d.mean_zero.statistic)
      << (d.mean_zero.pass ? (*d.mean_zero.pass ? "  pass" : "  FAIL") : "  (no intercept, not judged)") << '\n'
      << "  homoscedastic  N R^2 = " << format_double(d.homoscedastic.statistic) << ", p = "
      << format_p(d.homoscedastic.p_value) << (d.homoscedastic.pass ? "  pass" : "  FAIL") << '\n'
      << "  independence   Moran's I = " << format_double(d.residual_moran.statistic) << ", p = "
      << format_p(d.residual_moran.p_value) << (d.residual_moran_pass ? "  pass" : "  FAIL") << '\n';
}

inline json to_json(const std::vector<RegressorEffect>& effects) {
  json arr = json::array();
  for (const auto& e : effects) {
    arr.push_back(json{{"regressor", e.regressor}, {"direct", e.direct}, {"indirect", e.indirect}, {"total", e.total}});
  }
  return arr;
}

inline void render(std::ostream& out, const std::vector<RegressorEffect>& effects) {
  out << "marginal effects\nregressor\tdirect\tindirect\ttotal\n";
  for (const auto& e : effects) {
    out << e.regressor << '\t' << format_double(e.direct) << '\t' << format_double(e.indirect) << '\t'
        << format_double(e.total) << '\n';
  }
}

inline json to_json(const TestResult& t) {
  return json{{"statistic", t.statistic}, {"df", t.df}, {"p_value", t.p_value}};
}

inline json to_json(const RecoveryTable& t) {
  json params = json::array();
  for (const auto& p : t.parameters) {
    params.push_back(json{{"name", p.name},
                          {"truth", p.truth},
                          {"fits", p.fits},
                          {"mean", p.mean},
                          {"bias", p.bias},
                          {"rmse", p.rmse},
                          {"mean_abs_error", p.mean_abs_error},
                          {"coverage", p.coverage}});
  }
  json failures = json::array();
  for (const auto& f : t.failures) {
    failures.push_back(json{{"replicate", f.replicate}, {"seed", f.seed}, {"message", f.message}});
  }
  return json{{"family", to_string(t.dgp.family)},
              {"replicates", t.replicates},
              {"rng", SimulatedData::rng},
              {"parameters", params},
              {"failures", failures}};
}

inline void render(std::ostream& out, const RecoveryTable& t) {
  out << "recovery: " << to_string(t.dgp.family) << ", " << t.replicates << " replicates, "
      << t.failures.size() << " failed\n";
  out << "parameter\ttruth\tmean\tbias\trmse\tmean_abs_error\tcoverage95\n";
  for (const auto& p : t.parameters) {
    out << p.name << '\t' << format_double(p.truth) << '\t' << format_double(p.mean) << '\t'
        << format_double(p.bias) << '\t' << format_double(p.rmse) << '\t' << format_double(p.mean_abs_error)
        << '\t' << format_double(p.coverage) << '\n';
  }
  for (const auto& f : t.failures) out << "failed replicate " << f.replicate << ": " << f.message << '\n';
}

}  // namespace spatialecon
