// Batch experiment layer: JSON experiment configs, named initial-data
// recipes, a preset catalog, and the dispatcher that runs an experiment,
// evaluates its checks, and writes CSV/JSON reports atomically. Outputs are
// deterministic for a fixed config: no timestamps, fixed column orders, and
// %.17g number formatting throughout.

#ifndef FRACPME_EXPERIMENT_HPP
#define FRACPME_EXPERIMENT_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fracpme/asymptotics.hpp"
#include "fracpme/checkpoint.hpp"
#include "fracpme/fractional.hpp"
#include "fracpme/inequalities.hpp"
#include "fracpme/manifold.hpp"
#include "fracpme/random_fields.hpp"
#include "fracpme/solver.hpp"

namespace fracpme {

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Writes via a sibling temp file plus rename so readers never observe a
// partially written report.
inline void atomic_write_text(const std::filesystem::path& path, const std::string& body) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    os.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!os) throw std::runtime_error("failed to write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

struct InitialDataSpec {
  std::string recipe = "constant";  // constant | single-mode | random-band-limited |
                                    // random-nonnegative
  double constant = 1.0;            // constant value; additive offset for other recipes
  std::array<int, 3> mode{1, 0, 0};
  double amplitude = 1.0;  // single-mode amplitude
  EnsembleSpec ensemble;
  std::uint64_t sample_index = 0;
};

inline Field build_initial_data(const ManifoldSpec& spec, const InitialDataSpec& init) {
  if (init.recipe == "constant") {
    Field f(spec);
    for (double& v : f.values) v = init.constant;
    return f;
  }
  if (init.recipe == "single-mode") {
    return make_field(spec, [&](const std::array<double, 3>& x) {
      double angle = 0.0;
      for (int d = 0; d < spec.dim; ++d)
        angle += 2.0 * std::numbers::pi * init.mode[static_cast<std::size_t>(d)] *
                 x[static_cast<std::size_t>(d)] / spec.periods[static_cast<std::size_t>(d)];
      return init.constant + init.amplitude * std::cos(angle);
    });
  }
  if (init.recipe == "random-band-limited" || init.recipe == "random-nonnegative") {
    Field f = init.recipe == "random-band-limited"
                  ? sample_band_limited(spec, init.ensemble, init.sample_index)
                  : sample_nonnegative(spec, init.ensemble, init.sample_index);
    if (init.constant != 0.0)
      for (double& v : f.values) v += init.constant;
    return f;
  }
  throw std::invalid_argument("initial_data: unknown recipe \"" + init.recipe + "\"");
}

inline void to_json(nlohmann::json& j, const InitialDataSpec& init) {
  j = {{"recipe", init.recipe}, {"constant", init.constant}};
  if (init.recipe == "single-mode") {
    j["mode"] = init.mode;
    j["amplitude"] = init.amplitude;
  }
  if (init.recipe.rfind("random-", 0) == 0) {
    j["ensemble"] = init.ensemble;
    j["sample_index"] = init.sample_index;
  }
}

inline void from_json(const nlohmann::json& j, InitialDataSpec& init) {
  init = InitialDataSpec{};
  init.recipe = j.at("recipe").get<std::string>();
  init.constant = j.value("constant", init.recipe == "constant" ? 1.0 : 0.0);
  if (init.recipe == "single-mode") {
    init.mode = j.value("mode", std::array<int, 3>{1, 0, 0});
    init.amplitude = j.value("amplitude", 1.0);
  } else if (init.recipe.rfind("random-", 0) == 0) {
    if (!j.contains("ensemble") || !j.at("ensemble").contains("seed"))
      throw std::invalid_argument(
          "initial_data: random recipes require an explicit \"ensemble.seed\"");
    init.ensemble = j.at("ensemble").get<EnsembleSpec>();
    init.sample_index = j.value("sample_index", std::uint64_t{0});
  }
}

enum class ExperimentKind { evolve, inequality_suite, decay_fit, oracle_crosscheck, omega_limit };

inline std::string kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::evolve: return "evolve";
    case ExperimentKind::inequality_suite: return "inequality-suite";
    case ExperimentKind::decay_fit: return "decay-fit";
    case ExperimentKind::oracle_crosscheck: return "oracle-crosscheck";
    case ExperimentKind::omega_limit: return "omega-limit";
  }
  throw std::logic_error("kind_name: unreachable");
}

inline ExperimentKind kind_from_name(const std::string& s) {
  for (ExperimentKind k :
       {ExperimentKind::evolve, ExperimentKind::inequality_suite, ExperimentKind::decay_fit,
        ExperimentKind::oracle_crosscheck, ExperimentKind::omega_limit})
    if (kind_name(k) == s) return k;
  throw std::invalid_argument("config error: unknown experiment kind \"" + s + "\"");
}

struct ExperimentConfig {
  std::string name = "experiment";
  ExperimentKind kind = ExperimentKind::evolve;
  ManifoldSpec manifold;
  InitialDataSpec initial;
  PMEConfig pme;

  // evolve checks
  double check_slack = 1e-8;
  double mass_tol_per_step = 1e-12;
  double mass_tol_total = 1e-9;
  bool check_linear_exact = false;
  double linear_exact_tolerance = 1e-4;
  double comparison_margin = 0.0;  // > 0 runs an ordered partner and checks ordering
  double mean_convergence_tolerance = 0.0;  // > 0 checks ||u(T) - mean||_1 decay
  bool write_state_checkpoint = true;

  // inequality suite
  double sigma = 0.5;
  EnsembleSpec ensemble;
  int ensemble_count = 100;
  bool doubling_check = true;
  double doubling_tolerance = 0.15;

  // decay fit
  double fit_norm_p = 2.0;
  bool fit_centered = false;
  double window_start = 0.0;
  double window_end = 0.0;
  double predicted_exponent = -1.0;
  double fit_tolerance = 0.2;
  bool check_exponent_formulas = false;

  // oracle crosscheck
  std::string oracle_mode = "operators";  // operators | subordination
  std::vector<double> oracle_sigmas{0.25, 0.5, 0.75};
  double oracle_tolerance = 1e-4;
  int oracle_band = 3;
  std::uint64_t oracle_seed = 1;

  // omega limit
  std::vector<double> omegas;
  double omega_slack = 1e-6;
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& cfg) {
  j = {{"name", cfg.name}, {"kind", kind_name(cfg.kind)}, {"manifold", cfg.manifold}};
  switch (cfg.kind) {
    case ExperimentKind::evolve:
      j["initial"] = cfg.initial;
      j["pme"] = cfg.pme;
      j["check_slack"] = cfg.check_slack;
      j["mass_tol_per_step"] = cfg.mass_tol_per_step;
      j["mass_tol_total"] = cfg.mass_tol_total;
      j["check_linear_exact"] = cfg.check_linear_exact;
      j["linear_exact_tolerance"] = cfg.linear_exact_tolerance;
      j["comparison_margin"] = cfg.comparison_margin;
      j["mean_convergence_tolerance"] = cfg.mean_convergence_tolerance;
      j["write_state_checkpoint"] = cfg.write_state_checkpoint;
      break;
    case ExperimentKind::inequality_suite:
      j["sigma"] = cfg.sigma;
      j["ensemble"] = cfg.ensemble;
      j["ensemble_count"] = cfg.ensemble_count;
      j["doubling_check"] = cfg.doubling_check;
      j["doubling_tolerance"] = cfg.doubling_tolerance;
      break;
    case ExperimentKind::decay_fit:
      j["initial"] = cfg.initial;
      j["pme"] = cfg.pme;
      j["fit_norm_p"] = std::isinf(cfg.fit_norm_p) ? nlohmann::json("inf")
                                                   : nlohmann::json(cfg.fit_norm_p);
      j["fit_centered"] = cfg.fit_centered;
      j["window_start"] = cfg.window_start;
      j["window_end"] = cfg.window_end;
      j["predicted_exponent"] = cfg.predicted_exponent;
      j["fit_tolerance"] = cfg.fit_tolerance;
      j["check_exponent_formulas"] = cfg.check_exponent_formulas;
      break;
    case ExperimentKind::oracle_crosscheck:
      j["oracle_mode"] = cfg.oracle_mode;
      j["oracle_sigmas"] = cfg.oracle_sigmas;
      j["oracle_tolerance"] = cfg.oracle_tolerance;
      j["oracle_band"] = cfg.oracle_band;
      j["oracle_seed"] = cfg.oracle_seed;
      break;
    case ExperimentKind::omega_limit:
      j["initial"] = cfg.initial;
      j["pme"] = cfg.pme;
      j["omegas"] = cfg.omegas;
      j["omega_slack"] = cfg.omega_slack;
      break;
  }
}

inline ExperimentConfig parse_experiment(const nlohmann::json& j) {
  try {
    ExperimentConfig cfg;
    cfg.name = j.value("name", cfg.name);
    cfg.kind = kind_from_name(j.at("kind").get<std::string>());
    cfg.manifold = j.at("manifold").get<ManifoldSpec>();
    switch (cfg.kind) {
      case ExperimentKind::evolve:
        cfg.initial = j.at("initial").get<InitialDataSpec>();
        cfg.pme = j.at("pme").get<PMEConfig>();
        cfg.check_slack = j.value("check_slack", cfg.check_slack);
        cfg.mass_tol_per_step = j.value("mass_tol_per_step", cfg.mass_tol_per_step);
        cfg.mass_tol_total = j.value("mass_tol_total", cfg.mass_tol_total);
        cfg.check_linear_exact = j.value("check_linear_exact", false);
        cfg.linear_exact_tolerance = j.value("linear_exact_tolerance", 1e-4);
        cfg.comparison_margin = j.value("comparison_margin", 0.0);
        cfg.mean_convergence_tolerance = j.value("mean_convergence_tolerance", 0.0);
        cfg.write_state_checkpoint = j.value("write_state_checkpoint", true);
        break;
      case ExperimentKind::inequality_suite:
        cfg.sigma = j.at("sigma").get<double>();
        cfg.ensemble = j.at("ensemble").get<EnsembleSpec>();
        cfg.ensemble_count = j.at("ensemble_count").get<int>();
        cfg.doubling_check = j.value("doubling_check", true);
        cfg.doubling_tolerance = j.value("doubling_tolerance", 0.15);
        break;
      case ExperimentKind::decay_fit: {
        cfg.initial = j.at("initial").get<InitialDataSpec>();
        cfg.pme = j.at("pme").get<PMEConfig>();
        const nlohmann::json& np = j.at("fit_norm_p");
        cfg.fit_norm_p =
            np.is_string() ? std::numeric_limits<double>::infinity() : np.get<double>();
        cfg.fit_centered = j.value("fit_centered", false);
        cfg.window_start = j.at("window_start").get<double>();
        cfg.window_end = j.at("window_end").get<double>();
        cfg.predicted_exponent = j.at("predicted_exponent").get<double>();
        cfg.fit_tolerance = j.value("fit_tolerance", 0.2);
        cfg.check_exponent_formulas = j.value("check_exponent_formulas", false);
        break;
      }
      case ExperimentKind::oracle_crosscheck:
        cfg.oracle_mode = j.value("oracle_mode", "operators");
        if (cfg.oracle_mode != "operators" && cfg.oracle_mode != "subordination")
          throw std::invalid_argument("config error: oracle_mode must be \"operators\" or "
                                      "\"subordination\"");
        cfg.oracle_sigmas = j.value("oracle_sigmas", cfg.oracle_sigmas);
        cfg.oracle_tolerance = j.value("oracle_tolerance", 1e-4);
        cfg.oracle_band = j.value("oracle_band", 3);
        cfg.oracle_seed = j.value("oracle_seed", std::uint64_t{1});
        break;
      case ExperimentKind::omega_limit:
        cfg.initial = j.at("initial").get<InitialDataSpec>();
        cfg.pme = j.at("pme").get<PMEConfig>();
        cfg.omegas = j.at("omegas").get<std::vector<double>>();
        cfg.omega_slack = j.value("omega_slack", 1e-6);
        break;
    }
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config error: ") + e.what());
  }
}

struct CheckLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunResult {
  std::string name;
  bool pass = true;
  std::vector<CheckLine> checks;
  std::vector<std::string> artifacts;
  std::string error;  // nonempty on config/runtime failure rather than check failure

  void add(const std::string& check, bool ok, const std::string& detail) {
    checks.push_back({check, ok, detail});
    pass = pass && ok;
  }
};

inline std::string trajectory_csv(const Trajectory& traj) {
  std::string s = "t,l1,l2,lmplus1,linf,mean,energy,dissipation\n";
  for (const StepDiagnostics& d : traj.diagnostics) {
    s += format_double(d.t) + ',' + format_double(d.l1) + ',' + format_double(d.l2) + ',' +
         format_double(d.lmp1) + ',' + format_double(d.linf) + ',' +
         format_double(d.mean_value) + ',' + format_double(d.energy) + ',' +
         format_double(d.dissipation) + '\n';
  }
  return s;
}

namespace detail {

struct SeriesCheck {
  double worst_increase = 0.0;
  bool nonincreasing(double slack) const { return worst_increase <= slack; }
};

template <typename Getter>
SeriesCheck scan_series(const std::vector<StepDiagnostics>& diag, Getter&& get) {
  SeriesCheck out;
  for (std::size_t i = 1; i < diag.size(); ++i)
    out.worst_increase = std::max(out.worst_increase, get(diag[i]) - get(diag[i - 1]));
  return out;
}

inline void append_trajectory_checks(RunResult& res, const Trajectory& traj, double slack,
                                     double mass_tol_step, double mass_tol_total) {
  const auto& diag = traj.diagnostics;
  const struct {
    const char* label;
    double StepDiagnostics::* member;
  } norms[] = {{"l1_contraction", &StepDiagnostics::l1},
               {"l2_contraction", &StepDiagnostics::l2},
               {"lmplus1_contraction", &StepDiagnostics::lmp1},
               {"linf_contraction", &StepDiagnostics::linf},
               {"energy_dissipation", &StepDiagnostics::energy}};
  for (const auto& n : norms) {
    const SeriesCheck c = scan_series(diag, [&](const StepDiagnostics& d) { return d.*(n.member); });
    const double scaled = slack * std::max(1.0, diag.front().*(n.member));
    res.add(n.label, c.worst_increase <= scaled,
            "worst step increase " + format_double(c.worst_increase));
  }
  if (traj.config.frac.omega == 0.0) {
    const double mean0 = diag.front().mean_value;
    const double scale = std::max(1.0, std::abs(mean0));
    double worst_step = 0.0;
    for (std::size_t i = 1; i < diag.size(); ++i)
      worst_step = std::max(worst_step, std::abs(diag[i].mean_value - diag[i - 1].mean_value));
    const double total = std::abs(diag.back().mean_value - mean0);
    res.add("mass_per_step", worst_step <= mass_tol_step * scale,
            "worst step drift " + format_double(worst_step));
    res.add("mass_total", total <= mass_tol_total * scale, "total drift " + format_double(total));
  }
}

}  // namespace detail

inline RunResult run_experiment(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir) {
  RunResult res;
  res.name = cfg.name;
  const auto artifact = [&](const std::string& suffix) {
    return out_dir / (cfg.name + suffix);
  };

  switch (cfg.kind) {
    case ExperimentKind::evolve: {
      const Field u0 = build_initial_data(cfg.manifold, cfg.initial);
      const Trajectory traj = evolve(u0, cfg.pme);
      detail::append_trajectory_checks(res, traj, cfg.check_slack, cfg.mass_tol_per_step,
                                       cfg.mass_tol_total);
      if (cfg.check_linear_exact) {
        if (cfg.pme.m != 1.0)
          throw std::invalid_argument("config error: check_linear_exact requires m = 1");
        const Field exact = semigroup_apply(u0, cfg.pme.horizon, cfg.pme.frac);
        double err = 0.0;
        for (std::size_t i = 0; i < exact.values.size(); ++i)
          err = std::max(err, std::abs(exact.values[i] - traj.final_state.values[i]));
        res.add("linear_exactness", err <= cfg.linear_exact_tolerance,
                "sup error " + format_double(err));
      }
      if (cfg.comparison_margin > 0.0) {
        InitialDataSpec partner = cfg.initial;
        partner.sample_index += 1000;  // independent nonnegative bump
        partner.recipe = "random-nonnegative";
        partner.constant = 0.0;
        if (partner.ensemble.seed == 0) partner.ensemble.seed = 1;
        Field v0 = build_initial_data(cfg.manifold, partner);
        for (std::size_t i = 0; i < v0.values.size(); ++i)
          v0.values[i] = u0.values[i] + cfg.comparison_margin + v0.values[i];
        const Trajectory above = evolve(v0, cfg.pme);
        double worst = 0.0;
        for (std::size_t r = 0; r < traj.records.size(); ++r)
          for (std::size_t i = 0; i < traj.records[r].values.size(); ++i)
            worst = std::max(worst,
                             traj.records[r].values[i] - above.records[r].values[i]);
        res.add("comparison_order", worst <= cfg.check_slack,
                "worst ordering defect " + format_double(worst));
      }
      if (cfg.mean_convergence_tolerance > 0.0) {
        const MeanConvergenceReport rep =
            convergence_to_mean(traj, 1.0, cfg.mean_convergence_tolerance);
        res.add("mean_convergence", rep.converged && rep.monotone_trend,
                "final/initial distance " +
                    format_double(rep.initial_distance > 0.0
                                      ? rep.final_distance / rep.initial_distance
                                      : 0.0));
      }
      atomic_write_text(artifact(".csv"), trajectory_csv(traj));
      res.artifacts.push_back(artifact(".csv").string());
      if (cfg.write_state_checkpoint) {
        std::ostringstream os(std::ios::binary);
        write_checkpoint(os, traj.final_state, cfg.pme, cfg.pme.horizon);
        atomic_write_text(artifact(".ckpt"), os.str());
        res.artifacts.push_back(artifact(".ckpt").string());
      }
      break;
    }

    case ExperimentKind::inequality_suite: {
      const CalibrationResult cal =
          calibrate_constants(cfg.manifold, cfg.ensemble, cfg.ensemble_count, cfg.sigma);
      for (const InequalityReport& r : cal.reports)
        res.add("calibrate_" + r.kind, r.pass,
                r.enabled ? "worst ratio " + format_double(r.worst_ratio) : r.note);
      const VerificationReport same = verify_constants(cfg.manifold, cfg.ensemble,
                                                       cfg.ensemble_count, cfg.sigma,
                                                       cal.constants);
      res.add("zero_violations", same.violations.empty(),
              std::to_string(same.violations.size()) + " violating samples");
      const FracParams heat{cfg.sigma, 0.0};
      const UltracontractivityFit uc = ultracontractivity_fit(
          cfg.manifold, heat, cfg.ensemble, std::min(cfg.ensemble_count, 50),
          {{0.5, 2.0}, {1.0, 2.0}, {1.0, 4.0}, {2.0, 4.0}});
      res.add("ultracontractivity_finite", uc.all_finite,
              "empirical constant " + format_double(uc.empirical_constant));
      if (cfg.doubling_check) {
        const CalibrationResult twice = calibrate_constants(
            cfg.manifold, cfg.ensemble, 2 * cfg.ensemble_count, cfg.sigma);
        const auto stable = [&](double a, double b) {
          return b <= a * (1.0 + cfg.doubling_tolerance);
        };
        const bool ok = stable(cal.constants.sobolev_poincare,
                               twice.constants.sobolev_poincare) &&
                        stable(cal.constants.nash, twice.constants.nash) &&
                        stable(cal.constants.log_sobolev, twice.constants.log_sobolev);
        res.add("doubling_stability", ok,
                "nash " + format_double(cal.constants.nash) + " -> " +
                    format_double(twice.constants.nash));
      }
      nlohmann::json report{{"kind", "inequality-suite"},
                            {"sigma", cfg.sigma},
                            {"ensemble", cfg.ensemble},
                            {"ensemble_count", cfg.ensemble_count},
                            {"constants",
                             {{"sobolev_poincare", cal.constants.sobolev_poincare},
                              {"nash", cal.constants.nash},
                              {"log_sobolev", cal.constants.log_sobolev},
                              {"ultracontractivity", uc.empirical_constant}}}};
      for (const InequalityReport& r : cal.reports)
        report["reports"].push_back({{"kind", r.kind},
                                     {"count", r.count},
                                     {"band", r.band},
                                     {"seed", r.seed},
                                     {"enabled", r.enabled},
                                     {"note", r.note},
                                     {"worst_ratio", r.worst_ratio},
                                     {"constant", r.constant},
                                     {"violations", r.violations},
                                     {"pass", r.pass}});
      atomic_write_text(artifact(".json"), report.dump(2) + "\n");
      res.artifacts.push_back(artifact(".json").string());
      std::string csv = "sample";
      for (const InequalityReport& r : cal.reports) csv += "," + r.kind;
      csv += '\n';
      for (int i = 0; i < cfg.ensemble_count; ++i) {
        csv += std::to_string(i);
        for (const InequalityReport& r : cal.reports) {
          csv += ',';
          if (static_cast<std::size_t>(i) < r.per_sample.size())
            csv += format_double(r.per_sample[static_cast<std::size_t>(i)]);
        }
        csv += '\n';
      }
      atomic_write_text(artifact(".csv"), csv);
      res.artifacts.push_back(artifact(".csv").string());
      break;
    }

    case ExperimentKind::decay_fit: {
      if (cfg.check_exponent_formulas) {
        const SmoothingExponents e = smoothing_exponents_noncompact(2.0, 0.5, 2.0, 3);
        const bool anchor = e.alpha == 0.6 && e.gamma == 0.4 &&
                            std::abs(smoothing_exponents_closed(2.0, 0.5, 2.0, 3) - 8.0 / 27.0) <=
                                1e-15;
        bool identity = true;
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> up(2.0, 8.0), us(0.05, 0.95), um(1.01, 5.0);
        for (int i = 0; i < 100; ++i) {
          const double m = um(rng);
          const SmoothingExponents r =
              smoothing_exponents_noncompact(up(rng), us(rng), m, 1 + i % 3);
          if (std::abs(r.alpha * (m - 1.0) + r.gamma - 1.0) > 4e-15) identity = false;
        }
        res.add("exponent_formulas", anchor && identity,
                identity ? "anchor values and scaling identity hold"
                         : "scaling identity violated");
      }
      const Field u0 = build_initial_data(cfg.manifold, cfg.initial);
      const Trajectory traj = evolve(u0, cfg.pme);
      const DecayFitReport rep =
          fit_decay(traj, cfg.fit_norm_p, cfg.fit_centered, cfg.window_start, cfg.window_end,
                    cfg.predicted_exponent, cfg.fit_tolerance);
      res.add("decay_bound", rep.bound_pass, "prefactor " + format_double(rep.prefactor));
      res.add("decay_regime", rep.regime_pass,
              "fitted " + format_double(rep.fitted_exponent) + " predicted " +
                  format_double(rep.predicted_exponent));
      nlohmann::json report{{"kind", "decay-fit"},
                            {"norm_p", std::isinf(rep.norm_p) ? nlohmann::json("inf")
                                                              : nlohmann::json(rep.norm_p)},
                            {"centered", rep.centered},
                            {"window", {rep.window_start, rep.window_end}},
                            {"fitted_exponent", rep.fitted_exponent},
                            {"confidence_width", rep.confidence_width},
                            {"predicted_exponent", rep.predicted_exponent},
                            {"tolerance", rep.tolerance},
                            {"prefactor", rep.prefactor},
                            {"prefactor_form", rep.prefactor_form},
                            {"bound_pass", rep.bound_pass},
                            {"regime_pass", rep.regime_pass},
                            {"pass", rep.pass}};
      atomic_write_text(artifact(".json"), report.dump(2) + "\n");
      res.artifacts.push_back(artifact(".json").string());
      std::string csv = "t,norm\n";
      for (const auto& [t, v] : rep.table)
        csv += format_double(t) + ',' + format_double(v) + '\n';
      atomic_write_text(artifact(".csv"), csv);
      res.artifacts.push_back(artifact(".csv").string());
      break;
    }

    case ExperimentKind::oracle_crosscheck: {
      std::string csv;
      if (cfg.oracle_mode == "operators") {
        EnsembleSpec es;
        es.band = cfg.oracle_band;
        es.seed = cfg.oracle_seed;
        const Field f = sample_band_limited(cfg.manifold, es, 0);
        csv = "sigma,balakrishnan_error,phillips_error,cross_error\n";
        for (double sigma : cfg.oracle_sigmas) {
          const FracParams fp{sigma, 0.0};
          const Field exact = apply_frac_laplacian(f, fp);
          const QuadratureApply bal = apply_frac_laplacian_balakrishnan(f, fp, QuadratureSpec{});
          const QuadratureApply phi = apply_phillips(f, fp, QuadratureSpec{});
          double scale = 0.0;
          for (double v : exact.values) scale = std::max(scale, std::abs(v));
          double e_bal = 0.0, e_phi = 0.0, e_cross = 0.0;
          for (std::size_t i = 0; i < exact.values.size(); ++i) {
            e_bal = std::max(e_bal, std::abs(bal.field.values[i] - exact.values[i]));
            e_phi = std::max(e_phi, std::abs(phi.field.values[i] - exact.values[i]));
            e_cross = std::max(e_cross, std::abs(phi.field.values[i] - bal.field.values[i]));
          }
          e_bal /= scale;
          e_phi /= scale;
          e_cross /= scale;
          const bool ok = bal.cutoffs_adequate && phi.cutoffs_adequate &&
                          std::max({e_bal, e_phi, e_cross}) <= cfg.oracle_tolerance;
          res.add("operators_sigma_" + format_double(sigma), ok,
                  "worst pairwise error " + format_double(std::max({e_bal, e_phi, e_cross})));
          csv += format_double(sigma) + ',' + format_double(e_bal) + ',' + format_double(e_phi) +
                 ',' + format_double(e_cross) + '\n';
        }
      } else {
        const QuadratureSpec q = subordination_quadrature();
        const QuadratureRule rule = build_rule(q);
        csv = "k,t,relative_error\n";
        double worst = 0.0;
        for (int k = 1; k <= 8; ++k) {
          for (double t : {0.1, 1.0, 10.0}) {
            const double lam = static_cast<double>(k) * k;
            const double got = subordinated_multiplier(lam, t, rule, q.t_max);
            const double want = std::exp(-t * k);
            const double rel = std::abs(got - want) / want;
            worst = std::max(worst, rel);
            csv += std::to_string(k) + ',' + format_double(t) + ',' + format_double(rel) + '\n';
          }
        }
        res.add("subordination_identity", worst <= cfg.oracle_tolerance,
                "worst relative error " + format_double(worst));
        const double mass = subordinator_mass(1.0, q);
        res.add("subordinator_mass", std::abs(mass - 1.0) <= cfg.oracle_tolerance,
                "mass " + format_double(mass));
      }
      atomic_write_text(artifact(".csv"), csv);
      res.artifacts.push_back(artifact(".csv").string());
      break;
    }

    case ExperimentKind::omega_limit: {
      const Field u0 = build_initial_data(cfg.manifold, cfg.initial);
      const OmegaLimitReport rep = omega_limit_study(u0, cfg.pme, cfg.omegas);
      res.add("omega_cauchy_bound", rep.within(cfg.omega_slack),
              "pairs " + std::to_string(rep.pairs.size()));
      nlohmann::json report{{"kind", "omega-limit"},
                            {"omegas", rep.omegas},
                            {"u0_m_moment", rep.u0_m_moment}};
      std::string csv = "omega_high,omega_low,sup_l1_distance,bound\n";
      for (const OmegaPair& p : rep.pairs) {
        report["pairs"].push_back({{"omega_high", p.omega_high},
                                   {"omega_low", p.omega_low},
                                   {"sup_l1_distance", p.sup_l1_distance},
                                   {"bound", p.bound}});
        csv += format_double(p.omega_high) + ',' + format_double(p.omega_low) + ',' +
               format_double(p.sup_l1_distance) + ',' + format_double(p.bound) + '\n';
      }
      atomic_write_text(artifact(".json"), report.dump(2) + "\n");
      atomic_write_text(artifact(".csv"), csv);
      res.artifacts.push_back(artifact(".json").string());
      res.artifacts.push_back(artifact(".csv").string());
      break;
    }
  }
  return res;
}

struct PresetInfo {
  std::string name;
  std::string summary;
};

inline std::vector<PresetInfo> preset_catalog() {
  return {
      {"linear-exactness", "m=1 run against the exact spectral semigroup, two step counts"},
      {"subordination-oracle", "stable-1/2 subordination quadrature against e^{-tk}"},
      {"operator-oracles", "multiplier vs Balakrishnan vs Phillips on band-limited data"},
      {"mass-conservation", "zero-mode drift on circle and cube runs, m in {1.5, 2, 3}"},
      {"thm1.3-contraction", "Lp norm monotonicity along the standard run matrix"},
      {"comparison-principle", "ordered initial pair stays ordered at record times"},
      {"sec7.4-zero-mean-decay", "sup-norm decay fit for zero-mean data on the cube"},
      {"thm1.5-mean-convergence", "perturbed constant relaxes to its conserved mean"},
      {"inequality-suite", "functional-inequality calibration on a seeded ensemble"},
      {"smoothing-exponents", "exponent formula anchors plus a fitted decay run"},
      {"omega-limit", "Cauchy-in-omega bound for the damped approximations"},
      {"energy-dissipation", "m+1 energy monotonicity on nonlinear runs"},
      {"fast-diffusion-contraction", "m=1/2 singular branch contraction checks"},
  };
}

namespace detail {

inline ManifoldSpec preset_circle(int n) {
  return make_torus(1, {2.0 * std::numbers::pi}, {n}, true);
}

inline ManifoldSpec preset_cube(int n) {
  const double L = 2.0 * std::numbers::pi;
  return make_torus(3, {L, L, L}, {n, n, n}, true);
}

inline ExperimentConfig evolve_base(const std::string& name, const ManifoldSpec& spec,
                                    double m, double horizon, int steps) {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.kind = ExperimentKind::evolve;
  cfg.manifold = spec;
  cfg.pme.m = m;
  cfg.pme.horizon = horizon;
  cfg.pme.steps = steps;
  cfg.initial.recipe = "random-band-limited";
  cfg.initial.constant = 0.0;
  cfg.initial.ensemble.band = 3;
  cfg.initial.ensemble.seed = 101;
  return cfg;
}

}  // namespace detail

inline std::vector<ExperimentConfig> make_preset(const std::string& name) {
  using detail::evolve_base;
  using detail::preset_circle;
  using detail::preset_cube;
  std::vector<ExperimentConfig> out;
  if (name == "linear-exactness") {
    // First-order stepping of e^{-t} carries error exp(-1)*h/2, so 1e-4
    // needs at least 1840 steps; the two runs also exhibit the halving.
    for (int steps : {2048, 4096}) {
      ExperimentConfig cfg;
      cfg.name = "linear-exactness-n" + std::to_string(steps);
      cfg.kind = ExperimentKind::evolve;
      cfg.manifold = preset_circle(256);
      cfg.initial.recipe = "single-mode";
      cfg.initial.constant = 0.0;
      cfg.pme.m = 1.0;
      cfg.pme.horizon = 1.0;
      cfg.pme.steps = steps;
      cfg.check_linear_exact = true;
      cfg.linear_exact_tolerance = 1e-4;
      out.push_back(cfg);
    }
  } else if (name == "subordination-oracle") {
    ExperimentConfig cfg;
    cfg.name = "subordination-oracle";
    cfg.kind = ExperimentKind::oracle_crosscheck;
    cfg.manifold = preset_circle(64);
    cfg.oracle_mode = "subordination";
    cfg.oracle_tolerance = 1e-6;
    out.push_back(cfg);
  } else if (name == "operator-oracles") {
    ExperimentConfig cfg;
    cfg.name = "operator-oracles";
    cfg.kind = ExperimentKind::oracle_crosscheck;
    cfg.manifold = preset_circle(64);
    cfg.oracle_mode = "operators";
    cfg.oracle_band = 5;
    out.push_back(cfg);
  } else if (name == "mass-conservation") {
    for (double m : {1.5, 2.0, 3.0})
      out.push_back(evolve_base("mass-conservation-circle-m" + format_double(m),
                                preset_circle(64), m, 1.0, 1000));
    out.push_back(evolve_base("mass-conservation-cube", preset_cube(8), 2.0, 1.0, 500));
  } else if (name == "thm1.3-contraction") {
    for (double m : {1.5, 2.0, 3.0})
      out.push_back(evolve_base("contraction-circle-m" + format_double(m), preset_circle(64), m,
                                1.0, 200));
    out.push_back(evolve_base("contraction-cube", preset_cube(8), 2.0, 1.0, 100));
  } else if (name == "comparison-principle") {
    ExperimentConfig cfg = evolve_base("comparison-principle", preset_cube(16), 2.0, 0.5, 64);
    cfg.comparison_margin = 0.25;
    out.push_back(cfg);
  } else if (name == "sec7.4-zero-mean-decay") {
    ExperimentConfig cfg;
    cfg.name = "sec7.4-zero-mean-decay";
    cfg.kind = ExperimentKind::decay_fit;
    cfg.manifold = preset_cube(16);
    cfg.initial.recipe = "random-band-limited";
    cfg.initial.constant = 0.0;
    cfg.initial.ensemble.band = 4;
    cfg.initial.ensemble.zero_mean = true;
    cfg.initial.ensemble.seed = 7;
    cfg.pme.m = 2.0;
    cfg.pme.horizon = 50.0;
    cfg.pme.steps = 1000;
    cfg.pme.record_times = default_record_times(50.0, 1000, 32);
    cfg.fit_norm_p = std::numeric_limits<double>::infinity();
    cfg.window_start = 5.0;
    cfg.window_end = 50.0;
    cfg.predicted_exponent = -1.0;
    cfg.fit_tolerance = 0.2;
    out.push_back(cfg);
  } else if (name == "thm1.5-mean-convergence") {
    ExperimentConfig cfg;
    cfg.name = "thm1.5-mean-convergence";
    cfg.kind = ExperimentKind::evolve;
    cfg.manifold = preset_circle(64);
    cfg.initial.recipe = "single-mode";
    cfg.initial.constant = 1.0;
    cfg.initial.amplitude = 0.1;
    cfg.pme.m = 2.0;
    cfg.pme.horizon = 5.0;
    cfg.pme.steps = 500;
    cfg.mean_convergence_tolerance = 1e-3;
    out.push_back(cfg);
  } else if (name == "inequality-suite") {
    ExperimentConfig cfg;
    cfg.name = "inequality-suite";
    cfg.kind = ExperimentKind::inequality_suite;
    cfg.manifold = preset_cube(16);
    cfg.sigma = 0.5;
    cfg.ensemble.band = 5;
    cfg.ensemble.seed = 7;
    cfg.ensemble_count = 200;
    out.push_back(cfg);
  } else if (name == "smoothing-exponents") {
    ExperimentConfig cfg;
    cfg.name = "smoothing-exponents";
    cfg.kind = ExperimentKind::decay_fit;
    cfg.manifold = preset_circle(64);
    cfg.initial.recipe = "random-band-limited";
    cfg.initial.constant = 0.0;
    cfg.initial.ensemble.band = 4;
    cfg.initial.ensemble.zero_mean = true;
    cfg.initial.ensemble.seed = 57;
    cfg.pme.m = 2.0;
    cfg.pme.horizon = 50.0;
    cfg.pme.steps = 800;
    cfg.pme.record_times = default_record_times(50.0, 800, 24);
    cfg.fit_norm_p = 2.0;
    cfg.window_start = 5.0;
    cfg.window_end = 50.0;
    cfg.predicted_exponent = -1.0;
    cfg.check_exponent_formulas = true;
    out.push_back(cfg);
  } else if (name == "omega-limit") {
    ExperimentConfig cfg;
    cfg.name = "omega-limit";
    cfg.kind = ExperimentKind::omega_limit;
    cfg.manifold = preset_circle(64);
    cfg.initial.recipe = "single-mode";
    cfg.initial.constant = 0.0;
    cfg.pme.m = 2.0;
    cfg.pme.horizon = 1.0;
    cfg.pme.steps = 100;
    cfg.omegas = {0.1, 0.05, 0.01};
    out.push_back(cfg);
  } else if (name == "energy-dissipation") {
    for (double m : {2.0, 3.0})
      out.push_back(evolve_base("energy-dissipation-m" + format_double(m), preset_circle(64), m,
                                2.0, 200));
  } else if (name == "fast-diffusion-contraction") {
    out.push_back(
        evolve_base("fast-diffusion-contraction", preset_circle(64), 0.5, 0.5, 100));
  } else {
    throw std::invalid_argument("unknown preset \"" + name + "\"");
  }
  return out;
}

// Runs independent experiments on a small worker pool; results keep the input
// order regardless of scheduling.
inline std::vector<RunResult> run_batch(const std::vector<ExperimentConfig>& configs,
                                        const std::filesystem::path& out_dir, int threads) {
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  std::vector<RunResult> results(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      try {
        results[i] = run_experiment(configs[i], out_dir);
      } catch (const std::exception& e) {
        results[i].name = configs[i].name;
        results[i].pass = false;
        results[i].error = e.what();
      }
    }
  };
  if (threads == 1 || configs.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int workers = std::min<int>(threads, static_cast<int>(configs.size()));
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  return results;
}

}  // namespace fracpme

#endif
