// Decay-rate analysis of porous-medium trajectories: predicted smoothing
// exponents, log-log least-squares fits of observed norm decay, sup-norm
// smoothing bound checks, and convergence to the conserved mean.

#ifndef FRACPME_ASYMPTOTICS_HPP
#define FRACPME_ASYMPTOTICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fracpme/manifold.hpp"
#include "fracpme/solver.hpp"

namespace fracpme {

struct SmoothingExponents {
  double alpha = 0.0;
  double gamma = 0.0;
};

namespace detail {

inline void require_smoothing_params(double p, double sigma, double m, int n) {
  if (!(m > 1.0)) throw std::invalid_argument("smoothing exponents: m must be > 1");
  if (!(p >= 2.0)) throw std::invalid_argument("smoothing exponents: p must be >= 2");
  if (!(sigma > 0.0 && sigma < 1.0))
    throw std::invalid_argument("smoothing exponents: sigma must lie in (0,1)");
  if (n < 1) throw std::invalid_argument("smoothing exponents: n must be >= 1");
}

}  // namespace detail

// Infinite-volume form: alpha = n/(2 sigma p + n(m-1)), gamma = 2 sigma p /
// (same denominator), so alpha (m-1) + gamma = 1.
inline SmoothingExponents smoothing_exponents_noncompact(double p, double sigma, double m,
                                                         int n) {
  detail::require_smoothing_params(p, sigma, m, n);
  const double denom = 2.0 * sigma * p + static_cast<double>(n) * (m - 1.0);
  return {static_cast<double>(n) / denom, 2.0 * sigma * p / denom};
}

// Closed-manifold exponent gamma = (p/(p+m-1))^{n/2 sigma}.
inline double smoothing_exponents_closed(double p, double sigma, double m, int n) {
  detail::require_smoothing_params(p, sigma, m, n);
  return std::pow(p / (p + m - 1.0), static_cast<double>(n) / (2.0 * sigma));
}

// Time exponent of the closed-manifold sup bound. The proof's limit integral
// over the exponent schedule r(s) collapses under w = r/(r+m-1) to
// (1 - gamma)/(m - 1).
inline double closed_smoothing_alpha(double p, double sigma, double m, int n) {
  return (1.0 - smoothing_exponents_closed(p, sigma, m, n)) / (m - 1.0);
}

inline double smoothing_rate_E(double m, double M0, double M1) {
  if (!(M0 > 0.0)) throw std::invalid_argument("smoothing_rate_E: M0 must be > 0");
  if (!(M1 >= 0.0)) throw std::invalid_argument("smoothing_rate_E: M1 must be >= 0");
  return 4.0 * m * M1 / M0;
}

inline double smoothing_m0(double m) { return std::max(m - 1.0, 1.0); }

struct DecayFitReport {
  double norm_p = 2.0;  // p of the fitted L^p norm; infinity for the sup norm
  bool centered = false;
  double window_start = 0.0;
  double window_end = 0.0;
  double fitted_exponent = 0.0;
  double confidence_width = 0.0;  // two standard errors of the slope
  double predicted_exponent = 0.0;
  double tolerance = 0.0;
  double prefactor = 0.0;  // smallest C with norm <= C t^{predicted} on the window
  std::string prefactor_form;
  bool bound_pass = false;   // fitted-prefactor bound covers every sample
  bool regime_pass = false;  // fitted exponent within tolerance of predicted
  bool pass = false;
  std::vector<std::pair<double, double>> table;  // (t, norm) pairs used
};

// Least-squares fit of ln(norm) against ln(t) over record times inside the
// window, compared against a predicted power-law exponent.
inline DecayFitReport fit_decay(const Trajectory& traj, double norm_p, bool centered,
                                double window_start, double window_end,
                                double predicted_exponent, double tolerance = 0.2) {
  if (traj.records.empty() || traj.record_times.size() != traj.records.size())
    throw std::invalid_argument("fit_decay: trajectory carries no records");
  if (!(window_start > 0.0) || !(window_end > window_start))
    throw std::invalid_argument("fit_decay: window must satisfy 0 < start < end");
  if (window_start < traj.record_times.front() - 1e-12 ||
      window_end > traj.record_times.back() * (1.0 + 1e-12))
    throw std::invalid_argument("fit_decay: window exceeds the trajectory's record range");
  if (!(predicted_exponent < 0.0))
    throw std::invalid_argument("fit_decay: predicted exponent must be negative");

  DecayFitReport rep;
  rep.norm_p = norm_p;
  rep.centered = centered;
  rep.window_start = window_start;
  rep.window_end = window_end;
  rep.predicted_exponent = predicted_exponent;
  rep.tolerance = tolerance;

  const double mean0 = traj.diagnostics.empty() ? mean(traj.initial_state)
                                                : traj.diagnostics.front().mean_value;
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    const double t = traj.record_times[i];
    if (t < window_start || t > window_end) continue;
    double value;
    if (centered) {
      Field v = traj.records[i];
      for (double& x : v.values) x -= mean0;
      value = lp_norm(v, norm_p);
    } else {
      value = lp_norm(traj.records[i], norm_p);
    }
    if (!(value > 0.0))
      throw std::invalid_argument(
          "fit_decay: norm vanishes at t = " + std::to_string(t) +
          "; the trajectory has decayed to roundoff, shrink the window");
    rep.table.emplace_back(t, value);
  }
  if (rep.table.size() < 8)
    throw std::invalid_argument("fit_decay: need at least 8 record times inside the window");

  const double count = static_cast<double>(rep.table.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [t, v] : rep.table) {
    sx += std::log(t);
    sy += std::log(v);
  }
  const double mx = sx / count, my = sy / count;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [t, v] : rep.table) {
    const double dx = std::log(t) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(v) - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_decay: record times inside window coincide");
  rep.fitted_exponent = sxy / sxx;
  double ss_res = 0.0;
  for (const auto& [t, v] : rep.table) {
    const double r = std::log(v) - (my + rep.fitted_exponent * (std::log(t) - mx));
    ss_res += r * r;
  }
  if (rep.table.size() > 2)
    rep.confidence_width = 2.0 * std::sqrt(ss_res / (count - 2.0) / sxx);

  double log_prefactor = -std::numeric_limits<double>::infinity();
  for (const auto& [t, v] : rep.table)
    log_prefactor = std::max(log_prefactor, std::log(v) - predicted_exponent * std::log(t));
  rep.prefactor = std::exp(log_prefactor);
  rep.prefactor_form = "C * t^(" + std::to_string(predicted_exponent) + ")";
  rep.bound_pass = true;
  for (const auto& [t, v] : rep.table)
    if (v > rep.prefactor * std::pow(t, predicted_exponent) * (1.0 + 1e-10))
      rep.bound_pass = false;
  rep.regime_pass = std::abs(rep.fitted_exponent - predicted_exponent) <=
                    tolerance * std::abs(predicted_exponent);
  rep.pass = rep.bound_pass && rep.regime_pass;
  return rep;
}

struct SmoothingBoundReport {
  double p = 2.0;
  SmoothingExponents exponents;
  bool closed_form = false;  // include the e^{E ||u0||_{m0}^{m-1} t} factor
  double rate_E = 0.0;
  double worst_ratio = 0.0;
  std::vector<std::pair<double, double>> ratios;  // (t, ratio) at record times
  bool finite = false;
  std::string note;
};

// sup over positive record times of ||u(t)||_inf t^alpha / ||u0||_p^gamma,
// optionally divided by the closed-manifold growth factor. Only boundedness is
// checkable: the prefactors in the bounds are not explicit.
inline SmoothingBoundReport smoothing_bound_check(const Trajectory& traj, double p,
                                                  const SmoothingExponents& exponents,
                                                  bool closed_form, double rate_E = 0.0) {
  if (traj.config.frac.omega != 0.0)
    throw std::invalid_argument("smoothing_bound_check: requires an omega = 0 trajectory");
  if (traj.records.empty())
    throw std::invalid_argument("smoothing_bound_check: trajectory carries no records");
  SmoothingBoundReport rep;
  rep.p = p;
  rep.exponents = exponents;
  rep.closed_form = closed_form;
  rep.rate_E = rate_E;
  if (!closed_form)
    rep.note =
        "infinite-volume exponents evaluated on a torus as a heuristic proxy; "
        "the hypotheses behind them fail on closed manifolds";
  const double u0_p = lp_norm(traj.initial_state, p);
  if (!(u0_p > 0.0))
    throw std::invalid_argument("smoothing_bound_check: initial data vanishes");
  const double m = traj.config.m;
  const double growth_base =
      closed_form ? std::pow(lp_norm(traj.initial_state, smoothing_m0(m)), m - 1.0) : 0.0;
  rep.finite = true;
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    const double t = traj.record_times[i];
    if (!(t > 0.0)) continue;
    double ratio = lp_norm(traj.records[i], std::numeric_limits<double>::infinity()) *
                   std::pow(t, exponents.alpha) / std::pow(u0_p, exponents.gamma);
    if (closed_form) ratio /= std::exp(rate_E * growth_base * t);
    if (!std::isfinite(ratio)) rep.finite = false;
    rep.ratios.emplace_back(t, ratio);
    rep.worst_ratio = std::max(rep.worst_ratio, ratio);
  }
  if (rep.ratios.empty())
    throw std::invalid_argument("smoothing_bound_check: no positive record times");
  return rep;
}

struct MeanConvergenceReport {
  double q = 1.0;
  double mean0 = 0.0;
  std::vector<std::pair<double, double>> distances;  // (t, ||u(t) - mean0||_q)
  double initial_distance = 0.0;
  double final_distance = 0.0;
  double mean_drift = 0.0;  // |mean(final record) - mean0|
  bool monotone_trend = false;
  bool converged = false;
  double tolerance = 0.0;
};

// ||u(t) - mean(u0)||_q along the records; mass conservation makes mean(u0)
// the only possible constant limit.
inline MeanConvergenceReport convergence_to_mean(const Trajectory& traj, double q,
                                                 double rel_tolerance = 1e-3) {
  if (!(q >= 1.0) || !std::isfinite(q))
    throw std::invalid_argument("convergence_to_mean: q must lie in [1, infinity)");
  if (traj.config.frac.omega != 0.0)
    throw std::invalid_argument("convergence_to_mean: requires an omega = 0 trajectory");
  if (traj.records.empty())
    throw std::invalid_argument("convergence_to_mean: trajectory carries no records");
  MeanConvergenceReport rep;
  rep.q = q;
  rep.tolerance = rel_tolerance;
  rep.mean0 = mean(traj.initial_state);
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    Field v = traj.records[i];
    for (double& x : v.values) x -= rep.mean0;
    rep.distances.emplace_back(traj.record_times[i], lp_norm(v, q));
  }
  rep.initial_distance = rep.distances.front().second;
  rep.final_distance = rep.distances.back().second;
  rep.mean_drift = std::abs(mean(traj.records.back()) - rep.mean0);
  rep.monotone_trend = true;
  for (std::size_t i = 1; i < rep.distances.size(); ++i)
    if (rep.distances[i].second >
        rep.distances[i - 1].second * (1.0 + 1e-8) + 1e-14)
      rep.monotone_trend = false;
  const double floor = 1e-12 * std::max(1.0, std::abs(rep.mean0));
  rep.converged =
      rep.final_distance <= std::max(rel_tolerance * rep.initial_distance, floor);
  return rep;
}

// Largest B compatible with ||u(t)||_p <= (B t + ||u0||_p^{-(m-1)})^{-1/(m-1)}
// at every positive record time of a zero-mean run.
inline double zero_mean_decay_constant(const Trajectory& traj, double p) {
  if (traj.records.empty())
    throw std::invalid_argument("zero_mean_decay_constant: trajectory carries no records");
  const double m = traj.config.m;
  if (!(m > 1.0)) throw std::invalid_argument("zero_mean_decay_constant: requires m > 1");
  const double u0_p = lp_norm(traj.initial_state, p);
  if (!(u0_p > 0.0))
    throw std::invalid_argument("zero_mean_decay_constant: initial data vanishes");
  const double base = std::pow(u0_p, -(m - 1.0));
  double best = std::numeric_limits<double>::infinity();
  bool seen = false;
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    const double t = traj.record_times[i];
    if (!(t > 0.0)) continue;
    const double nt = lp_norm(traj.records[i], p);
    if (!(nt > 0.0)) continue;  // already below roundoff, bound holds vacuously
    best = std::min(best, (std::pow(nt, -(m - 1.0)) - base) / t);
    seen = true;
  }
  if (!seen)
    throw std::invalid_argument("zero_mean_decay_constant: no usable record times");
  return best;
}

struct EpsilonBound {
  double eps = 0.0;
  double exponent = 0.0;  // gamma_closed (1 - eps)/(m - 1)
  double constant = 0.0;  // sup_t ||u(t)||_inf [B(t-1)]^{exponent} / ||u0||_p^{eps gamma}
};

// Empirical constants of the zero-mean sup bound for a grid of interpolation
// parameters; the trade-off leaves eps free, so all requested values are
// reported side by side.
inline std::vector<EpsilonBound> zero_mean_eps_constants(
    const Trajectory& traj, double p, double sigma, double B,
    const std::vector<double>& eps_grid = {0.1, 0.5, 0.9}) {
  if (!(B > 0.0)) throw std::invalid_argument("zero_mean_eps_constants: B must be > 0");
  const double m = traj.config.m;
  if (!(m > 1.0)) throw std::invalid_argument("zero_mean_eps_constants: requires m > 1");
  const double gamma = smoothing_exponents_closed(p, sigma, m, traj.spec.dim);
  const double u0_p = lp_norm(traj.initial_state, p);
  if (!(u0_p > 0.0))
    throw std::invalid_argument("zero_mean_eps_constants: initial data vanishes");
  std::vector<EpsilonBound> out;
  for (double eps : eps_grid) {
    if (!(eps > 0.0 && eps < 1.0))
      throw std::invalid_argument("zero_mean_eps_constants: eps must lie in (0,1)");
    EpsilonBound row;
    row.eps = eps;
    row.exponent = gamma * (1.0 - eps) / (m - 1.0);
    bool seen = false;
    for (std::size_t i = 0; i < traj.records.size(); ++i) {
      const double t = traj.record_times[i];
      if (!(t > 2.0)) continue;
      seen = true;
      const double sup = lp_norm(traj.records[i], std::numeric_limits<double>::infinity());
      row.constant = std::max(
          row.constant, sup * std::pow(B * (t - 1.0), row.exponent) / std::pow(u0_p, eps * gamma));
    }
    if (!seen)
      throw std::invalid_argument("zero_mean_eps_constants: no record times beyond t = 2");
    out.push_back(row);
  }
  return out;
}

}  // namespace fracpme

#endif
