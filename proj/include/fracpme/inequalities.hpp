// Functional-inequality checks on torus fields: Sobolev-Poincare and Nash
// ratios, super-Poincare and logarithmic Sobolev bounds, Stroock-Varopoulos,
// the Young entropy functional, and ultracontractivity of the fractional heat
// semigroup, plus empirical calibration of the constants over random
// band-limited ensembles.

#ifndef FRACPME_INEQUALITIES_HPP
#define FRACPME_INEQUALITIES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fracpme/fractional.hpp"
#include "fracpme/manifold.hpp"
#include "fracpme/random_fields.hpp"
#include "fracpme/solver.hpp"

namespace fracpme {

inline double frac_sobolev_seminorm(const Field& u, double sigma) {
  if (!(sigma > 0.0 && sigma < 1.0))
    throw std::invalid_argument("frac_sobolev_seminorm: sigma must lie in (0,1)");
  const SpectralField c = forward_transform(u);
  double acc = 0.0;
  for (std::size_t i = 0; i < c.coeffs.size(); ++i) {
    const double lam = eigenvalue(u.spec, i);
    if (lam > 0.0) acc += std::pow(lam, sigma) * std::norm(c.coeffs[i]);
  }
  return std::sqrt(acc * u.spec.measure_volume());
}

namespace detail {

inline void require_subcritical(int n, double sigma, const char* who) {
  if (!(static_cast<double>(n) > 2.0 * sigma))
    throw std::invalid_argument(std::string(who) +
                                ": requires n > 2*sigma (Sobolev exponent undefined otherwise)");
}

inline Field centered(const Field& u) {
  Field v = u;
  const double m = mean(u);
  for (double& x : v.values) x -= m;
  return v;
}

}  // namespace detail

// ||u - mean||_{2n/(n-2s)} / ||(-Delta)^{s/2} u||_2, defined for n > 2s.
inline double sobolev_poincare_ratio(const Field& u, double sigma) {
  detail::require_subcritical(u.spec.dim, sigma, "sobolev_poincare_ratio");
  const double seminorm = frac_sobolev_seminorm(u, sigma);
  if (seminorm == 0.0)
    throw std::invalid_argument("sobolev_poincare_ratio: constant field, ratio undefined");
  const double n = u.spec.dim;
  const double q = 2.0 * n / (n - 2.0 * sigma);
  return lp_norm(detail::centered(u), q) / seminorm;
}

// ||u - mean||_2^{1+2s/n} / (||(-Delta)^{s/2} u||_2 * ||u - mean||_1^{2s/n}).
inline double nash_ratio(const Field& u, double sigma) {
  detail::require_subcritical(u.spec.dim, sigma, "nash_ratio");
  const double seminorm = frac_sobolev_seminorm(u, sigma);
  if (seminorm == 0.0) throw std::invalid_argument("nash_ratio: constant field, ratio undefined");
  const double a = 2.0 * sigma / static_cast<double>(u.spec.dim);
  const Field v = detail::centered(u);
  return std::pow(lp_norm(v, 2.0), 1.0 + a) / (seminorm * std::pow(lp_norm(v, 1.0), a));
}

struct CheckResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs; nonnegative when the inequality holds
  bool pass = false;
};

// ||u - mean||_2^2 <= r ||u - mean||_1^2 + beta_r ||(-Delta)^{s/2} u||_2^2.
inline CheckResult super_poincare_check(const Field& u, double sigma, double r, double beta_r) {
  if (!(r > 0.0)) throw std::invalid_argument("super_poincare_check: r must be > 0");
  if (!(beta_r > 0.0)) throw std::invalid_argument("super_poincare_check: beta_r must be > 0");
  const Field v = detail::centered(u);
  const double l2 = lp_norm(v, 2.0);
  const double l1 = lp_norm(v, 1.0);
  const double seminorm = frac_sobolev_seminorm(u, sigma);
  CheckResult out;
  out.lhs = l2 * l2;
  out.rhs = r * l1 * l1 + beta_r * seminorm * seminorm;
  out.slack = out.rhs - out.lhs;
  const double scale = std::max(std::abs(out.lhs), std::abs(out.rhs));
  out.pass = out.slack >= -1e-10 * scale;
  return out;
}

// The Young split of the Nash inequality gives a super-Poincare beta(r) that
// holds whenever the Nash ratio of the field is <= nash_constant:
// beta(r) = C_N^2 (1-s) (s/r)^{2sigma/n} with s = 2sigma/(n + 2sigma).
inline double derived_super_poincare_beta(double r, double sigma, int n, double nash_constant) {
  if (!(r > 0.0)) throw std::invalid_argument("derived_super_poincare_beta: r must be > 0");
  detail::require_subcritical(n, sigma, "derived_super_poincare_beta");
  const double s = 2.0 * sigma / (static_cast<double>(n) + 2.0 * sigma);
  return nash_constant * nash_constant * (1.0 - s) *
         std::pow(s / r, 2.0 * sigma / static_cast<double>(n));
}

// int |u|^2 ln(|u|/||u||_2)^2 dmu <= (n/2s)(||u||_2^2 ln(1/eps)
//   + M0 eps ||(-Delta)^{s/2}u||_2^2 + M1 eps mean(u)^2).
inline CheckResult log_sobolev_check(const Field& u, double sigma, double eps, double M0,
                                     double M1) {
  if (!(eps > 0.0)) throw std::invalid_argument("log_sobolev_check: eps must be > 0");
  const double l2 = lp_norm(u, 2.0);
  if (l2 == 0.0) throw std::invalid_argument("log_sobolev_check: zero field");
  const double w = u.spec.cell_weight();
  double lhs = 0.0;
  for (double x : u.values) {
    const double a = std::abs(x);
    if (a > 0.0) {
      const double lg = std::log(a / l2);
      lhs += a * a * lg * lg;
    }
  }
  lhs *= w;
  const double seminorm = frac_sobolev_seminorm(u, sigma);
  const double mu = mean(u);
  const double n_over = static_cast<double>(u.spec.dim) / (2.0 * sigma);
  CheckResult out;
  out.lhs = lhs;
  out.rhs = n_over * (l2 * l2 * std::log(1.0 / eps) + M0 * eps * seminorm * seminorm +
                      M1 * eps * mu * mu);
  out.slack = out.rhs - out.lhs;
  const double scale = std::max(std::abs(out.lhs), std::abs(out.rhs));
  out.pass = out.slack >= -1e-10 * std::max(1.0, scale);
  return out;
}

// (4(p-1)/p^2) ||(-Delta)^{s/2}(|u|^{(p-2)/2}u)||_2^2 <=
//   int |u|^{p-2} u (-Delta)^s u dmu.
inline CheckResult stroock_varopoulos_check(const Field& u, double p, double sigma) {
  if (!(p > 1.0)) throw std::invalid_argument("stroock_varopoulos_check: p must be > 1");
  const Field half_power = phi_field(u, p / 2.0);
  const double seminorm = frac_sobolev_seminorm(half_power, sigma);
  const Field lap = apply_frac_laplacian(u, FracParams{sigma, 0.0});
  const Field pm1 = phi_field(u, p - 1.0);
  CheckResult out;
  out.lhs = 4.0 * (p - 1.0) / (p * p) * seminorm * seminorm;
  out.rhs = l2_inner(pm1, lap);
  out.slack = out.rhs - out.lhs;
  const double scale = std::max(std::abs(out.lhs), std::abs(out.rhs));
  out.pass = out.slack >= -1e-8 * scale;
  return out;
}

// J(r, u) = int ln(|u|/||u||_r) |u|^r / ||u||_r^r dmu, with x^r ln x extended
// by 0 at x = 0.
inline double young_functional(const Field& u, double r) {
  if (!(r >= 1.0)) throw std::invalid_argument("young_functional: r must be >= 1");
  const double nr = lp_norm(u, r);
  if (nr == 0.0) throw std::invalid_argument("young_functional: zero field");
  const double w = u.spec.cell_weight();
  const double log_nr = std::log(nr);
  double acc = 0.0;
  for (double x : u.values) {
    const double a = std::abs(x);
    if (a > 0.0) acc += std::pow(a, r) * (std::log(a) - log_nr);
  }
  return acc * w / std::pow(nr, r);
}

struct UltraSample {
  double t = 0.0;
  double p = 0.0;
  double exponent = 0.0;  // n / (2 p sigma)
  double worst_ratio = 0.0;
};

struct UltracontractivityFit {
  double empirical_constant = 0.0;  // sup ratio over all samples and fields
  std::vector<UltraSample> table;
  bool all_finite = false;
};

// Empirical constant in ||e^{-t(-Delta)^s} u||_inf <= C max{1, t^{-n/2ps}}
// ||u||_p over an ensemble and a set of (t, p) samples.
inline UltracontractivityFit ultracontractivity_fit(
    const ManifoldSpec& spec, const FracParams& fp, const EnsembleSpec& ensemble, int count,
    const std::vector<std::pair<double, double>>& tp_samples) {
  if (tp_samples.empty())
    throw std::invalid_argument("ultracontractivity_fit: sample set must be nonempty");
  if (count < 1) throw std::invalid_argument("ultracontractivity_fit: count must be >= 1");
  UltracontractivityFit fit;
  fit.all_finite = true;
  fit.table.reserve(tp_samples.size());
  std::vector<Field> fields;
  fields.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    fields.push_back(sample_band_limited(spec, ensemble, static_cast<std::uint64_t>(i)));
  for (const auto& [t, p] : tp_samples) {
    if (!(t > 0.0) || !(p >= 1.0))
      throw std::invalid_argument("ultracontractivity_fit: need t > 0 and p >= 1");
    UltraSample row;
    row.t = t;
    row.p = p;
    row.exponent = static_cast<double>(spec.dim) / (2.0 * p * fp.sigma);
    for (const Field& u : fields) {
      const double denom = std::max(1.0, std::pow(t, -row.exponent)) * lp_norm(u, p);
      if (denom == 0.0) continue;
      const Field ut = semigroup_apply(u, t, fp);
      const double ratio = lp_norm(ut, std::numeric_limits<double>::infinity()) / denom;
      if (!std::isfinite(ratio)) fit.all_finite = false;
      row.worst_ratio = std::max(row.worst_ratio, ratio);
    }
    fit.empirical_constant = std::max(fit.empirical_constant, row.worst_ratio);
    fit.table.push_back(row);
  }
  return fit;
}

struct InequalityReport {
  std::string kind;
  int count = 0;
  int band = 0;
  std::uint64_t seed = 0;
  bool enabled = true;
  std::string note;                // set when a check is disabled or fails
  double worst_ratio = 0.0;        // sup of per_sample
  double constant = 0.0;           // empirical constant estimate
  std::vector<double> per_sample;  // ratio or slack, indexed by sample
  std::vector<std::uint64_t> violations;
  bool pass = false;
};

struct InequalityConstants {
  double sobolev_poincare = 0.0;   // sup Sobolev-Poincare ratio
  double nash = 0.0;               // sup Nash ratio; feeds beta(r)
  double log_sobolev = 0.0;        // M with M0 = M1 = M
  double ultracontractivity = 0.0;
};

struct CalibrationResult {
  InequalityConstants constants;
  std::vector<InequalityReport> reports;

  const InequalityReport& report(const std::string& kind) const {
    for (const auto& r : reports)
      if (r.kind == kind) return r;
    throw std::out_of_range("no report of kind " + kind);
  }
};

namespace detail {

// Smallest M with M0 = M1 = M making the log-Sobolev bound hold for u at
// every eps > 0; obtained by minimizing the rhs over eps in closed form.
inline double log_sobolev_m_requirement(const Field& u, double sigma) {
  const double l2 = lp_norm(u, 2.0);
  const CheckResult at_one = log_sobolev_check(u, sigma, 1.0, 0.0, 0.0);
  const double lhs = at_one.lhs;
  const double seminorm = frac_sobolev_seminorm(u, sigma);
  const double mu = mean(u);
  const double denom = seminorm * seminorm + mu * mu;
  if (denom == 0.0) return 0.0;
  const double n_over = static_cast<double>(u.spec.dim) / (2.0 * sigma);
  return l2 * l2 * std::exp(lhs / (n_over * l2 * l2) - 1.0) / denom;
}

}  // namespace detail

inline std::vector<Field> make_ensemble(const ManifoldSpec& spec, const EnsembleSpec& ensemble,
                                        int count) {
  std::vector<Field> fields;
  fields.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    fields.push_back(sample_band_limited(spec, ensemble, static_cast<std::uint64_t>(i)));
  return fields;
}

// Estimates every inequality constant as the empirical supremum over the
// supplied fields; all members pass their checks with the returned constants.
inline CalibrationResult calibrate_constants(const ManifoldSpec& spec,
                                             const std::vector<Field>& fields, double sigma,
                                             const EnsembleSpec& ensemble_desc) {
  if (fields.size() < 1) throw std::invalid_argument("calibrate_constants: empty ensemble");
  const int n = spec.dim;
  const bool sobolev_ok = static_cast<double>(n) > 2.0 * sigma;
  bool any_nonconstant = false;
  for (const auto& u : fields)
    if (frac_sobolev_seminorm(u, sigma) > 0.0) any_nonconstant = true;
  if (!any_nonconstant)
    throw std::invalid_argument("calibrate_constants: degenerate ensemble of constants");

  CalibrationResult out;
  auto base_report = [&](const std::string& kind) {
    InequalityReport r;
    r.kind = kind;
    r.count = static_cast<int>(fields.size());
    r.band = ensemble_desc.band;
    r.seed = ensemble_desc.seed;
    return r;
  };

  InequalityReport sp = base_report("sobolev-poincare");
  InequalityReport na = base_report("nash");
  InequalityReport ls = base_report("log-sobolev");
  InequalityReport sv = base_report("stroock-varopoulos");
  if (!sobolev_ok) {
    const std::string why =
        "disabled: n <= 2*sigma, Sobolev exponent 2n/(n-2*sigma) undefined on this manifold";
    for (InequalityReport* r : {&sp, &na, &ls}) {
      r->enabled = false;
      r->note = why;
      r->pass = true;
    }
  } else {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const Field& u = fields[i];
      if (frac_sobolev_seminorm(u, sigma) == 0.0) continue;
      sp.per_sample.push_back(sobolev_poincare_ratio(u, sigma));
      na.per_sample.push_back(nash_ratio(u, sigma));
      ls.per_sample.push_back(detail::log_sobolev_m_requirement(u, sigma));
    }
    for (InequalityReport* r : {&sp, &na, &ls}) {
      r->worst_ratio = *std::max_element(r->per_sample.begin(), r->per_sample.end());
      r->constant = r->worst_ratio * (1.0 + 1e-9);
      r->pass = true;
    }
    out.constants.sobolev_poincare = sp.constant;
    out.constants.nash = na.constant;
    out.constants.log_sobolev = ls.constant;
  }

  for (std::size_t i = 0; i < fields.size(); ++i) {
    double worst = 0.0;
    for (double p : {1.5, 2.0, 3.0, 4.0}) {
      const CheckResult c = stroock_varopoulos_check(fields[i], p, sigma);
      const double scale = std::max(std::abs(c.lhs), std::abs(c.rhs));
      const double rel = scale > 0.0 ? -c.slack / scale : 0.0;
      worst = std::max(worst, rel);
      if (!c.pass) sv.violations.push_back(static_cast<std::uint64_t>(i));
    }
    sv.per_sample.push_back(worst);
  }
  sv.worst_ratio = *std::max_element(sv.per_sample.begin(), sv.per_sample.end());
  sv.pass = sv.violations.empty();

  out.reports = {std::move(sp), std::move(na), std::move(ls), std::move(sv)};
  return out;
}

inline CalibrationResult calibrate_constants(const ManifoldSpec& spec,
                                             const EnsembleSpec& ensemble, int count,
                                             double sigma) {
  if (count < 100) throw std::invalid_argument("calibrate_constants: need at least 100 fields");
  return calibrate_constants(spec, make_ensemble(spec, ensemble, count), sigma, ensemble);
}

struct VerificationReport {
  int count = 0;
  std::vector<std::uint64_t> violations;  // sample indices failing any check
  double violation_rate = 0.0;
  std::vector<InequalityReport> reports;
};

// Re-checks previously calibrated constants against a fresh ensemble.
inline VerificationReport verify_constants(const ManifoldSpec& spec,
                                           const EnsembleSpec& ensemble, int count, double sigma,
                                           const InequalityConstants& constants) {
  if (count < 1) throw std::invalid_argument("verify_constants: count must be >= 1");
  const std::vector<Field> fields = make_ensemble(spec, ensemble, count);
  const bool sobolev_ok = static_cast<double>(spec.dim) > 2.0 * sigma;

  VerificationReport out;
  out.count = count;
  auto base_report = [&](const std::string& kind, double constant) {
    InequalityReport r;
    r.kind = kind;
    r.count = count;
    r.band = ensemble.band;
    r.seed = ensemble.seed;
    r.constant = constant;
    return r;
  };
  InequalityReport sp = base_report("sobolev-poincare", constants.sobolev_poincare);
  InequalityReport na = base_report("nash", constants.nash);
  InequalityReport spc = base_report("super-poincare", constants.nash);
  InequalityReport ls = base_report("log-sobolev", constants.log_sobolev);
  InequalityReport sv = base_report("stroock-varopoulos", 0.0);

  const std::vector<double> r_grid{0.05, 0.5, 5.0};
  const std::vector<double> eps_grid{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2};
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const Field& u = fields[i];
    bool violated = false;
    if (sobolev_ok && frac_sobolev_seminorm(u, sigma) > 0.0) {
      const double spr = sobolev_poincare_ratio(u, sigma);
      sp.per_sample.push_back(spr);
      if (spr > constants.sobolev_poincare) {
        sp.violations.push_back(static_cast<std::uint64_t>(i));
        violated = true;
      }
      const double nr = nash_ratio(u, sigma);
      na.per_sample.push_back(nr);
      if (nr > constants.nash) {
        na.violations.push_back(static_cast<std::uint64_t>(i));
        violated = true;
      }
      double worst_sp_rel = 0.0;
      for (double r : r_grid) {
        const double beta_r = derived_super_poincare_beta(r, sigma, spec.dim, constants.nash);
        const CheckResult c = super_poincare_check(u, sigma, r, beta_r);
        const double scale = std::max(std::abs(c.lhs), std::abs(c.rhs));
        worst_sp_rel = std::max(worst_sp_rel, scale > 0.0 ? -c.slack / scale : 0.0);
        if (!c.pass) {
          spc.violations.push_back(static_cast<std::uint64_t>(i));
          violated = true;
          break;
        }
      }
      spc.per_sample.push_back(worst_sp_rel);
      double worst_ls = 0.0;
      for (double eps : eps_grid) {
        const CheckResult c =
            log_sobolev_check(u, sigma, eps, constants.log_sobolev, constants.log_sobolev);
        const double scale = std::max({1.0, std::abs(c.lhs), std::abs(c.rhs)});
        worst_ls = std::max(worst_ls, -c.slack / scale);
        if (!c.pass) {
          ls.violations.push_back(static_cast<std::uint64_t>(i));
          violated = true;
          break;
        }
      }
      ls.per_sample.push_back(worst_ls);
    }
    double worst_sv = 0.0;
    for (double p : {1.5, 2.0, 3.0, 4.0}) {
      const CheckResult c = stroock_varopoulos_check(u, p, sigma);
      const double scale = std::max(std::abs(c.lhs), std::abs(c.rhs));
      worst_sv = std::max(worst_sv, scale > 0.0 ? -c.slack / scale : 0.0);
      if (!c.pass) {
        sv.violations.push_back(static_cast<std::uint64_t>(i));
        violated = true;
        break;
      }
    }
    sv.per_sample.push_back(worst_sv);
    if (violated) out.violations.push_back(static_cast<std::uint64_t>(i));
  }

  for (InequalityReport* r : {&sp, &na, &spc, &ls, &sv}) {
    if (!r->per_sample.empty())
      r->worst_ratio = *std::max_element(r->per_sample.begin(), r->per_sample.end());
    r->pass = r->violations.empty();
  }
  out.reports = {std::move(sp), std::move(na), std::move(spc), std::move(ls), std::move(sv)};
  out.violation_rate =
      static_cast<double>(out.violations.size()) / static_cast<double>(count);
  return out;
}

}  // namespace fracpme

#endif
