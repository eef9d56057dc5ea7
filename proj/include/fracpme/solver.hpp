// Implicit Euler (Crandall-Liggett) time stepping for
//   du/dt + [omega + (-Delta)^sigma] Phi(u) = 0,  Phi(x) = |x|^{m-1} x,
// built on a semilinear resolvent solve in the v = Phi(u) variable:
//   beta(v) + dT [omega + (-Delta)^sigma] v = u_prev,  beta = Phi^{-1}.
// The Newton residual always uses the exact beta; the 1e-12 smoothing enters
// only the Jacobian diagonal, so the converged answer carries no smoothing
// bias. Inner solves are preconditioned CG in coefficient space.

#ifndef FRACPME_SOLVER_HPP
#define FRACPME_SOLVER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fracpme/fractional.hpp"
#include "fracpme/manifold.hpp"

namespace fracpme {

inline double phi(double x, double m) {
  if (x == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(x), m), x);
}

inline double beta(double y, double m) {
  if (y == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(y), 1.0 / m), y);
}

inline Field phi_field(const Field& u, double m) {
  Field v = u;
  for (double& x : v.values) x = phi(x, m);
  return v;
}

struct PMEConfig {
  double m = 2.0;
  FracParams frac{};
  double horizon = 1.0;
  int steps = 100;
  double newton_tol = 1e-12;
  int newton_max_iter = 50;
  int cg_max_iter = 400;
  // Optional 2x-oversampled evaluation of the pointwise nonlinearity
  // (convergence-study knob; Phi is non-polynomial, so exact dealiasing is
  // impossible and plain collocation is the default).
  bool oversample_nonlinearity = false;
  std::vector<double> record_times;  // empty: 16 log-spaced times up to horizon
};

inline void validate(const PMEConfig& cfg) {
  validate(cfg.frac);
  if (!(cfg.m > 0.0)) throw std::invalid_argument("PMEConfig: m must be positive");
  if (!(cfg.horizon > 0.0)) throw std::invalid_argument("PMEConfig: horizon must be positive");
  if (cfg.steps < 1) throw std::invalid_argument("PMEConfig: steps must be >= 1");
  if (!(cfg.newton_tol > 0.0 && cfg.newton_tol <= 1e-4))
    throw std::invalid_argument("PMEConfig: newton_tol must lie in (0, 1e-4]");
  if (cfg.newton_max_iter < 1 || cfg.cg_max_iter < 1)
    throw std::invalid_argument("PMEConfig: iteration caps must be >= 1");
  for (std::size_t i = 0; i < cfg.record_times.size(); ++i) {
    const double t = cfg.record_times[i];
    if (!(t >= 0.0 && t <= cfg.horizon * (1.0 + 1e-12)))
      throw std::invalid_argument("PMEConfig: record times must lie in [0, horizon]");
    if (i > 0 && t < cfg.record_times[i - 1])
      throw std::invalid_argument("PMEConfig: record times must be sorted");
  }
}

class SolveFailure : public std::runtime_error {
 public:
  SolveFailure(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual(residual), iterations(iterations) {}
  double residual;
  int iterations;
};

namespace detail {

// Zero-padding of a spectrum onto a grid refined by `factor`, splitting
// Nyquist coefficients across the +-N/2 pair; exact inverse of
// truncate_spectrum on Hermitian inputs.
inline SpectralField pad_spectrum(const SpectralField& c, int factor) {
  ManifoldSpec big = c.spec;
  for (int& g : big.grid) g *= factor;
  SpectralField out(big);
  const std::size_t total = c.spec.point_count();
  for (std::size_t i = 0; i < total; ++i) {
    if (c.coeffs[i] == cdouble{0.0, 0.0}) continue;
    const auto k = frequency_vector(c.spec, i);
    std::vector<std::array<int, 3>> targets{{0, 0, 0}};
    double weight = 1.0;
    for (int d = 0; d < c.spec.dim; ++d) {
      const int nyq = c.spec.grid[static_cast<std::size_t>(d)] / 2;
      std::vector<std::array<int, 3>> next;
      for (auto tgt : targets) {
        if (k[static_cast<std::size_t>(d)] == nyq) {
          auto plus = tgt, minus = tgt;
          plus[static_cast<std::size_t>(d)] = nyq;
          minus[static_cast<std::size_t>(d)] = -nyq;
          next.push_back(plus);
          next.push_back(minus);
        } else {
          tgt[static_cast<std::size_t>(d)] = k[static_cast<std::size_t>(d)];
          next.push_back(tgt);
        }
      }
      if (k[static_cast<std::size_t>(d)] == nyq) weight *= 0.5;
      targets = std::move(next);
    }
    for (const auto& tgt : targets) {
      std::array<std::size_t, 3> slot{0, 0, 0};
      const auto nb = axis_sizes(big);
      for (int d = 0; d < big.dim; ++d) {
        const int kk = tgt[static_cast<std::size_t>(d)];
        slot[static_cast<std::size_t>(d)] =
            kk >= 0 ? static_cast<std::size_t>(kk)
                    : nb[static_cast<std::size_t>(d)] - static_cast<std::size_t>(-kk);
      }
      out.coeffs[(slot[0] * nb[1] + slot[1]) * nb[2] + slot[2]] += weight * c.coeffs[i];
    }
  }
  return out;
}

inline SpectralField truncate_spectrum(const SpectralField& big, const ManifoldSpec& small_spec) {
  SpectralField out(small_spec);
  const auto nb = axis_sizes(big.spec);
  const std::size_t total = small_spec.point_count();
  for (std::size_t i = 0; i < total; ++i) {
    const auto k = frequency_vector(small_spec, i);
    std::vector<std::array<int, 3>> sources{{0, 0, 0}};
    for (int d = 0; d < small_spec.dim; ++d) {
      const int nyq = small_spec.grid[static_cast<std::size_t>(d)] / 2;
      std::vector<std::array<int, 3>> next;
      for (auto src : sources) {
        if (k[static_cast<std::size_t>(d)] == nyq) {
          auto plus = src, minus = src;
          plus[static_cast<std::size_t>(d)] = nyq;
          minus[static_cast<std::size_t>(d)] = -nyq;
          next.push_back(plus);
          next.push_back(minus);
        } else {
          src[static_cast<std::size_t>(d)] = k[static_cast<std::size_t>(d)];
          next.push_back(src);
        }
      }
      sources = std::move(next);
    }
    cdouble acc{0.0, 0.0};
    for (const auto& src : sources) {
      std::array<std::size_t, 3> slot{0, 0, 0};
      for (int d = 0; d < big.spec.dim; ++d) {
        const int kk = src[static_cast<std::size_t>(d)];
        slot[static_cast<std::size_t>(d)] =
            kk >= 0 ? static_cast<std::size_t>(kk)
                    : nb[static_cast<std::size_t>(d)] - static_cast<std::size_t>(-kk);
      }
      acc += big.coeffs[(slot[0] * nb[1] + slot[1]) * nb[2] + slot[2]];
    }
    out.coeffs[i] = acc;
  }
  return out;
}

// sign(y)|y|^p applied on a 2x-refined grid, projected back to the coarse
// band; used by the optional dealiased evaluation of Phi or beta.
inline SpectralField power_projection(const SpectralField& x_hat, double p) {
  const SpectralField fine_hat = pad_spectrum(x_hat, 2);
  Field fine = inverse_transform(fine_hat);
  for (double& x : fine.values) x = phi(x, p);
  return truncate_spectrum(forward_transform(fine), x_hat.spec);
}

}  // namespace detail

struct SemilinearResult {
  Field u;               // solves a*[omega+(-Delta)^sigma] u + beta(u) = f
  SpectralField u_hat;   // spectrum of u, reused by the stepper
  Field Lu;              // [omega+(-Delta)^sigma] u on the grid
  double residual = 0.0;  // relative L2 residual at exit
  int newton_iterations = 0;
  int cg_iterations = 0;
};

namespace detail {

inline SemilinearResult solve_semilinear(const Field& f, double a, const FracParams& fp, double m,
                                         double tol, int max_iter, int cg_max_iter,
                                         bool oversample, const Field* warm_start) {
  validate(fp);
  if (!(a > 0.0)) throw std::invalid_argument("semilinear solve: lambda must be > 0");
  if (!(m > 0.0)) throw std::invalid_argument("semilinear solve: m must be > 0");
  const ManifoldSpec& spec = f.spec;
  const std::size_t np = spec.point_count();
  const std::vector<double> lam = eigenvalue_table(spec);
  std::vector<double> ell(np);
  for (std::size_t i = 0; i < np; ++i)
    ell[i] = fp.omega + (lam[i] == 0.0 ? 0.0 : std::pow(lam[i], fp.sigma));

  SemilinearResult res;

  const double f_norm = lp_norm(f, 2.0);
  if (f_norm == 0.0) {
    res.u = Field(spec);
    res.u_hat = SpectralField(spec);
    res.Lu = Field(spec);
    return res;
  }

  if (m == 1.0) {
    SpectralField c = forward_transform(f);
    for (std::size_t i = 0; i < np; ++i) c.coeffs[i] /= 1.0 + a * ell[i];
    res.u_hat = c;
    res.u = inverse_transform(c);
    for (std::size_t i = 0; i < np; ++i) c.coeffs[i] *= ell[i];
    res.Lu = inverse_transform(c);
    return res;
  }

  const double target = tol * f_norm;
  const double weight = spec.cell_weight();

  // For m > 1 the Newton iteration runs in the u = beta(w) variable, where
  // the residual u + a L Phi(u) - f is C^1 (Phi' = m|u|^{m-1} is bounded) and
  // sign changes of w are ordinary points; the exact-beta residual of the
  // recovered w = Phi(u) equals this residual identically. For m < 1 the
  // roles of Phi and beta swap and the iteration runs directly in w.
  const bool u_form = m > 1.0;

  struct Work {
    std::vector<double> x;   // Newton unknown (u for m > 1, w for m < 1)
    std::vector<double> w;   // solution variable Phi(u) resp. x
    SpectralField w_hat;
    std::vector<double> Lw;  // [omega + (-Delta)^sigma] w on the grid
    std::vector<double> r;
    double rnorm = 0.0;
  };

  auto evaluate = [&](const std::vector<double>& x, Work& st) {
    st.x = x;
    if (u_form) {
      if (oversample) {
        const SpectralField x_hat = forward_transform(Field(spec, x));
        st.w_hat = detail::power_projection(x_hat, m);
        st.w = inverse_transform(st.w_hat).values;
      } else {
        std::vector<double> w(np);
        for (std::size_t i = 0; i < np; ++i) w[i] = phi(x[i], m);
        st.w_hat = forward_transform(Field(spec, w));
        st.w = std::move(w);
      }
    } else {
      st.w = x;
      st.w_hat = forward_transform(Field(spec, x));
    }
    SpectralField lw = st.w_hat;
    for (std::size_t i = 0; i < np; ++i) lw.coeffs[i] *= ell[i];
    st.Lw = inverse_transform(lw).values;
    std::vector<double> bx;
    if (!u_form) {
      if (oversample) {
        bx = inverse_transform(detail::power_projection(st.w_hat, 1.0 / m)).values;
      } else {
        bx.resize(np);
        for (std::size_t i = 0; i < np; ++i) bx[i] = beta(x[i], m);
      }
    }
    st.r.resize(np);
    double acc = 0.0;
    for (std::size_t i = 0; i < np; ++i) {
      st.r[i] = (u_form ? x[i] : bx[i]) + a * st.Lw[i] - f.values[i];
      acc += st.r[i] * st.r[i];
    }
    st.rnorm = std::sqrt(acc * weight);
  };

  auto dot = [&](const std::vector<double>& u, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < np; ++i) s += u[i] * v[i];
    return s;
  };
  auto cdot = [&](const std::vector<cdouble>& u, const std::vector<cdouble>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < np; ++i)
      s += u[i].real() * v[i].real() + u[i].imag() * v[i].imag();
    return s;
  };
  auto apply_L = [&](const std::vector<double>& v, std::vector<double>& out) {
    SpectralField c = forward_transform(Field(spec, v));
    for (std::size_t i = 0; i < np; ++i) c.coeffs[i] *= ell[i];
    out = inverse_transform(c).values;
  };

  Work cur;
  {
    std::vector<double> x0(np);
    if (warm_start != nullptr) {
      for (std::size_t i = 0; i < np; ++i)
        x0[i] = u_form ? beta(warm_start->values[i], m) : warm_start->values[i];
    } else {
      for (std::size_t i = 0; i < np; ++i) x0[i] = u_form ? f.values[i] : phi(f.values[i], m);
    }
    evaluate(x0, cur);
  }

  const double eps = 1e-12;
  std::vector<double> diag(np), dir(np);
  int iters_used = 0;
  int stagnations = 0;
  while (cur.rnorm > target) {
    if (iters_used >= max_iter) {
      res.newton_iterations = iters_used;
      throw SolveFailure("semilinear solve did not reach tolerance, residual " +
                             std::to_string(cur.rnorm),
                         cur.rnorm / f_norm, iters_used);
    }
    const double forcing = cur.rnorm <= 100.0 * target ? 1e-4 : 1e-2;

    if (u_form) {
      // J = I + a L diag(Phi'(u)); with Ds = Phi'(u)^{1/2} the substitution
      // y = Ds*delta closes into the SPD system (I + a Ds L Ds) y = -Ds*r,
      // solved by plain CG, and delta = -(r + a L Ds y) recovers the step at
      // every cell including the degenerate ones where Phi' = 0.
      std::vector<double> ds(np);
      for (std::size_t i = 0; i < np; ++i)
        ds[i] = std::sqrt(m * std::pow(std::abs(cur.x[i]), m - 1.0));
      std::vector<double> rhs(np), x(np, 0.0), resid(np), p(np), Ap(np), tmp(np);
      for (std::size_t i = 0; i < np; ++i) rhs[i] = -ds[i] * cur.r[i];
      resid = rhs;
      p = resid;
      double rr = dot(resid, resid);
      const double rhs_norm = std::sqrt(rr);
      for (int cg = 0; cg < cg_max_iter && std::sqrt(rr) > forcing * rhs_norm; ++cg) {
        for (std::size_t i = 0; i < np; ++i) tmp[i] = ds[i] * p[i];
        apply_L(tmp, Ap);
        for (std::size_t i = 0; i < np; ++i) Ap[i] = p[i] + a * ds[i] * Ap[i];
        const double alpha = rr / dot(p, Ap);
        for (std::size_t i = 0; i < np; ++i) {
          x[i] += alpha * p[i];
          resid[i] -= alpha * Ap[i];
        }
        const double rr_new = dot(resid, resid);
        const double beta_cg = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < np; ++i) p[i] = resid[i] + beta_cg * p[i];
        ++res.cg_iterations;
      }
      for (std::size_t i = 0; i < np; ++i) tmp[i] = ds[i] * x[i];
      apply_L(tmp, Ap);
      for (std::size_t i = 0; i < np; ++i) dir[i] = -(cur.r[i] + a * Ap[i]);
    } else {
      // J = diag(beta'(w)) + a L, SPD in coefficient space with the spectral
      // diagonal (shift + a*ell) as preconditioner; beta' is bounded for
      // m < 1 and the eps floor only guards the w = 0 cells.
      for (std::size_t i = 0; i < np; ++i)
        diag[i] = (1.0 / m) * std::pow(std::abs(cur.w[i]) + eps, 1.0 / m - 1.0);
      std::vector<double> sorted = diag;
      std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(np / 2),
                       sorted.end());
      const double shift = sorted[np / 2];
      SpectralField b = forward_transform(Field(spec, cur.r));
      for (auto& zc : b.coeffs) zc = -zc;
      std::vector<cdouble> x(np, cdouble{0, 0}), resid(b.coeffs), z(np), p(np), Ap(np);
      auto apply = [&](const std::vector<cdouble>& v, std::vector<cdouble>& out) {
        SpectralField t(spec);
        t.coeffs = v;
        Field phys = inverse_transform(t);
        for (std::size_t i = 0; i < np; ++i) phys.values[i] *= diag[i];
        SpectralField back = forward_transform(phys);
        for (std::size_t i = 0; i < np; ++i) out[i] = back.coeffs[i] + a * ell[i] * v[i];
      };
      const double b_norm = std::sqrt(cdot(b.coeffs, b.coeffs));
      for (std::size_t i = 0; i < np; ++i) z[i] = resid[i] / (shift + a * ell[i]);
      p = z;
      double rz = cdot(resid, z);
      for (int cg = 0; cg < cg_max_iter; ++cg) {
        if (std::sqrt(cdot(resid, resid)) <= forcing * b_norm) break;
        apply(p, Ap);
        const double alpha = rz / cdot(p, Ap);
        for (std::size_t i = 0; i < np; ++i) {
          x[i] += alpha * p[i];
          resid[i] -= alpha * Ap[i];
        }
        for (std::size_t i = 0; i < np; ++i) z[i] = resid[i] / (shift + a * ell[i]);
        const double rz_new = cdot(resid, z);
        const double beta_cg = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < np; ++i) p[i] = z[i] + beta_cg * p[i];
        ++res.cg_iterations;
      }
      SpectralField dc(spec);
      dc.coeffs = x;
      dir = inverse_transform(dc).values;
    }

    bool accepted = false;
    Work trial;
    double s = 1.0;
    std::vector<double> x_try(np);
    for (int ls = 0; ls < 24; ++ls, s *= 0.5) {
      for (std::size_t i = 0; i < np; ++i) x_try[i] = cur.x[i] + s * dir[i];
      evaluate(x_try, trial);
      if (trial.rnorm <= (1.0 - 1e-4 * s) * cur.rnorm) {
        accepted = true;
        break;
      }
    }
    ++iters_used;
#ifdef FRACPME_NEWTON_TRACE
    std::fprintf(stderr, "iter %d rnorm %.3e target %.3e cg %d accepted %d s %.3e\n",
                 iters_used, cur.rnorm, target, res.cg_iterations, accepted ? 1 : 0, s);
#endif
    if (accepted) {
      cur = std::move(trial);
      stagnations = 0;
    } else if (++stagnations >= 2) {
      res.newton_iterations = iters_used;
      throw SolveFailure("semilinear solve stagnated, residual " + std::to_string(cur.rnorm),
                         cur.rnorm / f_norm, iters_used);
    }
  }
  res.newton_iterations = iters_used;

  res.u = Field(spec, cur.w);
  res.u_hat = cur.w_hat;
  res.Lu = Field(spec, cur.Lw);
  res.residual = cur.rnorm / f_norm;
  return res;
}

}  // namespace detail

// Unique solution u of lambda*[omega + (-Delta)^sigma] u + beta(u) = f.
inline SemilinearResult semilinear_resolvent(const Field& f, double lambda, const FracParams& fp,
                                             double m, double tol = 1e-12, int max_iter = 50,
                                             int cg_max_iter = 400) {
  return detail::solve_semilinear(f, lambda, fp, m, tol, max_iter, cg_max_iter, false, nullptr);
}

struct StepResult {
  Field u;       // solution of u + dT*[omega+(-Delta)^sigma] Phi(u) = u_prev
  Field w;       // the Phi(u) variable, kept for warm starts
  double dissipation = 0.0;  // ||(-Delta)^{sigma/2} Phi(u)||_2^2
  double residual = 0.0;
  int newton_iterations = 0;
  int cg_iterations = 0;
};

// One implicit Euler step. The update is applied in defect-corrected form
// u = u_prev - dT * L w with w the resolvent solution, which keeps the zero
// mode exact to roundoff when omega = 0 (the k = 0 multiplier of L is 0).
inline StepResult implicit_step(const Field& u_prev, double dT, const PMEConfig& cfg,
                                const Field* warm_start = nullptr) {
  if (!(dT > 0.0)) throw std::invalid_argument("implicit_step: dT must be > 0");
  const SemilinearResult sol =
      detail::solve_semilinear(u_prev, dT, cfg.frac, cfg.m, cfg.newton_tol, cfg.newton_max_iter,
                               cfg.cg_max_iter, cfg.oversample_nonlinearity, warm_start);
  StepResult out;
  out.w = sol.u;
  out.residual = sol.residual;
  out.newton_iterations = sol.newton_iterations;
  out.cg_iterations = sol.cg_iterations;
  out.u = Field(u_prev.spec);
  for (std::size_t i = 0; i < out.u.values.size(); ++i)
    out.u.values[i] = u_prev.values[i] - dT * sol.Lu.values[i];
  const double vol = u_prev.spec.measure_volume();
  double diss = 0.0;
  for (std::size_t i = 0; i < sol.u_hat.coeffs.size(); ++i) {
    const double lam = eigenvalue(u_prev.spec, i);
    if (lam > 0.0) diss += std::pow(lam, cfg.frac.sigma) * std::norm(sol.u_hat.coeffs[i]);
  }
  out.dissipation = diss * vol;
  return out;
}

struct StepDiagnostics {
  double t = 0.0;
  double l1 = 0.0, l2 = 0.0, lmp1 = 0.0, linf = 0.0;
  double mean_value = 0.0;
  double energy = 0.0;       // integral of |u|^{m+1}
  double dissipation = 0.0;  // ||(-Delta)^{sigma/2} Phi(u)||_2^2
  int newton_iterations = 0;
  double newton_residual = 0.0;
};

struct Trajectory {
  ManifoldSpec spec;
  PMEConfig config;
  Field initial_state;
  std::vector<StepDiagnostics> diagnostics;  // per step, including t = 0
  std::vector<double> record_times;
  std::vector<Field> records;  // piecewise-constant interpolant at record_times
  Field final_state;
};

class EvolveFailure : public std::runtime_error {
 public:
  EvolveFailure(const std::string& what, Trajectory partial, int failed_step, double residual)
      : std::runtime_error(what),
        partial(std::move(partial)),
        failed_step(failed_step),
        residual(residual) {}
  Trajectory partial;
  int failed_step;
  double residual;
};

namespace detail {

inline StepDiagnostics diagnostics_of(const Field& u, double t, double m, double dissipation) {
  StepDiagnostics d;
  d.t = t;
  d.l1 = lp_norm(u, 1.0);
  d.l2 = lp_norm(u, 2.0);
  d.lmp1 = lp_norm(u, m + 1.0);
  d.linf = lp_norm(u, std::numeric_limits<double>::infinity());
  d.mean_value = mean(u);
  d.energy = abs_moment(u, m + 1.0);
  d.dissipation = dissipation;
  return d;
}

inline double phi_dissipation(const Field& u, const PMEConfig& cfg) {
  const SpectralField c = forward_transform(phi_field(u, cfg.m));
  double diss = 0.0;
  for (std::size_t i = 0; i < c.coeffs.size(); ++i) {
    const double lam = eigenvalue(u.spec, i);
    if (lam > 0.0) diss += std::pow(lam, cfg.frac.sigma) * std::norm(c.coeffs[i]);
  }
  return diss * u.spec.measure_volume();
}

}  // namespace detail

inline std::vector<double> default_record_times(double horizon, int steps, int count = 16) {
  const double dT = horizon / static_cast<double>(steps);
  std::vector<double> times(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    times[static_cast<std::size_t>(i)] =
        std::exp(std::log(dT) + (std::log(horizon) - std::log(dT)) * static_cast<double>(i) /
                                    static_cast<double>(count - 1));
  times.back() = horizon;
  return times;
}

// Uniform-step Crandall-Liggett evolution with per-step norm diagnostics.
inline Trajectory evolve(const Field& u0, const PMEConfig& cfg) {
  validate(cfg);
  const double dT = cfg.horizon / static_cast<double>(cfg.steps);
  Trajectory traj;
  traj.spec = u0.spec;
  traj.config = cfg;
  traj.initial_state = u0;
  traj.record_times =
      cfg.record_times.empty() ? default_record_times(cfg.horizon, cfg.steps) : cfg.record_times;
  traj.diagnostics.reserve(static_cast<std::size_t>(cfg.steps) + 1);
  traj.diagnostics.push_back(
      detail::diagnostics_of(u0, 0.0, cfg.m, detail::phi_dissipation(u0, cfg)));

  // Record index k(tau) of the piecewise-constant interpolant: u_k on
  // ((k-1) dT, k dT], u_0 at 0.
  auto record_step = [&](double tau) {
    if (tau <= 0.0) return 0;
    return std::min(cfg.steps, static_cast<int>(std::ceil(tau / dT - 1e-12)));
  };

  Field u = u0;
  std::size_t next_record = 0;
  while (next_record < traj.record_times.size() &&
         record_step(traj.record_times[next_record]) == 0) {
    traj.records.push_back(u0);
    ++next_record;
  }

  const Field* warm = nullptr;
  Field warm_store;
  for (int k = 1; k <= cfg.steps; ++k) {
    StepResult st;
    try {
      st = implicit_step(u, dT, cfg, warm);
    } catch (const SolveFailure& sf) {
      traj.final_state = u;
      throw EvolveFailure("evolve: step " + std::to_string(k) + " failed: " + sf.what(), traj, k,
                          sf.residual);
    }
    u = st.u;
    warm_store = st.w;
    warm = &warm_store;
    StepDiagnostics d = detail::diagnostics_of(u, dT * k, cfg.m, st.dissipation);
    d.newton_iterations = st.newton_iterations;
    d.newton_residual = st.residual;
    traj.diagnostics.push_back(d);
    while (next_record < traj.record_times.size() &&
           record_step(traj.record_times[next_record]) == k) {
      traj.records.push_back(u);
      ++next_record;
    }
  }
  traj.final_state = u;
  return traj;
}

struct OmegaPair {
  double omega_high = 0.0;
  double omega_low = 0.0;
  double sup_l1_distance = 0.0;
  double bound = 0.0;  // (omega_high - omega_low) * integral of |u0|^m
};

struct OmegaLimitReport {
  std::vector<double> omegas;
  double u0_m_moment = 0.0;
  std::vector<OmegaPair> pairs;

  bool within(double slack) const {
    for (const auto& p : pairs)
      if (p.sup_l1_distance > p.bound + slack) return false;
    return true;
  }
};

// Runs the same discretization for a non-increasing positive omega sequence in
// lockstep and reports the sup-over-steps L1 distance of consecutive pairs
// against the Cauchy bound (omega_h - omega_l) * ||u0||_m^m.
inline OmegaLimitReport omega_limit_study(const Field& u0, const PMEConfig& cfg,
                                          const std::vector<double>& omegas) {
  if (omegas.size() < 2)
    throw std::invalid_argument("omega_limit_study: need at least two omegas");
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    if (!(omegas[i] > 0.0))
      throw std::invalid_argument("omega_limit_study: omegas must be positive");
    if (i > 0 && omegas[i] > omegas[i - 1])
      throw std::invalid_argument("omega_limit_study: omegas must be non-increasing");
  }
  PMEConfig base = cfg;
  base.record_times = {cfg.horizon};
  validate(base);

  OmegaLimitReport report;
  report.omegas = omegas;
  report.u0_m_moment = abs_moment(u0, cfg.m);
  report.pairs.resize(omegas.size() - 1);
  for (std::size_t i = 0; i + 1 < omegas.size(); ++i) {
    report.pairs[i].omega_high = omegas[i];
    report.pairs[i].omega_low = omegas[i + 1];
    report.pairs[i].bound = (omegas[i] - omegas[i + 1]) * report.u0_m_moment;
  }

  const double dT = cfg.horizon / static_cast<double>(cfg.steps);
  std::vector<Field> state(omegas.size(), u0);
  std::vector<Field> warm(omegas.size());
  std::vector<bool> has_warm(omegas.size(), false);
  for (int k = 1; k <= cfg.steps; ++k) {
    for (std::size_t j = 0; j < omegas.size(); ++j) {
      PMEConfig c = base;
      c.frac.omega = omegas[j];
      const StepResult st = implicit_step(state[j], dT, c, has_warm[j] ? &warm[j] : nullptr);
      state[j] = st.u;
      warm[j] = st.w;
      has_warm[j] = true;
    }
    for (std::size_t j = 0; j + 1 < omegas.size(); ++j) {
      Field diff = state[j];
      for (std::size_t i = 0; i < diff.values.size(); ++i)
        diff.values[i] -= state[j + 1].values[i];
      report.pairs[j].sup_l1_distance =
          std::max(report.pairs[j].sup_l1_distance, lp_norm(diff, 1.0));
    }
  }
  return report;
}

}  // namespace fracpme

#endif
