#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "fracpme/manifold.hpp"
#include "fracpme/random_fields.hpp"
#include "fracpme/solver.hpp"

using namespace fracpme;

namespace {

ManifoldSpec circle(int n) { return make_torus(1, {2.0 * std::numbers::pi}, {n}, false); }

Field cosine_modes(const ManifoldSpec& spec, const std::vector<std::pair<int, double>>& modes) {
  return make_field(spec, [&](const std::array<double, 3>& x) {
    double v = 0.0;
    for (const auto& [k, a] : modes) v += a * std::cos(k * x[0]);
    return v;
  });
}

double sup_diff(const Field& a, const Field& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    d = std::max(d, std::abs(a.values[i] - b.values[i]));
  return d;
}

Field field_difference(const Field& a, const Field& b) {
  Field d = a;
  for (std::size_t i = 0; i < d.values.size(); ++i) d.values[i] -= b.values[i];
  return d;
}

}  // namespace

TEST(PhiBeta, KnownValuesAndOddness) {
  EXPECT_DOUBLE_EQ(phi(-2.0, 2.0), -4.0);
  EXPECT_DOUBLE_EQ(phi(2.0, 3.0), 8.0);
  EXPECT_DOUBLE_EQ(phi(0.0, 5.0), 0.0);
  EXPECT_DOUBLE_EQ(phi(0.37, 1.0), 0.37);
  EXPECT_DOUBLE_EQ(beta(-8.0, 3.0), -2.0);
  EXPECT_DOUBLE_EQ(beta(0.0, 2.0), 0.0);
  for (double x : {-1.7, -0.2, 0.4, 2.9}) {
    EXPECT_DOUBLE_EQ(phi(-x, 2.0), -phi(x, 2.0));
    EXPECT_DOUBLE_EQ(beta(-x, 2.0), -beta(x, 2.0));
  }
}

TEST(PhiBeta, RoundTrip) {
  for (double m : {0.5, 1.0, 1.3, 2.0, 3.0}) {
    for (double x = -3.0; x <= 3.0; x += 0.37) {
      const double y = beta(phi(x, m), m);
      EXPECT_NEAR(y, x, 1e-12 * std::max(1.0, std::abs(x)));
      const double z = phi(beta(x, m), m);
      EXPECT_NEAR(z, x, 1e-12 * std::max(1.0, std::abs(x)));
    }
  }
}

TEST(PhiBeta, FieldVersionMatchesPointwise) {
  const auto spec = circle(16);
  const Field u = cosine_modes(spec, {{1, 0.8}, {3, -0.4}});
  const Field v = phi_field(u, 1.5);
  for (std::size_t i = 0; i < u.values.size(); ++i)
    EXPECT_DOUBLE_EQ(v.values[i], phi(u.values[i], 1.5));
}

TEST(SemilinearResolvent, ZeroDataGivesZero) {
  const auto spec = circle(32);
  const auto res = semilinear_resolvent(Field(spec), 0.3, FracParams{0.5, 0.0}, 2.0);
  for (double v : res.u.values) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(res.residual, 0.0);
  EXPECT_EQ(res.newton_iterations, 0);
}

TEST(SemilinearResolvent, LinearCaseMatchesMultiplier) {
  const auto spec = circle(64);
  const Field f = cosine_modes(spec, {{1, 0.9}, {2, 0.3}, {5, -0.2}});
  const FracParams fp{0.5, 0.2};
  const double lambda = 0.3;
  const auto res = semilinear_resolvent(f, lambda, fp, 1.0);
  const SpectralField fc = forward_transform(f);
  const SpectralField uc = forward_transform(res.u);
  for (std::size_t i = 0; i < fc.coeffs.size(); ++i) {
    const double lam = eigenvalue(spec, i);
    const double mult = 1.0 / (1.0 + lambda * (fp.omega + (lam > 0.0 ? std::sqrt(lam) : 0.0)));
    EXPECT_NEAR(std::abs(uc.coeffs[i] - mult * fc.coeffs[i]), 0.0, 1e-13);
  }
}

TEST(SemilinearResolvent, ConstantDataSolvesScalarEquation) {
  const auto spec = circle(32);
  Field f(spec);
  for (double& v : f.values) v = 1.7;
  const auto res = semilinear_resolvent(f, 0.4, FracParams{0.5, 0.0}, 2.0);
  for (double v : res.u.values) EXPECT_NEAR(v, phi(1.7, 2.0), 1e-12);
}

TEST(SemilinearResolvent, ResidualMeetsTolerance) {
  const auto spec = circle(64);
  EnsembleSpec es;
  es.band = 6;
  es.seed = 11;
  const Field f = sample_band_limited(spec, es, 0);
  const FracParams fp{0.5, 0.0};
  const double lambda = 0.1, m = 2.0, tol = 1e-12;
  const auto res = semilinear_resolvent(f, lambda, fp, m, tol);
  EXPECT_LE(res.residual, tol);
  EXPECT_GE(res.newton_iterations, 1);

  Field r = apply_frac_laplacian(res.u, fp);
  for (std::size_t i = 0; i < r.values.size(); ++i)
    r.values[i] = beta(res.u.values[i], m) + lambda * r.values[i] - f.values[i];
  EXPECT_LE(lp_norm(r, 2.0), tol * lp_norm(f, 2.0) * (1.0 + 1e-10));
}

TEST(SemilinearResolvent, L1ContractionOnRandomPairs) {
  const auto spec = circle(64);
  EnsembleSpec es;
  es.band = 5;
  es.seed = 23;
  for (double m : {1.5, 2.0, 3.0}) {
    for (double lambda : {0.05, 0.5}) {
      for (std::uint64_t pair = 0; pair < 5; ++pair) {
        const Field f1 = sample_band_limited(spec, es, 2 * pair);
        Field f2 = sample_band_limited(spec, es, 2 * pair + 1);
        for (double& v : f2.values) v += 0.2;
        const auto r1 = semilinear_resolvent(f1, lambda, FracParams{0.5, 0.0}, m);
        const auto r2 = semilinear_resolvent(f2, lambda, FracParams{0.5, 0.0}, m);
        const Field b1 = phi_field(r1.u, 1.0 / m);
        const Field b2 = phi_field(r2.u, 1.0 / m);
        EXPECT_LE(lp_norm(field_difference(b1, b2), 1.0),
                  lp_norm(field_difference(f1, f2), 1.0) + 1e-8)
            << "m=" << m << " lambda=" << lambda << " pair=" << pair;
      }
    }
  }
}

TEST(SemilinearResolvent, L1ContractionThreeTorus) {
  const auto spec = make_torus(3, {2.0 * std::numbers::pi, 2.0 * std::numbers::pi,
                                   2.0 * std::numbers::pi},
                               {8, 8, 8}, false);
  EnsembleSpec es;
  es.band = 2;
  es.seed = 31;
  const Field f1 = sample_band_limited(spec, es, 0);
  Field f2 = sample_band_limited(spec, es, 1);
  for (double& v : f2.values) v += 0.1;
  const auto r1 = semilinear_resolvent(f1, 0.2, FracParams{0.5, 0.0}, 2.0);
  const auto r2 = semilinear_resolvent(f2, 0.2, FracParams{0.5, 0.0}, 2.0);
  const Field b1 = phi_field(r1.u, 0.5);
  const Field b2 = phi_field(r2.u, 0.5);
  EXPECT_LE(lp_norm(field_difference(b1, b2), 1.0),
            lp_norm(field_difference(f1, f2), 1.0) + 1e-8);
}

TEST(SemilinearResolvent, RejectsBadArguments) {
  const auto spec = circle(16);
  const Field f(spec, std::vector<double>(16, 1.0));
  EXPECT_THROW(semilinear_resolvent(f, 0.0, FracParams{0.5, 0.0}, 2.0), std::invalid_argument);
  EXPECT_THROW(semilinear_resolvent(f, -0.1, FracParams{0.5, 0.0}, 2.0), std::invalid_argument);
  EXPECT_THROW(semilinear_resolvent(f, 0.1, FracParams{0.5, 0.0}, 0.0), std::invalid_argument);
  EXPECT_THROW(semilinear_resolvent(f, 0.1, FracParams{1.5, 0.0}, 2.0), std::invalid_argument);
}

TEST(ImplicitStep, ConstantIsFixedPoint) {
  const auto spec = circle(32);
  Field u0(spec);
  for (double& v : u0.values) v = 0.8;
  PMEConfig cfg;
  cfg.m = 2.0;
  cfg.frac = FracParams{0.5, 0.0};
  const auto st = implicit_step(u0, 0.05, cfg);
  for (double v : st.u.values) EXPECT_NEAR(v, 0.8, 1e-13);
  EXPECT_NEAR(st.dissipation, 0.0, 1e-20);
}

TEST(ImplicitStep, LinearStepMatchesModeFormula) {
  const auto spec = circle(64);
  const Field u0 = cosine_modes(spec, {{1, 0.7}, {2, 0.2}, {4, -0.1}});
  PMEConfig cfg;
  cfg.m = 1.0;
  cfg.frac = FracParams{0.5, 0.1};
  const double dT = 0.02;
  const auto st = implicit_step(u0, dT, cfg);
  const SpectralField before = forward_transform(u0);
  const SpectralField after = forward_transform(st.u);
  for (std::size_t i = 0; i < after.coeffs.size(); ++i) {
    const double lam = eigenvalue(spec, i);
    const double mult =
        1.0 / (1.0 + dT * (cfg.frac.omega + (lam > 0.0 ? std::sqrt(lam) : 0.0)));
    EXPECT_NEAR(std::abs(after.coeffs[i] - mult * before.coeffs[i]), 0.0, 1e-14);
  }
}

TEST(ImplicitStep, MassExactToRoundoff) {
  const auto spec = circle(64);
  EnsembleSpec es;
  es.band = 6;
  es.seed = 7;
  Field u = sample_band_limited(spec, es, 0);
  PMEConfig cfg;
  cfg.m = 2.0;
  cfg.frac = FracParams{0.5, 0.0};
  const double mean0 = mean(u);
  double worst = 0.0;
  Field warm;
  const Field* warm_ptr = nullptr;
  for (int k = 0; k < 50; ++k) {
    const double before = mean(u);
    const auto st = implicit_step(u, 0.01, cfg, warm_ptr);
    u = st.u;
    warm = st.w;
    warm_ptr = &warm;
    worst = std::max(worst, std::abs(mean(u) - before));
  }
  EXPECT_LE(worst, 1e-14);
  EXPECT_NEAR(mean(u), mean0, 1e-13);
}

TEST(ImplicitStep, DissipationMatchesPhiSeminorm) {
  const auto spec = circle(64);
  EnsembleSpec es;
  es.band = 4;
  es.seed = 19;
  const Field u0 = sample_band_limited(spec, es, 3);
  PMEConfig cfg;
  cfg.m = 2.0;
  cfg.frac = FracParams{0.5, 0.0};
  const auto st = implicit_step(u0, 0.02, cfg);
  const SpectralField wc = forward_transform(st.w);
  double direct = 0.0;
  for (std::size_t i = 0; i < wc.coeffs.size(); ++i) {
    const double lam = eigenvalue(spec, i);
    if (lam > 0.0) direct += std::pow(lam, cfg.frac.sigma) * std::norm(wc.coeffs[i]);
  }
  direct *= spec.measure_volume();
  EXPECT_NEAR(st.dissipation, direct, 1e-12 * std::max(1.0, direct));
}

TEST(Evolve, ConstantStateIsStationary) {
  const auto spec = circle(32);
  Field u0(spec);
  for (double& v : u0.values) v = -0.6;
  PMEConfig cfg;
  cfg.m = 3.0;
  cfg.frac = FracParams{0.5, 0.0};
  cfg.horizon = 1.0;
  cfg.steps = 20;
  const auto traj = evolve(u0, cfg);
  EXPECT_EQ(traj.diagnostics.size(), 21u);
  for (double v : traj.final_state.values) EXPECT_NEAR(v, -0.6, 1e-12);
  for (const auto& d : traj.diagnostics) EXPECT_NEAR(d.linf, 0.6, 1e-12);
}

TEST(Evolve, RecordMappingFollowsStepInterpolant) {
  const auto spec = circle(32);
  EnsembleSpec es;
  es.band = 3;
  es.seed = 5;
  const Field u0 = sample_band_limited(spec, es, 0);
  PMEConfig cfg;
  cfg.m = 2.0;
  cfg.frac = FracParams{0.5, 0.0};
  cfg.horizon = 1.0;
  cfg.steps = 10;
  cfg.record_times = {0.0, 0.05, 0.1, 0.15, 1.0};
  const auto traj = evolve(u0, cfg);
  ASSERT_EQ(traj.records.size(), 5u);
  EXPECT_EQ(traj.records[0].values, u0.values);
  EXPECT_EQ(traj.records[1].values, traj.records[2].values);
  EXPECT_EQ(traj.records[4].values, traj.final_state.values);
  EXPECT_EQ(traj.record_times, cfg.record_times);
}

TEST(Evolve, DefaultRecordTimesAreLogSpaced) {
  const auto times = default_record_times(1.0, 100);
  ASSERT_EQ(times.size(), 16u);
  EXPECT_NEAR(times.front(), 0.01, 1e-12);
  EXPECT_DOUBLE_EQ(times.back(), 1.0);
  for (std::size_t i = 1; i < times.size(); ++i) EXPECT_GT(times[i], times[i - 1]);
  const double ratio = times[1] / times[0];
  for (std::size_t i = 2; i < times.size(); ++i)
    EXPECT_NEAR(times[i] / times[i - 1], ratio, 1e-9);
}

TEST(Evolve, LinearEvolutionIsFirstOrderAccurate) {
  const auto spec = circle(256);
  const Field u0 = cosine_modes(spec, {{1, 1.0}});
  const Field exact = cosine_modes(spec, {{1, std::exp(-1.0)}});
  auto run_error = [&](int steps) {
    PMEConfig cfg;
    cfg.m = 1.0;
    cfg.frac = FracParams{0.5, 0.0};
    cfg.horizon = 1.0;
    cfg.steps = steps;
    return sup_diff(evolve(u0, cfg).final_state, exact);
  };
  const double e16 = run_error(16);
  const double e32 = run_error(32);
  EXPECT_LT(e32, e16);
  EXPECT_NEAR(e16 / e32, 2.0, 0.3);
}

TEST(Evolve, L1DistanceBetweenSolutionsIsNonexpanding) {
  const auto spec = circle(64);
  EnsembleSpec es;
  es.band = 5;
  es.seed = 41;
  const Field u0 = sample_band_limited(spec, es, 0);
  Field v0 = sample_band_limited(spec, es, 1);
  for (double& v : v0.values) v += 0.1;
  PMEConfig cfg;
  cfg.m = 2.0;
  cfg.frac = FracParams{0.5, 0.0};
  cfg.horizon = 0.5;
  cfg.steps = 40;
  cfg.record_times.resize(40);
  for (int k = 1; k <= 40; ++k) cfg.record_times[k - 1] = 0.5 * k / 40.0;
  const auto tu = evolve(u0, cfg);
  const auto tv = evolve(v0, cfg);
  double prev = lp_norm(field_difference(u0, v0), 1.0);
  for (std::size_t i = 0; i < tu.records.size(); ++i) {
    const double cur = lp_norm(field_difference(tu.records[i], tv.records[i]), 1.0);
    EXPECT_LE(cur, prev + 1e-8) << "step " << i + 1;
    prev = cur;
  }
}

TEST(Evolve, ComparisonPrinciplePreservesOrder) {
  const auto spec = circle(64);
  EnsembleSpec es;
  es.band = 4;
  es.seed = 57;
  const Field u0 = sample_band_limited(spec, es, 0);
  EnsembleSpec bump = es;
  bump.amplitude = 0.3;
  Field v0 = sample_nonnegative(spec, bump, 1);
  for (std::size_t i = 0; i < v0.values.size(); ++i) v0.values[i] += u0.values[i] + 0.25;
  PMEConfig cfg;
  cfg.m = 2.0;
  cfg.frac = FracParams{0.5, 0.0};
  cfg.horizon = 0.5;
  cfg.steps = 25;
  cfg.record_times.resize(25);
  for (int k = 1; k <= 25; ++k) cfg.record_times[k - 1] = 0.5 * k / 25.0;
  const auto tu = evolve(u0, cfg);
  const auto tv = evolve(v0, cfg);
  for (std::size_t i = 0; i < tu.records.size(); ++i) {
    for (std::size_t j = 0; j < spec.point_count(); ++j)
      ASSERT_GE(tv.records[i].values[j], tu.records[i].values[j] - 1e-8)
          << "step " << i + 1 << " point " << j;
  }
}

TEST(Evolve, EnergyInequalityWithDissipation) {
  const auto spec = circle(64);
  EnsembleSpec es;
  es.band = 5;
  es.seed = 73;
  const Field u0 = sample_band_limited(spec, es, 2);
  for (double m : {2.0, 3.0}) {
    PMEConfig cfg;
    cfg.m = m;
    cfg.frac = FracParams{0.5, 0.0};
    cfg.horizon = 0.4;
    cfg.steps = 40;
    const auto traj = evolve(u0, cfg);
    const double dT = cfg.horizon / cfg.steps;
    for (std::size_t k = 1; k < traj.diagnostics.size(); ++k) {
      const double drop =
          (traj.diagnostics[k - 1].energy - traj.diagnostics[k].energy) / (m + 1.0);
      EXPECT_GE(drop + 1e-8, dT * traj.diagnostics[k].dissipation) << "m=" << m << " k=" << k;
      EXPECT_LE(traj.diagnostics[k].energy, traj.diagnostics[k - 1].energy + 1e-10);
    }
  }
}

TEST(Evolve, ZeroMeanDataKeepsMeanAndShrinks) {
  const auto spec = circle(64);
  EnsembleSpec es;
  es.band = 5;
  es.seed = 91;
  es.zero_mean = true;
  const Field u0 = sample_band_limited(spec, es, 0);
  PMEConfig cfg;
  cfg.m = 2.0;
  cfg.frac = FracParams{0.5, 0.0};
  cfg.horizon = 2.0;
  cfg.steps = 100;
  const auto traj = evolve(u0, cfg);
  for (const auto& d : traj.diagnostics) EXPECT_LE(std::abs(d.mean_value), 1e-13);
  for (std::size_t k = 1; k < traj.diagnostics.size(); ++k)
    EXPECT_LE(traj.diagnostics[k].linf, traj.diagnostics[k - 1].linf + 1e-8);
  EXPECT_LT(traj.diagnostics.back().linf, 0.5 * traj.diagnostics.front().linf);
}

TEST(Evolve, RejectsBadConfigs) {
  const auto spec = circle(16);
  const Field u0(spec, std::vector<double>(16, 0.3));
  PMEConfig cfg;
  cfg.newton_tol = 1e-3;
  EXPECT_THROW(evolve(u0, cfg), std::invalid_argument);
  cfg = PMEConfig{};
  cfg.steps = 0;
  EXPECT_THROW(evolve(u0, cfg), std::invalid_argument);
  cfg = PMEConfig{};
  cfg.record_times = {0.5, 0.2};
  EXPECT_THROW(evolve(u0, cfg), std::invalid_argument);
  cfg = PMEConfig{};
  cfg.record_times = {1.5};
  EXPECT_THROW(evolve(u0, cfg), std::invalid_argument);
  cfg = PMEConfig{};
  cfg.m = -1.0;
  EXPECT_THROW(evolve(u0, cfg), std::invalid_argument);
}

TEST(Evolve, FailureCarriesPartialTrajectory) {
  const auto spec = circle(64);
  EnsembleSpec es;
  es.band = 6;
  es.seed = 99;
  es.amplitude = 2.0;
  const Field u0 = sample_band_limited(spec, es, 0);
  PMEConfig cfg;
  cfg.m = 3.0;
  cfg.frac = FracParams{0.5, 0.0};
  cfg.horizon = 1.0;
  cfg.steps = 4;
  cfg.newton_max_iter = 1;
  cfg.cg_max_iter = 1;
  try {
    evolve(u0, cfg);
    FAIL() << "expected EvolveFailure";
  } catch (const EvolveFailure& ef) {
    EXPECT_GE(ef.failed_step, 1);
    EXPECT_GT(ef.residual, 0.0);
    EXPECT_GE(ef.partial.diagnostics.size(), 1u);
    EXPECT_EQ(ef.partial.diagnostics.size(), static_cast<std::size_t>(ef.failed_step));
  }
}

TEST(Evolve, OversampledNonlinearityStaysClose) {
  const auto spec = circle(64);
  EnsembleSpec es;
  es.band = 4;
  es.seed = 13;
  es.amplitude = 0.5;
  const Field u0 = sample_band_limited(spec, es, 0);
  PMEConfig cfg;
  cfg.m = 2.0;
  cfg.frac = FracParams{0.5, 0.0};
  cfg.horizon = 0.1;
  cfg.steps = 10;
  const auto plain = evolve(u0, cfg);
  cfg.oversample_nonlinearity = true;
  const auto dealiased = evolve(u0, cfg);
  EXPECT_LE(sup_diff(plain.final_state, dealiased.final_state), 1e-2);
  EXPECT_LE(std::abs(mean(dealiased.final_state) - mean(u0)), 1e-12);
}

TEST(OmegaLimit, DistancesMeetCauchyBound) {
  const auto spec = circle(32);
  EnsembleSpec es;
  es.band = 4;
  es.seed = 3;
  const Field u0 = sample_band_limited(spec, es, 0);
  PMEConfig cfg;
  cfg.m = 2.0;
  cfg.frac = FracParams{0.5, 0.0};
  cfg.horizon = 1.0;
  cfg.steps = 40;
  const std::vector<double> omegas{0.2, 0.1, 0.05};
  const auto report = omega_limit_study(u0, cfg, omegas);
  ASSERT_EQ(report.pairs.size(), 2u);
  EXPECT_NEAR(report.u0_m_moment, abs_moment(u0, 2.0), 1e-14);
  for (const auto& p : report.pairs) {
    EXPECT_GT(p.sup_l1_distance, 0.0);
    EXPECT_NEAR(p.bound, (p.omega_high - p.omega_low) * report.u0_m_moment, 1e-15);
    EXPECT_LE(p.sup_l1_distance, p.bound + 1e-6);
  }
  EXPECT_TRUE(report.within(1e-6));
}

TEST(OmegaLimit, IdenticalOmegasGiveZeroDistance) {
  const auto spec = circle(32);
  EnsembleSpec es;
  es.band = 3;
  es.seed = 17;
  const Field u0 = sample_band_limited(spec, es, 0);
  PMEConfig cfg;
  cfg.m = 2.0;
  cfg.horizon = 0.2;
  cfg.steps = 8;
  const auto report = omega_limit_study(u0, cfg, {0.1, 0.1});
  ASSERT_EQ(report.pairs.size(), 1u);
  EXPECT_EQ(report.pairs[0].sup_l1_distance, 0.0);
  EXPECT_EQ(report.pairs[0].bound, 0.0);
}

TEST(OmegaLimit, RejectsBadSequences) {
  const auto spec = circle(16);
  const Field u0(spec, std::vector<double>(16, 0.5));
  PMEConfig cfg;
  EXPECT_THROW(omega_limit_study(u0, cfg, {0.1}), std::invalid_argument);
  EXPECT_THROW(omega_limit_study(u0, cfg, {0.05, 0.1}), std::invalid_argument);
  EXPECT_THROW(omega_limit_study(u0, cfg, {0.1, 0.0}), std::invalid_argument);
  EXPECT_THROW(omega_limit_study(u0, cfg, {0.1, -0.05}), std::invalid_argument);
}
