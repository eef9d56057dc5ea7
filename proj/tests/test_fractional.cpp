// Fractional Laplacian constructions: spectral multiplier ground truth,
// Balakrishnan/Phillips quadrature oracles, subordination at sigma = 1/2,
// semigroup laws, heat kernel, and linear resolvent.

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "fracpme/fractional.hpp"
#include "fracpme/random_fields.hpp"

using namespace fracpme;

namespace {

constexpr double kPi = std::numbers::pi;
const double kInf = std::numeric_limits<double>::infinity();

ManifoldSpec circle(int n = 64) { return make_torus(1, {2.0 * kPi}, {n}, false); }

ManifoldSpec torus3(int n = 16) {
  return make_torus(3, {2.0 * kPi, 2.0 * kPi, 2.0 * kPi}, {n, n, n}, true);
}

Field cosine(const ManifoldSpec& spec, int k = 1) {
  return make_field(spec,
                    [k](const std::array<double, 3>& x) { return std::cos(k * x[0]); });
}

double max_rel_diff(const Field& a, const Field& b) {
  double scale = 0.0;
  for (double v : b.values) scale = std::max(scale, std::abs(v));
  double diff = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    diff = std::max(diff, std::abs(a.values[i] - b.values[i]));
  return diff / std::max(scale, 1e-300);
}

// Three active modes with O(1) coefficients.
Field three_mode_field(const ManifoldSpec& spec) {
  return make_field(spec, [](const std::array<double, 3>& x) {
    return std::cos(x[0]) - 0.5 * std::sin(3.0 * x[0]) + 0.25 * std::cos(7.0 * x[0]);
  });
}

}  // namespace

TEST(FracParams, Validation) {
  const auto spec = circle();
  const Field f = cosine(spec);
  EXPECT_THROW(apply_frac_laplacian(f, FracParams{0.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(apply_frac_laplacian(f, FracParams{1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(apply_frac_laplacian(f, FracParams{0.5, -1.0}), std::invalid_argument);
}

TEST(QuadratureSpecTest, Validation) {
  EXPECT_THROW(build_rule(QuadratureSpec{QuadratureKind::log_uniform, 7, 1e-8, 1e8}),
               std::invalid_argument);
  EXPECT_THROW(build_rule(QuadratureSpec{QuadratureKind::log_uniform, 100, 1e8, 1e-8}),
               std::invalid_argument);
  EXPECT_THROW(build_rule(QuadratureSpec{QuadratureKind::log_uniform, 100, 0.0, 1e8}),
               std::invalid_argument);
}

TEST(Multiplier, SingleModeAndConstants) {
  const auto spec = circle();
  const Field f = cosine(spec, 2);
  const Field g = apply_frac_laplacian(f, FracParams{0.5, 0.0});
  for (std::size_t i = 0; i < f.values.size(); ++i)
    EXPECT_NEAR(g.values[i], 2.0 * f.values[i], 1e-12);

  Field c(spec, std::vector<double>(spec.point_count(), 7.0));
  const Field zero = apply_frac_laplacian(c, FracParams{0.5, 0.0});
  for (double v : zero.values) EXPECT_NEAR(v, 0.0, 1e-13);
}

TEST(Multiplier, PowerCompositionIsLaplacian) {
  const auto spec = circle();
  const Field f = three_mode_field(spec);
  const Field g =
      apply_frac_laplacian(apply_frac_laplacian(f, FracParams{0.3, 0.0}), FracParams{0.7, 0.0});
  const Field lap = apply_multiplier(f, [](double lam) { return lam; });
  EXPECT_LT(max_rel_diff(g, lap), 1e-10);
}

TEST(Balakrishnan, SingleModeAtDefaultBudget) {
  const auto spec = circle();
  const Field f = cosine(spec);
  const auto out = apply_frac_laplacian_balakrishnan(f, FracParams{0.5, 0.0}, QuadratureSpec{});
  EXPECT_TRUE(out.cutoffs_adequate);
  EXPECT_LT(out.truncation_error, 1e-8);
  EXPECT_LT(max_rel_diff(out.field, f), 1e-6);
}

TEST(Balakrishnan, ConstantMapsToZero) {
  const auto spec = circle();
  Field c(spec, std::vector<double>(spec.point_count(), 3.0));
  const auto out = apply_frac_laplacian_balakrishnan(c, FracParams{0.25, 0.0}, QuadratureSpec{});
  for (double v : out.field.values) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Balakrishnan, ThreeModeFieldAcrossSigma) {
  const auto spec = circle();
  const Field f = three_mode_field(spec);
  for (double sigma : {0.25, 0.75}) {
    const FracParams fp{sigma, 0.0};
    const auto out = apply_frac_laplacian_balakrishnan(f, fp, QuadratureSpec{});
    EXPECT_LT(max_rel_diff(out.field, apply_frac_laplacian(f, fp)), 1e-4) << "sigma " << sigma;
  }
}

TEST(Phillips, MatchesMultiplier) {
  const auto spec = circle();
  const Field f = cosine(spec);
  const auto out = apply_phillips(f, FracParams{0.5, 0.0}, QuadratureSpec{});
  EXPECT_TRUE(out.cutoffs_adequate);
  EXPECT_LT(max_rel_diff(out.field, f), 1e-6);

  Field c(spec, std::vector<double>(spec.point_count(), -4.0));
  const auto zero = apply_phillips(c, FracParams{0.5, 0.0}, QuadratureSpec{});
  for (double v : zero.field.values) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Oracles, PairwiseAgreementAcrossSigmaAndRules) {
  const auto spec = circle();
  const EnsembleSpec es{8, 0.5, 1.0, false, 21};
  for (double sigma : {0.25, 0.5, 0.75}) {
    const FracParams fp{sigma, 0.0};
    for (auto kind : {QuadratureKind::log_uniform, QuadratureKind::gauss_log}) {
      QuadratureSpec q{};
      q.kind = kind;
      for (std::uint64_t i = 0; i < 3; ++i) {
        const Field f = sample_band_limited(spec, es, i);
        const Field exact = apply_frac_laplacian(f, fp);
        const auto bal = apply_frac_laplacian_balakrishnan(f, fp, q);
        const auto phi = apply_phillips(f, fp, q);
        EXPECT_LT(max_rel_diff(bal.field, exact), 1e-4);
        EXPECT_LT(max_rel_diff(phi.field, exact), 1e-4);
        EXPECT_LT(max_rel_diff(bal.field, phi.field), 1e-4);
      }
    }
  }
}

TEST(Oracles, TightCutoffsAreFlagged) {
  const auto spec = circle();
  const Field f = cosine(spec, 8);
  const QuadratureSpec tight{QuadratureKind::log_uniform, 64, 1e-2, 1e2};
  const auto out = apply_frac_laplacian_balakrishnan(f, FracParams{0.5, 0.0}, tight);
  EXPECT_FALSE(out.cutoffs_adequate);
  EXPECT_GT(out.truncation_error, 1e-4);
}

TEST(Semigroup, SingleModeDecayAndIdentity) {
  const auto spec = circle();
  const Field f = cosine(spec);
  const Field g = semigroup_apply(f, 1.0, FracParams{0.5, 0.0});
  for (std::size_t i = 0; i < f.values.size(); ++i)
    EXPECT_NEAR(g.values[i], std::exp(-1.0) * f.values[i], 1e-12);

  const Field id = semigroup_apply(f, 0.0, FracParams{0.5, 0.0});
  EXPECT_EQ(id.values, f.values);
  EXPECT_THROW(semigroup_apply(f, -1.0, FracParams{0.5, 0.0}), std::invalid_argument);
}

TEST(Semigroup, CompositionSelfAdjointnessContraction) {
  const auto spec = torus3(8);
  const EnsembleSpec es{3, 0.5, 1.0, false, 33};
  const FracParams fp{0.5, 0.2};
  const Field f = sample_band_limited(spec, es, 0);
  const Field g = sample_band_limited(spec, es, 1);

  const Field ts = semigroup_apply(semigroup_apply(f, 0.7, fp), 0.3, fp);
  const Field once = semigroup_apply(f, 1.0, fp);
  EXPECT_LT(max_rel_diff(ts, once), 1e-12);

  EXPECT_NEAR(l2_inner(semigroup_apply(f, 0.5, fp), g), l2_inner(f, semigroup_apply(g, 0.5, fp)),
              1e-12);

  for (double p : {1.0, 2.0, kInf}) {
    EXPECT_LE(lp_norm(semigroup_apply(f, 0.4, fp), p), lp_norm(f, p) + 1e-12);
  }
}

TEST(Semigroup, PositivityOnNonnegativeFields) {
  const auto spec = torus3();
  const EnsembleSpec es{3, 0.5, 1.0, false, 77};
  const FracParams fp{0.5, 0.0};
  for (std::uint64_t i = 0; i < 20; ++i) {
    const Field f = sample_nonnegative(spec, es, i);
    for (double t : {0.01, 0.1, 1.0}) {
      const Field g = semigroup_apply(f, t, fp);
      for (double v : g.values) EXPECT_GT(v, -1e-12);
    }
  }
}

TEST(Subordination, DensityMassAndModeIdentity) {
  const auto q = subordination_quadrature();
  for (double t : {0.1, 1.0, 10.0}) {
    EXPECT_NEAR(subordinator_mass(t, q), 1.0, 1e-8) << "t " << t;
  }
  const QuadratureRule rule = build_rule(q);
  for (double t : {0.1, 1.0, 10.0}) {
    for (int k = 1; k <= 8; ++k) {
      const double lam = static_cast<double>(k) * k;
      const double got = subordinated_multiplier(lam, t, rule, q.t_max);
      const double want = std::exp(-t * k);
      EXPECT_LT(std::abs(got - want) / want, 1e-6) << "t " << t << " k " << k;
    }
  }
}

TEST(Subordination, MatchesHalfPowerSemigroup) {
  const auto spec = circle();
  const Field f = three_mode_field(spec);
  const auto q = subordination_quadrature();
  for (double t : {0.1, 1.0}) {
    const Field sub = semigroup_subordinated(f, t, q);
    const Field exact = semigroup_apply(f, t, FracParams{0.5, 0.0});
    EXPECT_LT(max_rel_diff(sub, exact), 1e-6);
  }
}

TEST(Subordination, ConstantsAreFixed) {
  const auto spec = circle();
  Field c(spec, std::vector<double>(spec.point_count(), 2.0));
  const Field out = semigroup_subordinated(c, 1.0, subordination_quadrature());
  for (double v : out.values) EXPECT_NEAR(v, 2.0, 1e-7);
}

TEST(Subordination, RejectsOtherSigma) {
  const auto spec = circle();
  const Field f = cosine(spec);
  EXPECT_THROW(semigroup_subordinated(f, 1.0, subordination_quadrature(), 0.3),
               std::invalid_argument);
  EXPECT_THROW(semigroup_subordinated(f, 0.0, subordination_quadrature()),
               std::invalid_argument);
}

TEST(HeatKernel, MassAndSymmetryAndLongTimeLimit) {
  const auto spec = torus3(8);
  const FracParams fp{0.5, 0.0};
  const std::array<double, 3> x{0.3, 1.2, 4.0};
  const std::array<double, 3> y{2.0, 0.1, 5.5};

  const auto pxy = heat_kernel(x, y, 0.5, spec, fp);
  const auto pyx = heat_kernel(y, x, 0.5, spec, fp);
  EXPECT_NEAR(pxy.value, pyx.value, 1e-12);

  // quadrature of p(x, .) over the grid equals the k = 0 term
  Field slice = make_field(spec, [&](const std::array<double, 3>& yy) {
    return heat_kernel(x, yy, 0.5, spec, fp).value;
  });
  EXPECT_NEAR(integrate(slice), 1.0, 1e-8);

  const auto late = heat_kernel(x, y, 50.0, spec, fp);
  EXPECT_NEAR(late.value, 1.0, 1e-12);
  EXPECT_TRUE(late.reliable);

  const auto early = heat_kernel(x, y, 1e-6, spec, fp);
  EXPECT_FALSE(early.reliable);
  EXPECT_THROW(heat_kernel(x, y, 0.0, spec, fp), std::invalid_argument);
}

TEST(HeatKernel, EnvelopeFitIsFiniteAndStable) {
  const auto spec = torus3(8);
  const FracParams fp{0.5, 0.0};
  const double n_over_2sigma = 3.0;
  double worst = 0.0;
  for (double t : {0.05, 0.1, 0.5, 1.0, 5.0}) {
    double sup = 0.0;
    for (std::size_t i = 0; i < spec.point_count(); i += 37) {
      const auto x = grid_point(spec, i);
      sup = std::max(sup, heat_kernel(x, {0.0, 0.0, 0.0}, t, spec, fp).value);
    }
    const double envelope = std::max(1.0, std::pow(t, -n_over_2sigma));
    worst = std::max(worst, sup / envelope);
  }
  EXPECT_TRUE(std::isfinite(worst));
  EXPECT_GT(worst, 0.0);
  EXPECT_LT(worst, 1e3);
}

TEST(LinearResolvent, MultiplierAndMarkovBounds) {
  const auto spec = circle();
  const Field f = cosine(spec);
  const Field half = linear_resolvent(f, 1.0, FracParams{0.5, 0.0});
  for (std::size_t i = 0; i < f.values.size(); ++i)
    EXPECT_NEAR(half.values[i], 0.5 * f.values[i], 1e-12);

  Field c(spec, std::vector<double>(spec.point_count(), 5.0));
  const Field same = linear_resolvent(c, 2.0, FracParams{0.5, 0.0});
  for (double v : same.values) EXPECT_NEAR(v, 5.0, 1e-12);

  EXPECT_THROW(linear_resolvent(f, 0.0, FracParams{0.5, 0.0}), std::invalid_argument);

  const auto spec3 = torus3(8);
  const EnsembleSpec es{3, 0.5, 1.0, false, 55};
  for (std::uint64_t i = 0; i < 10; ++i) {
    const Field u = sample_band_limited(spec3, es, i);
    const Field r = linear_resolvent(u, 0.7, FracParams{0.5, 0.0});
    for (double p : {1.0, 2.0, kInf}) EXPECT_LE(lp_norm(r, p), lp_norm(u, p) + 1e-12);
    double sup_u = -kInf, sup_r = -kInf;
    for (double v : u.values) sup_u = std::max(sup_u, v);
    for (double v : r.values) sup_r = std::max(sup_r, v);
    EXPECT_LE(sup_r, std::max(0.0, sup_u) + 1e-12);
  }
}
