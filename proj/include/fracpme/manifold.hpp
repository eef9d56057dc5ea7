// Flat torus T^n: grid geometry, Laplacian eigenbasis, forward/inverse
// spectral transforms, and quadrature/norm utilities. Everything else in the
// library computes through this backend.

#ifndef FRACPME_MANIFOLD_HPP
#define FRACPME_MANIFOLD_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracpme/detail/fft.hpp"

namespace fracpme {

using detail::cdouble;

// Flat-torus geometry. Volume normalization rescales the measure weight only;
// the metric, and with it the Laplacian spectrum, is untouched.
struct ManifoldSpec {
  int dim = 1;
  std::vector<double> periods;
  std::vector<int> grid;
  bool volume_normalized = false;

  std::size_t point_count() const {
    std::size_t n = 1;
    for (int g : grid) n *= static_cast<std::size_t>(g);
    return n;
  }
  double metric_volume() const {
    double v = 1.0;
    for (double L : periods) v *= L;
    return v;
  }
  double measure_volume() const { return volume_normalized ? 1.0 : metric_volume(); }
  double cell_weight() const { return measure_volume() / static_cast<double>(point_count()); }

  bool compatible(const ManifoldSpec& o) const {
    return dim == o.dim && periods == o.periods && grid == o.grid &&
           volume_normalized == o.volume_normalized;
  }
};

inline ManifoldSpec make_torus(int dim, std::vector<double> periods, std::vector<int> grid,
                               bool volume_normalized) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("make_torus: dim must be 1, 2, or 3");
  if (static_cast<int>(periods.size()) != dim || static_cast<int>(grid.size()) != dim)
    throw std::invalid_argument("make_torus: periods/grid length must equal dim");
  for (double L : periods)
    if (!(L > 0.0) || !std::isfinite(L))
      throw std::invalid_argument("make_torus: periods must be positive and finite");
  for (int g : grid)
    if (g < 4 || g % 2 != 0)
      throw std::invalid_argument("make_torus: grid sizes must be even and >= 4");
  return ManifoldSpec{dim, std::move(periods), std::move(grid), volume_normalized};
}

// Real scalar function sampled on the grid (row-major, last axis contiguous).
struct Field {
  ManifoldSpec spec;
  std::vector<double> values;

  Field() = default;
  explicit Field(const ManifoldSpec& s) : spec(s), values(s.point_count(), 0.0) {}
  Field(const ManifoldSpec& s, std::vector<double> v) : spec(s), values(std::move(v)) {
    if (values.size() != spec.point_count())
      throw std::invalid_argument("Field: value count does not match grid");
  }
};

// Complex coefficients per integer frequency vector, stored in FFT slot order
// (slot j along an axis of N points carries frequency j for j <= N/2, j - N
// otherwise; the j = N/2 slot is the self-conjugate Nyquist mode).
struct SpectralField {
  ManifoldSpec spec;
  std::vector<cdouble> coeffs;

  SpectralField() = default;
  explicit SpectralField(const ManifoldSpec& s) : spec(s), coeffs(s.point_count()) {}
};

namespace detail {

inline std::array<std::size_t, 3> axis_sizes(const ManifoldSpec& s) {
  std::array<std::size_t, 3> n{1, 1, 1};
  for (int d = 0; d < s.dim; ++d) n[d] = static_cast<std::size_t>(s.grid[d]);
  return n;
}

inline int signed_frequency(std::size_t slot, std::size_t n) {
  return slot <= n / 2 ? static_cast<int>(slot) : static_cast<int>(slot) - static_cast<int>(n);
}

}  // namespace detail

// Decomposes a flat index into per-axis slots.
inline std::array<int, 3> multi_index(const ManifoldSpec& s, std::size_t flat) {
  const auto n = detail::axis_sizes(s);
  std::array<int, 3> idx{0, 0, 0};
  idx[2] = static_cast<int>(flat % n[2]);
  flat /= n[2];
  idx[1] = static_cast<int>(flat % n[1]);
  idx[0] = static_cast<int>(flat / n[1]);
  return idx;
}

// Grid point coordinates of a flat index.
inline std::array<double, 3> grid_point(const ManifoldSpec& s, std::size_t flat) {
  const auto idx = multi_index(s, flat);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int d = 0; d < s.dim; ++d)
    x[d] = s.periods[d] * static_cast<double>(idx[d]) / static_cast<double>(s.grid[d]);
  return x;
}

// Integer frequency vector of a coefficient slot.
inline std::array<int, 3> frequency_vector(const ManifoldSpec& s, std::size_t flat) {
  const auto n = detail::axis_sizes(s);
  auto idx = multi_index(s, flat);
  std::array<int, 3> k{0, 0, 0};
  for (int d = 0; d < s.dim; ++d)
    k[d] = detail::signed_frequency(static_cast<std::size_t>(idx[d]), n[d]);
  return k;
}

// Laplacian eigenvalue lambda_k = sum_j (2 pi k_j / L_j)^2 of one slot.
inline double eigenvalue(const ManifoldSpec& s, std::size_t flat) {
  const auto k = frequency_vector(s, flat);
  double lam = 0.0;
  for (int d = 0; d < s.dim; ++d) {
    const double w = 2.0 * std::numbers::pi * static_cast<double>(k[d]) / s.periods[d];
    lam += w * w;
  }
  return lam;
}

// Full eigenvalue table in coefficient slot order.
inline std::vector<double> eigenvalue_table(const ManifoldSpec& s) {
  std::vector<double> lam(s.point_count());
  for (std::size_t i = 0; i < lam.size(); ++i) lam[i] = eigenvalue(s, i);
  return lam;
}

inline Field make_field(const ManifoldSpec& s,
                        const std::function<double(const std::array<double, 3>&)>& fn) {
  Field f(s);
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = fn(grid_point(s, i));
  return f;
}

namespace detail {

inline void transform_all_axes(const ManifoldSpec& s, std::vector<cdouble>& data, int sign) {
  const auto n = axis_sizes(s);
  const std::size_t total = s.point_count();
  std::size_t stride = 1;
  for (int d = s.dim - 1; d >= 0; --d) {
    const LineTransform plan(n[static_cast<std::size_t>(d)], sign);
    transform_axis(data.data(), total, n[static_cast<std::size_t>(d)], stride, plan);
    stride *= n[static_cast<std::size_t>(d)];
  }
}

}  // namespace detail

// Analysis transform, normalized so the k = 0 coefficient is the grid mean.
inline SpectralField forward_transform(const Field& f) {
  if (f.values.size() != f.spec.point_count())
    throw std::invalid_argument("forward_transform: field/spec shape mismatch");
  SpectralField c(f.spec);
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if (!std::isfinite(f.values[i]))
      throw std::invalid_argument("forward_transform: non-finite field value");
    c.coeffs[i] = cdouble{f.values[i], 0.0};
  }
  detail::transform_all_axes(f.spec, c.coeffs, -1);
  const double scale = 1.0 / static_cast<double>(f.spec.point_count());
  for (auto& z : c.coeffs) z *= scale;
  return c;
}

// Synthesis transform; imaginary residue of a Hermitian input is discarded.
inline Field inverse_transform(const SpectralField& c) {
  if (c.coeffs.size() != c.spec.point_count())
    throw std::invalid_argument("inverse_transform: coefficient/spec shape mismatch");
  std::vector<cdouble> buf = c.coeffs;
  detail::transform_all_axes(c.spec, buf, +1);
  Field f(c.spec);
  for (std::size_t i = 0; i < buf.size(); ++i) f.values[i] = buf[i].real();
  return f;
}

// Restores exact Hermitian symmetry (conjugate pairing of k and -k, real
// self-conjugate slots); used by generators that fill coefficients directly.
inline void hermitize(SpectralField& c) {
  const auto n = detail::axis_sizes(c.spec);
  const std::size_t total = c.spec.point_count();
  for (std::size_t i = 0; i < total; ++i) {
    const auto idx = multi_index(c.spec, i);
    std::array<std::size_t, 3> rid{0, 0, 0};
    for (int d = 0; d < 3; ++d) {
      const std::size_t nd = n[static_cast<std::size_t>(d)];
      const auto id = static_cast<std::size_t>(idx[static_cast<std::size_t>(d)]);
      rid[static_cast<std::size_t>(d)] = id == 0 ? 0 : nd - id;
    }
    const std::size_t j = (rid[0] * n[1] + rid[1]) * n[2] + rid[2];
    if (i == j) {
      c.coeffs[i] = cdouble{c.coeffs[i].real(), 0.0};
    } else if (i < j) {
      const cdouble avg = 0.5 * (c.coeffs[i] + std::conj(c.coeffs[j]));
      c.coeffs[i] = avg;
      c.coeffs[j] = std::conj(avg);
    }
  }
}

// Periodic trapezoid quadrature (equal weights).
inline double integrate(const Field& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s * f.spec.cell_weight();
}

inline double mean(const Field& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s / static_cast<double>(f.spec.point_count());
}

inline double lp_norm(const Field& f, double p) {
  if (p == std::numeric_limits<double>::infinity()) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
  }
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be in [1, inf]");
  double s = 0.0;
  for (double v : f.values) s += std::pow(std::abs(v), p);
  return std::pow(s * f.spec.cell_weight(), 1.0 / p);
}

// integral of |f|^p dmu for any p > 0 (unlike lp_norm, not a norm for p < 1).
inline double abs_moment(const Field& f, double p) {
  if (!(p > 0.0)) throw std::invalid_argument("abs_moment: p must be positive");
  double s = 0.0;
  for (double v : f.values) s += std::pow(std::abs(v), p);
  return s * f.spec.cell_weight();
}

inline double l2_inner(const Field& a, const Field& b) {
  if (!a.spec.compatible(b.spec)) throw std::invalid_argument("l2_inner: spec mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
  return s * a.spec.cell_weight();
}

// Applies a real spectral multiplier g(lambda_k).
inline Field apply_multiplier(const Field& f, const std::function<double(double)>& g) {
  SpectralField c = forward_transform(f);
  for (std::size_t i = 0; i < c.coeffs.size(); ++i) c.coeffs[i] *= g(eigenvalue(f.spec, i));
  return inverse_transform(c);
}

}  // namespace fracpme

#endif
