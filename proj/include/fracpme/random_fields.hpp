// Seeded band-limited Gaussian field ensembles. Coefficients are drawn over a
// conjugate-symmetric half-space with a spectral decay knob, never touching
// the Nyquist slots, so every sample is an exactly real trigonometric
// polynomial. Gaussians come from mt19937_64 plus a hand-rolled Box-Muller so
// the construction is platform-independent.

#ifndef FRACPME_RANDOM_FIELDS_HPP
#define FRACPME_RANDOM_FIELDS_HPP

#include <cstdint>
#include <random>
#include <stdexcept>

#include "fracpme/manifold.hpp"

namespace fracpme {

struct EnsembleSpec {
  int band = 4;          // max |k_j| per axis of populated modes
  double decay = 1.0;    // coefficient std dev ~ (1 + lambda)^(-decay/2)
  double amplitude = 1.0;  // target L2 norm of each sample
  bool zero_mean = false;
  std::uint64_t seed = 1;
};

namespace detail {

class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    eng_.seed(sq);
  }

  double uniform01() {  // (0, 1]
    return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
  }

  double gaussian() {
    const double u = uniform01();
    const double v = uniform01();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
  }

 private:
  std::mt19937_64 eng_;
};

inline bool in_band(const std::array<int, 3>& k, int dim, int band) {
  for (int d = 0; d < dim; ++d)
    if (std::abs(k[static_cast<std::size_t>(d)]) > band) return false;
  return true;
}

// True for exactly one of each {k, -k} pair, false for self-conjugate slots.
inline bool positive_half(const std::array<int, 3>& k) {
  for (int d = 0; d < 3; ++d) {
    if (k[static_cast<std::size_t>(d)] > 0) return true;
    if (k[static_cast<std::size_t>(d)] < 0) return false;
  }
  return false;
}

inline std::size_t conjugate_slot(const ManifoldSpec& s, std::size_t flat) {
  const auto n = axis_sizes(s);
  const auto idx = multi_index(s, flat);
  std::array<std::size_t, 3> rid{0, 0, 0};
  for (int d = 0; d < 3; ++d) {
    const std::size_t nd = n[static_cast<std::size_t>(d)];
    const auto id = static_cast<std::size_t>(idx[static_cast<std::size_t>(d)]);
    rid[static_cast<std::size_t>(d)] = id == 0 ? 0 : nd - id;
  }
  return (rid[0] * n[1] + rid[1]) * n[2] + rid[2];
}

}  // namespace detail

// Draws sample `index` of the ensemble. Deterministic in (seed, index).
inline Field sample_band_limited(const ManifoldSpec& spec, const EnsembleSpec& es,
                                 std::uint64_t index) {
  int min_n = spec.grid[0];
  for (int g : spec.grid) min_n = std::min(min_n, g);
  if (es.band < 1 || es.band > min_n / 2 - 1)
    throw std::invalid_argument("sample_band_limited: band must be in [1, min(N)/2 - 1]");
  detail::GaussianStream rng(es.seed, index);
  SpectralField c(spec);
  const std::size_t total = spec.point_count();
  for (std::size_t i = 0; i < total; ++i) {
    const auto k = frequency_vector(spec, i);
    if (!detail::in_band(k, spec.dim, es.band)) continue;
    const double sd = std::pow(1.0 + eigenvalue(spec, i), -0.5 * es.decay);
    if (i == 0) {
      c.coeffs[0] = es.zero_mean ? cdouble{0.0, 0.0} : cdouble{sd * rng.gaussian(), 0.0};
    } else if (detail::positive_half(k)) {
      const cdouble z{sd * rng.gaussian() * std::numbers::sqrt2 / 2.0,
                      sd * rng.gaussian() * std::numbers::sqrt2 / 2.0};
      c.coeffs[i] = z;
      c.coeffs[detail::conjugate_slot(spec, i)] = std::conj(z);
    }
  }
  Field f = inverse_transform(c);
  const double nrm = lp_norm(f, 2.0);
  if (nrm > 0.0) {
    const double scale = es.amplitude / nrm;
    for (double& v : f.values) v *= scale;
  }
  return f;
}

// Nonnegative sample: the square of a half-band field. The product of two
// trigonometric polynomials of degree <= min(N)/4 - 1 is alias-free on the
// grid, so the result is exactly nonnegative as a continuum function, not
// just at the grid nodes. Normalized to sup norm = amplitude.
inline Field sample_nonnegative(const ManifoldSpec& spec, const EnsembleSpec& es,
                                std::uint64_t index) {
  int min_n = spec.grid[0];
  for (int g : spec.grid) min_n = std::min(min_n, g);
  EnsembleSpec half = es;
  half.band = std::min(es.band, min_n / 4 - 1);
  half.zero_mean = false;
  if (half.band < 1)
    throw std::invalid_argument("sample_nonnegative: grid too coarse for an alias-free square");
  Field g = sample_band_limited(spec, half, index);
  Field f(spec);
  double mx = 0.0;
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    f.values[i] = g.values[i] * g.values[i];
    mx = std::max(mx, f.values[i]);
  }
  if (mx > 0.0)
    for (double& v : f.values) v *= es.amplitude / mx;
  return f;
}

}  // namespace fracpme

#endif
