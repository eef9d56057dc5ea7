// Small self-contained complex FFT used by the spectral transforms.
// Radix-2 iterative kernel for power-of-two lengths, dense DFT fallback
// for other even lengths. No global state, safe to call concurrently.

#ifndef FRACPME_DETAIL_FFT_HPP
#define FRACPME_DETAIL_FFT_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

namespace fracpme::detail {

using cdouble = std::complex<double>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Twiddle factors exp(sign * 2*pi*i * j / n) for j in [0, n).
inline std::vector<cdouble> unit_roots(std::size_t n, int sign) {
  std::vector<cdouble> w(n);
  const double step = sign * 2.0 * std::numbers::pi / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double a = step * static_cast<double>(j);
    w[j] = {std::cos(a), std::sin(a)};
  }
  return w;
}

// In-place radix-2 Cooley-Tukey; n must be a power of two.
inline void fft_pow2(cdouble* a, std::size_t n, const std::vector<cdouble>& roots) {
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cdouble w = roots[k * stride];
        const cdouble u = a[i + k];
        const cdouble v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

// Dense DFT for general n; O(n^2) but only used for small non-power-of-two grids.
inline void dft_dense(cdouble* a, std::size_t n, const std::vector<cdouble>& roots,
                      std::vector<cdouble>& scratch) {
  scratch.assign(n, cdouble{0.0, 0.0});
  for (std::size_t k = 0; k < n; ++k) {
    cdouble acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) acc += a[j] * roots[(j * k) % n];
    scratch[k] = acc;
  }
  for (std::size_t k = 0; k < n; ++k) a[k] = scratch[k];
}

// One-dimensional transform plan reused across the lines of a tensor grid.
// sign = -1 analysis, +1 synthesis; no normalization applied here.
class LineTransform {
 public:
  LineTransform(std::size_t n, int sign)
      : n_(n), pow2_(is_power_of_two(n)), roots_(unit_roots(n, sign)) {}

  void run(cdouble* line, std::vector<cdouble>& scratch) const {
    if (pow2_) {
      fft_pow2(line, n_, roots_);
    } else {
      dft_dense(line, n_, roots_, scratch);
    }
  }

  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  bool pow2_;
  std::vector<cdouble> roots_;
};

// Applies a 1-d transform along the axis with the given length and stride for
// every line of a flattened tensor of total size `total`.
inline void transform_axis(cdouble* data, std::size_t total, std::size_t axis_len,
                           std::size_t stride, const LineTransform& plan) {
  std::vector<cdouble> line(axis_len);
  std::vector<cdouble> scratch;
  const std::size_t n_lines = total / axis_len;
  const std::size_t block = axis_len * stride;
  for (std::size_t l = 0; l < n_lines; ++l) {
    const std::size_t base = (l / stride) * block + (l % stride);
    for (std::size_t i = 0; i < axis_len; ++i) line[i] = data[base + i * stride];
    plan.run(line.data(), scratch);
    for (std::size_t i = 0; i < axis_len; ++i) data[base + i * stride] = line[i];
  }
}

}  // namespace fracpme::detail

#endif
