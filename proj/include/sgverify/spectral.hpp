#pragma once

// Zero-mean periodic Fourier fields on [0, 2*pi]: norms, derivatives,
// L-infinity bounds and exact (dealiased) quadratic products.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

#include <fftw3.h>

namespace sgv {

inline constexpr double two_pi = 6.28318530717958647692528676655900577;

/// A real 2*pi-periodic function with zero mean, stored as one-sided Fourier
/// coefficients:
///
///   u(x) = sum_{k=1..band} 2 Re( c_k e^{ikx} ).
///
/// No k = 0 coefficient exists, so zero mean and realness hold by
/// construction rather than by runtime checks.  Under this convention
/// sin(kx) has c_k = -i/2 and cos(kx) has c_k = 1/2.
///
/// Fields are immutable after construction and safe to share across threads.
class ZeroMeanField {
 public:
  ZeroMeanField() = default;
  explicit ZeroMeanField(std::vector<std::complex<double>> coeffs)
      : c_(std::move(coeffs)) {}

  static ZeroMeanField zero(int band) {
    return ZeroMeanField(std::vector<std::complex<double>>(
        static_cast<std::size_t>(std::max(band, 0))));
  }

  /// Highest stored wavenumber (0 for the empty/zero field).
  int band() const { return static_cast<int>(c_.size()); }

  /// Coefficient for wavenumber k >= 1; zero outside the stored band.
  std::complex<double> coeff(int k) const {
    if (k < 1 || k > band()) return {0.0, 0.0};
    return c_[static_cast<std::size_t>(k - 1)];
  }

  const std::vector<std::complex<double>>& coeffs() const { return c_; }

 private:
  std::vector<std::complex<double>> c_;
};

enum class LinfMode { grid, coeff };

namespace detail {

using cvec = std::vector<std::complex<double>>;

// One-sided coefficients (k = 1..2b) of v*v for a real zero-mean field v with
// one-sided coefficients v_1..v_b.  The k = 0 mode of the product is dropped;
// every consumer differentiates the result at least once.
inline cvec square_onesided(const cvec& v) {
  const int b = static_cast<int>(v.size());
  if (b == 0) return {};
  cvec out(static_cast<std::size_t>(2 * b));
  for (int m = 1; m <= 2 * b; ++m) {
    double sr = 0.0, si = 0.0;
    const int j0 = std::max(1, m - b), j1 = std::min(b, m - 1);
    for (int j = j0; j <= j1; ++j) {  // v_j * v_{m-j}
      const double ar = v[j - 1].real(), ai = v[j - 1].imag();
      const double br = v[m - j - 1].real(), bi = v[m - j - 1].imag();
      sr += ar * br - ai * bi;
      si += ar * bi + ai * br;
    }
    for (int j = m + 1; j <= b; ++j) {  // 2 * v_j * conj(v_{j-m})
      const double ar = v[j - 1].real(), ai = v[j - 1].imag();
      const double br = v[j - m - 1].real(), bi = -v[j - m - 1].imag();
      sr += 2.0 * (ar * br - ai * bi);
      si += 2.0 * (ar * bi + ai * br);
    }
    out[static_cast<std::size_t>(m - 1)] = {sr, si};
  }
  return out;
}

// One-sided coefficients (k = 1..bv+bw) of v*w, both inputs one-sided.
inline cvec bilinear_onesided(const cvec& v, const cvec& w) {
  const int bv = static_cast<int>(v.size());
  const int bw = static_cast<int>(w.size());
  if (bv == 0 || bw == 0) return {};
  cvec out(static_cast<std::size_t>(bv + bw));
  for (int m = 1; m <= bv + bw; ++m) {
    double sr = 0.0, si = 0.0;
    const int j0 = std::max(1, m - bw), j1 = std::min(bv, m - 1);
    for (int j = j0; j <= j1; ++j) {  // v_j * w_{m-j}
      const double ar = v[j - 1].real(), ai = v[j - 1].imag();
      const double br = w[m - j - 1].real(), bi = w[m - j - 1].imag();
      sr += ar * br - ai * bi;
      si += ar * bi + ai * br;
    }
    for (int j = m + 1; j <= std::min(bv, bw + m); ++j) {  // v_j * conj(w_{j-m})
      const double ar = v[j - 1].real(), ai = v[j - 1].imag();
      const double br = w[j - m - 1].real(), bi = -w[j - m - 1].imag();
      sr += ar * br - ai * bi;
      si += ar * bi + ai * br;
    }
    for (int l = m + 1; l <= std::min(bw, bv + m); ++l) {  // conj(v_{l-m}) * w_l
      const double ar = v[l - m - 1].real(), ai = -v[l - m - 1].imag();
      const double br = w[l - 1].real(), bi = w[l - 1].imag();
      sr += ar * br - ai * bi;
      si += ar * bi + ai * br;
    }
    out[static_cast<std::size_t>(m - 1)] = {sr, si};
  }
  return out;
}

// One-sided coefficients of f_x: c_k -> i k c_k.
inline cvec dx_coeffs(const ZeroMeanField& f) {
  cvec v(static_cast<std::size_t>(f.band()));
  for (int k = 1; k <= f.band(); ++k) {
    const auto c = f.coeff(k);
    v[static_cast<std::size_t>(k - 1)] = {-static_cast<double>(k) * c.imag(),
                                          static_cast<double>(k) * c.real()};
  }
  return v;
}

// FFTW c2r plans, one per transform size, created once under a lock.  Plan
// execution via the new-array interface is reentrant, creation is not.
inline std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

inline fftw_plan plan_c2r(int n) {
  static std::map<int, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(fftw_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  fftw_complex* in = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
  double* out = fftw_alloc_real(static_cast<std::size_t>(n));
  fftw_plan p = fftw_plan_dft_c2r_1d(n, in, out, FFTW_ESTIMATE);
  fftw_free(in);
  fftw_free(out);
  cache.emplace(n, p);
  return p;
}

}  // namespace detail

/// Samples f at the n_points uniform grid points x_j = 2*pi*j/n_points.
/// Exact (up to rounding) whenever n_points >= 2*band + 2.
inline std::vector<double> grid_values(const ZeroMeanField& f, int n_points) {
  if (n_points < 2 * f.band() + 2)
    throw std::invalid_argument("grid_values: grid too coarse for bandwidth");
  std::vector<double> result(static_cast<std::size_t>(n_points), 0.0);
  if (f.band() == 0) return result;
  fftw_plan plan = detail::plan_c2r(n_points);
  fftw_complex* in =
      fftw_alloc_complex(static_cast<std::size_t>(n_points / 2 + 1));
  double* out = fftw_alloc_real(static_cast<std::size_t>(n_points));
  for (int k = 0; k <= n_points / 2; ++k) in[k][0] = in[k][1] = 0.0;
  for (int k = 1; k <= f.band(); ++k) {
    const auto c = f.coeff(k);
    in[k][0] = c.real();
    in[k][1] = c.imag();
  }
  // The unnormalized c2r backward transform is exactly the one-sided
  // synthesis sum 2 Re(c_k e^{ikx_j}).
  fftw_execute_dft_c2r(plan, in, out);
  std::copy(out, out + n_points, result.begin());
  fftw_free(in);
  fftw_free(out);
  return result;
}

/// H^p norm ||d^p f / dx^p||_{L2} = sqrt(2*pi * sum_k 2 k^{2p} |c_k|^2).
/// p = 0 is the L2 norm.
inline double hp_norm(const ZeroMeanField& f, int p) {
  if (p < 0) throw std::invalid_argument("hp_norm: p must be >= 0");
  double sum = 0.0;
  for (int k = 1; k <= f.band(); ++k) {
    const auto c = f.coeff(k);
    double kp = 1.0;
    for (int i = 0; i < p; ++i) kp *= static_cast<double>(k) * k;
    sum += 2.0 * kp * (c.real() * c.real() + c.imag() * c.imag());
  }
  return std::sqrt(two_pi * sum);
}

/// H^{-1} norm: the L2 norm of the zero-mean antiderivative,
/// sqrt(2*pi * sum_k 2 |c_k|^2 / k^2).
inline double hneg1_norm(const ZeroMeanField& f) {
  double sum = 0.0;
  for (int k = 1; k <= f.band(); ++k) {
    const auto c = f.coeff(k);
    sum += 2.0 * (c.real() * c.real() + c.imag() * c.imag()) /
           (static_cast<double>(k) * k);
  }
  return std::sqrt(two_pi * sum);
}

/// Spectral derivative of the given order: c_k -> (ik)^order c_k.
inline ZeroMeanField derivative(const ZeroMeanField& f, int order) {
  if (order < 1) throw std::invalid_argument("derivative: order must be >= 1");
  std::vector<std::complex<double>> out(f.coeffs());
  for (int k = 1; k <= f.band(); ++k) {
    double kp = 1.0;
    for (int i = 0; i < order; ++i) kp *= static_cast<double>(k);
    auto& c = out[static_cast<std::size_t>(k - 1)];
    const double re = c.real() * kp, im = c.imag() * kp;
    switch (order & 3) {  // multiply by i^order
      case 0: c = {re, im}; break;
      case 1: c = {-im, re}; break;
      case 2: c = {-re, -im}; break;
      default: c = {im, -re}; break;
    }
  }
  return ZeroMeanField(std::move(out));
}

/// Upper bound (or paper-style estimate) for ||f||_{L-infinity}.
///
/// coeff: sum_k 2|c_k|, a rigorous upper bound.
/// grid:  max |f| on an 8x-oversampled uniform grid (16*band points); matches
///        what a plotting-grade evaluation sees but is not a certified bound.
inline double linf_bound(const ZeroMeanField& f, LinfMode mode) {
  if (f.band() == 0) return 0.0;
  if (mode == LinfMode::coeff) {
    double sum = 0.0;
    for (int k = 1; k <= f.band(); ++k) sum += 2.0 * std::abs(f.coeff(k));
    return sum;
  }
  const auto values = grid_values(f, 16 * f.band());
  double mx = 0.0;
  for (double v : values) mx = std::max(mx, std::abs(v));
  return mx;
}

/// N(f) = -((f_x)^2)_xx, computed exactly on the extended band 2*band by
/// direct coefficient convolution (no aliasing).  The k = 0 mode of (f_x)^2
/// is annihilated by the two derivatives, so the result is zero-mean.
inline ZeroMeanField nonlinear_term(const ZeroMeanField& f) {
  const int b = f.band();
  if (b == 0) return ZeroMeanField();
  auto sq = detail::square_onesided(detail::dx_coeffs(f));
  // -(g)_xx has coefficients +k^2 g_k.
  for (int m = 1; m <= 2 * b; ++m)
    sq[static_cast<std::size_t>(m - 1)] *= static_cast<double>(m) * m;
  return ZeroMeanField(std::move(sq));
}

/// a*f + b*g on the union band.
inline ZeroMeanField lincomb(double a, const ZeroMeanField& f, double b,
                             const ZeroMeanField& g) {
  const int band = std::max(f.band(), g.band());
  std::vector<std::complex<double>> out(static_cast<std::size_t>(band));
  for (int k = 1; k <= band; ++k)
    out[static_cast<std::size_t>(k - 1)] = a * f.coeff(k) + b * g.coeff(k);
  return ZeroMeanField(std::move(out));
}

/// Drops modes above n_modes.
inline ZeroMeanField truncate(const ZeroMeanField& f, int n_modes) {
  if (f.band() <= n_modes) return f;
  std::vector<std::complex<double>> out(
      f.coeffs().begin(), f.coeffs().begin() + n_modes);
  return ZeroMeanField(std::move(out));
}

}  // namespace sgv
