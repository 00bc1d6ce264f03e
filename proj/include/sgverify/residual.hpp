#pragma once

// Per-interval residual integrals and L-infinity data of the
// piecewise-linear-in-time interpolant of a solver trajectory.
//
// With phi(s) = (1-s) phi_n + s phi_{n+1} on a step [t_n, t_n + h], the
// residual RES = phi_t + phi_xxxx + (phi_x^2)_xx has mode-wise coefficients
// that are quadratic polynomials in s, so |R_k(s)|^2 / k^2 has degree 4 and
// 3-node Gauss-Legendre integrates it exactly.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "sgverify/evolve.hpp"
#include "sgverify/spectral.hpp"

namespace sgv {

struct IntervalData {
  double t_start = 0.0;
  double t_end = 0.0;
  double res_hm1_sq_integral = 0.0;    // integral of ||RES(s)||^2_{H^-1} ds
  double phixx_linf_sq_integral = 0.0; // upper bound for integral of ||phi_xx||^2_inf ds
  double phixx_linf_left = 0.0;        // ||phi_xx||_inf at the left endpoint
  double phixx_linf_right = 0.0;       // ... and at the right endpoint
};

struct CoefficientSeries {
  std::vector<IntervalData> intervals;  // contiguous, starting at t = 0
};

namespace detail {

// 3-node Gauss-Legendre on [0, 1]: exact for polynomials of degree <= 5.
inline constexpr double gl3_nodes[3] = {
    0.11270166537925831, 0.5, 0.88729833462074169};  // 1/2 -+ sqrt(3/20), 1/2
inline constexpr double gl3_weights[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

// ||R(s)||^2_{H^-1} assembled from the endpoint fields and the three
// convolution products of their derivatives:
//   S(s) = (1-s)^2 s_nn + 2 s (1-s) s_n1 + s^2 s_11,
//   R_k(s) = (c1_k - c0_k)/h + k^4 ((1-s) c0_k + s c1_k) - k^2 S_k(s).
inline double res_hm1_sq_at(const ZeroMeanField& phi_n,
                            const ZeroMeanField& phi_np1, const cvec& s_nn,
                            const cvec& s_n1, const cvec& s_11, double h,
                            double s) {
  const int band =
      std::max({phi_n.band(), phi_np1.band(), static_cast<int>(s_nn.size()),
                static_cast<int>(s_n1.size()), static_cast<int>(s_11.size())});
  const double w_nn = (1.0 - s) * (1.0 - s);
  const double w_n1 = 2.0 * s * (1.0 - s);
  const double w_11 = s * s;
  double sum = 0.0;
  for (int k = 1; k <= band; ++k) {
    const double kd = static_cast<double>(k);
    const double k2 = kd * kd, k4 = k2 * k2;
    const auto c0 = phi_n.coeff(k);
    const auto c1 = phi_np1.coeff(k);
    double sr = 0.0, si = 0.0;
    if (k <= static_cast<int>(s_nn.size())) {
      sr += w_nn * s_nn[static_cast<std::size_t>(k - 1)].real();
      si += w_nn * s_nn[static_cast<std::size_t>(k - 1)].imag();
    }
    if (k <= static_cast<int>(s_n1.size())) {
      sr += w_n1 * s_n1[static_cast<std::size_t>(k - 1)].real();
      si += w_n1 * s_n1[static_cast<std::size_t>(k - 1)].imag();
    }
    if (k <= static_cast<int>(s_11.size())) {
      sr += w_11 * s_11[static_cast<std::size_t>(k - 1)].real();
      si += w_11 * s_11[static_cast<std::size_t>(k - 1)].imag();
    }
    const double lin_r = (1.0 - s) * c0.real() + s * c1.real();
    const double lin_i = (1.0 - s) * c0.imag() + s * c1.imag();
    const double rr = (c1.real() - c0.real()) / h + k4 * lin_r - k2 * sr;
    const double ri = (c1.imag() - c0.imag()) / h + k4 * lin_i - k2 * si;
    sum += 2.0 * (rr * rr + ri * ri) / k2;
  }
  return two_pi * sum;
}

// Shared interval kernel: both interval_data() and the streaming pipeline
// call this with the same convolution inputs, so their outputs are
// bit-identical.
inline IntervalData interval_data_from(const ZeroMeanField& phi_n,
                                       const ZeroMeanField& phi_np1,
                                       const cvec& s_nn, const cvec& s_n1,
                                       const cvec& s_11, double t_start,
                                       double h, LinfMode mode,
                                       double phixx_left) {
  IntervalData iv;
  iv.t_start = t_start;
  iv.t_end = t_start + h;
  double quad = 0.0;
  for (int j = 0; j < 3; ++j)
    quad += gl3_weights[j] * res_hm1_sq_at(phi_n, phi_np1, s_nn, s_n1, s_11, h,
                                           gl3_nodes[j]);
  iv.res_hm1_sq_integral = h * quad;
  iv.phixx_linf_left = phixx_left;
  iv.phixx_linf_right = linf_bound(derivative(phi_np1, 2), mode);
  // phi_xx is affine in s, so sup_x |phi_xx(s, x)| <= max of the endpoint
  // norms pointwise in s; the endpoint-max square times h over-estimates the
  // true time integral (rigorous upper-bound contract).
  const double mx = std::max(iv.phixx_linf_left, iv.phixx_linf_right);
  iv.phixx_linf_sq_integral = h * mx * mx;
  return iv;
}

inline void append_series_row(std::ostream& os, const IntervalData& iv) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                iv.t_start, iv.t_end, iv.res_hm1_sq_integral,
                iv.phixx_linf_sq_integral, iv.phixx_linf_left,
                iv.phixx_linf_right);
  os << buf;
}

inline constexpr const char* series_csv_header =
    "t_start,t_end,res_hm1_sq_int,phixx_linf_sq_int,phixx_linf_left,"
    "phixx_linf_right\n";

}  // namespace detail

/// The residual field RES(s) = (phi_{n+1} - phi_n)/h + phi(s)_xxxx +
/// ((phi(s)_x)^2)_xx on the extended band 2N (no aliasing), where
/// phi(s) = (1-s) phi_n + s phi_{n+1}.
inline ZeroMeanField residual_at(const ZeroMeanField& phi_n,
                                 const ZeroMeanField& phi_np1, double h,
                                 double s) {
  const auto phi_s = lincomb(1.0 - s, phi_n, s, phi_np1);
  const auto sq = detail::square_onesided(detail::dx_coeffs(phi_s));
  const int band = std::max({phi_n.band(), phi_np1.band(),
                             static_cast<int>(sq.size())});
  std::vector<std::complex<double>> out(static_cast<std::size_t>(band));
  for (int k = 1; k <= band; ++k) {
    const double kd = static_cast<double>(k);
    const double k2 = kd * kd, k4 = k2 * k2;
    const auto c0 = phi_n.coeff(k);
    const auto c1 = phi_np1.coeff(k);
    const auto cs = phi_s.coeff(k);
    std::complex<double> sk{0.0, 0.0};
    if (k <= static_cast<int>(sq.size())) sk = sq[static_cast<std::size_t>(k - 1)];
    // ((phi_x)^2)_xx at mode k contributes -k^2 S_k.
    out[static_cast<std::size_t>(k - 1)] = {
        (c1.real() - c0.real()) / h + k4 * cs.real() - k2 * sk.real(),
        (c1.imag() - c0.imag()) / h + k4 * cs.imag() - k2 * sk.imag()};
  }
  return ZeroMeanField(std::move(out));
}

/// Exact residual integral and certified L-infinity data for one interval.
inline IntervalData interval_data(const ZeroMeanField& phi_n,
                                  const ZeroMeanField& phi_np1, double t_start,
                                  double h, LinfMode mode) {
  const auto v_n = detail::dx_coeffs(phi_n);
  const auto v_1 = detail::dx_coeffs(phi_np1);
  return detail::interval_data_from(
      phi_n, phi_np1, detail::square_onesided(v_n),
      detail::bilinear_onesided(v_n, v_1), detail::square_onesided(v_1),
      t_start, h, mode, linf_bound(derivative(phi_n, 2), mode));
}

/// One IntervalData per solver step, computed with convolution reuse: the
/// square of each snapshot's derivative is built once and shared between the
/// interval it ends and the interval it starts.
inline CoefficientSeries build_series(const Trajectory& traj, LinfMode mode) {
  if (traj.snapshots.size() < 2)
    throw std::invalid_argument("build_series: need at least two snapshots");
  const double h = traj.config.dt;
  CoefficientSeries series;
  series.intervals.reserve(traj.snapshots.size() - 1);
  auto v_prev = detail::dx_coeffs(traj.snapshots.front());
  auto sq_prev = detail::square_onesided(v_prev);
  double linf_prev = linf_bound(derivative(traj.snapshots.front(), 2), mode);
  for (std::size_t n = 0; n + 1 < traj.snapshots.size(); ++n) {
    const auto& phi_n = traj.snapshots[n];
    const auto& phi_np1 = traj.snapshots[n + 1];
    auto v_next = detail::dx_coeffs(phi_np1);
    auto sq_next = detail::square_onesided(v_next);
    auto cross = detail::bilinear_onesided(v_prev, v_next);
    series.intervals.push_back(detail::interval_data_from(
        phi_n, phi_np1, sq_prev, cross, sq_next,
        static_cast<double>(n) * h, h, mode, linf_prev));
    linf_prev = series.intervals.back().phixx_linf_right;
    v_prev = std::move(v_next);
    sq_prev = std::move(sq_next);
  }
  return series;
}

/// CSV export of a coefficient series.
inline void write_series_csv(std::ostream& os, const CoefficientSeries& series) {
  os << detail::series_csv_header;
  for (const auto& iv : series.intervals) detail::append_series_row(os, iv);
}

}  // namespace sgv
