#pragma once

// Semi-implicit Euler spectral Galerkin integrator for
// u_t = -u_xxxx - (u_x^2)_xx producing the approximation trajectory phi(t_n).

#include <cmath>
#include <complex>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgverify/spectral.hpp"

namespace sgv {

struct SolverConfig {
  int n_modes = 0;    // Galerkin cutoff N (highest retained wavenumber)
  double dt = 0.0;    // time step h
  double t_end = 0.0; // simulation horizon T

  /// Number of steps T/h (nearest integer; T is expected to be an integer
  /// multiple of h up to rounding).
  long long n_steps() const {
    if (dt <= 0.0) throw std::invalid_argument("SolverConfig: dt must be > 0");
    const double raw = t_end / dt;
    if (!(raw >= 0.5) || raw > 9.0e15)
      throw std::invalid_argument("SolverConfig: t_end/dt out of range");
    return std::llround(raw);
  }

  void validate() const {
    if (n_modes < 2) throw std::invalid_argument("SolverConfig: n_modes must be >= 2");
    if (!(dt > 0.0)) throw std::invalid_argument("SolverConfig: dt must be > 0");
    if (!(t_end >= dt)) throw std::invalid_argument("SolverConfig: t_end must be >= dt");
    (void)n_steps();
  }
};

enum class Waveform { sine, cosine };

struct DatumTerm {
  Waveform kind = Waveform::sine;
  int wavenumber = 1;
  double amplitude = 0.0;
};

/// Initial condition as a finite trigonometric sum, e.g. sin(x) + 1/2 sin(2x).
struct InitialDatum {
  std::vector<DatumTerm> terms;

  int max_wavenumber() const {
    int m = 0;
    for (const auto& t : terms) m = std::max(m, t.wavenumber);
    return m;
  }
};

/// Coefficient representation of the datum: amplitude a on sin(kx) adds
/// -i a/2 to mode k, on cos(kx) adds a/2.
inline ZeroMeanField to_field(const InitialDatum& u0) {
  const int band = u0.max_wavenumber();
  std::vector<std::complex<double>> c(static_cast<std::size_t>(band));
  for (const auto& term : u0.terms) {
    if (term.wavenumber < 1)
      throw std::invalid_argument("InitialDatum: wavenumbers must be >= 1");
    auto& slot = c[static_cast<std::size_t>(term.wavenumber - 1)];
    if (term.kind == Waveform::sine)
      slot += std::complex<double>(0.0, -0.5 * term.amplitude);
    else
      slot += std::complex<double>(0.5 * term.amplitude, 0.0);
  }
  return ZeroMeanField(std::move(c));
}

struct Trajectory {
  SolverConfig config;
  std::vector<ZeroMeanField> snapshots;  // snapshot n is phi(n * dt)
};

namespace detail {

// One semi-implicit Euler step, given sq = one-sided coefficients of
// (phi_x)^2 (band 2*phi.band()).  Shared between step() and the streaming
// pipeline so both produce bit-identical trajectories.
inline ZeroMeanField step_from_square(const ZeroMeanField& phi, const cvec& sq,
                                      double h, int n_modes) {
  const int out_band = std::min(n_modes, 2 * phi.band());
  std::vector<std::complex<double>> out(static_cast<std::size_t>(out_band));
  for (int k = 1; k <= out_band; ++k) {
    const double kd = static_cast<double>(k);
    const double k2 = kd * kd, k4 = k2 * k2;
    // N_k(phi) = -((phi_x)^2)_xx at mode k = +k^2 * sq_k
    double nr = 0.0, ni = 0.0;
    if (k <= static_cast<int>(sq.size())) {
      nr = k2 * sq[static_cast<std::size_t>(k - 1)].real();
      ni = k2 * sq[static_cast<std::size_t>(k - 1)].imag();
    }
    const auto c = phi.coeff(k);
    const double denom = 1.0 + h * k4;
    out[static_cast<std::size_t>(k - 1)] = {(c.real() + h * nr) / denom,
                                            (c.imag() + h * ni) / denom};
  }
  return ZeroMeanField(std::move(out));
}

inline bool all_finite(const ZeroMeanField& f) {
  for (const auto& c : f.coeffs())
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
  return true;
}

}  // namespace detail

/// One semi-implicit Euler step: implicit in -d^4/dx^4, explicit in the
/// nonlinearity, mode-wise
///   phi_k^{n+1} = (phi_k^n + h N_k(phi^n)) / (1 + h k^4),
/// with N(phi) = -((phi_x)^2)_xx computed exactly then truncated to n_modes.
inline ZeroMeanField step(const ZeroMeanField& phi, double h, int n_modes) {
  if (phi.band() > n_modes)
    throw std::invalid_argument("step: phi bandwidth exceeds n_modes");
  if (phi.band() == 0) return phi;
  return detail::step_from_square(
      phi, detail::square_onesided(detail::dx_coeffs(phi)), h, n_modes);
}

/// Linear part only (nonlinearity disabled): exact mode-wise decay
/// phi_k -> phi_k / (1 + h k^4).  Used for scheme diagnostics.
inline ZeroMeanField linear_step(const ZeroMeanField& phi, double h) {
  std::vector<std::complex<double>> out(phi.coeffs());
  for (int k = 1; k <= phi.band(); ++k) {
    const double kd = static_cast<double>(k);
    out[static_cast<std::size_t>(k - 1)] /= (1.0 + h * kd * kd * kd * kd);
  }
  return ZeroMeanField(std::move(out));
}

/// Full trajectory from the initial datum.  Deterministic: identical inputs
/// give bit-identical snapshots.  Rejects data with wavenumbers above the
/// Galerkin cutoff (projection would silently change the initial error).
inline Trajectory simulate(const SolverConfig& cfg, const InitialDatum& u0) {
  cfg.validate();
  if (u0.max_wavenumber() > cfg.n_modes)
    throw std::invalid_argument(
        "simulate: initial datum contains wavenumber " +
        std::to_string(u0.max_wavenumber()) + " above n_modes " +
        std::to_string(cfg.n_modes));
  const long long steps = cfg.n_steps();
  Trajectory traj;
  traj.config = cfg;
  traj.snapshots.reserve(static_cast<std::size_t>(steps) + 1);
  traj.snapshots.push_back(to_field(u0));
  for (long long n = 0; n < steps; ++n) {
    traj.snapshots.push_back(step(traj.snapshots.back(), cfg.dt, cfg.n_modes));
    if (!detail::all_finite(traj.snapshots.back()))
      throw std::runtime_error("simulate: nonfinite field at t = " +
                               std::to_string(static_cast<double>(n + 1) * cfg.dt));
  }
  return traj;
}

/// Binary trajectory export: a stream of little-endian 64-bit floats.
/// Layout: header (N, h, count) — all three as doubles, h being the spacing
/// of the *written* snapshots (stride * dt) — then per snapshot
/// (Re c_1, Im c_1, ..., Re c_N, Im c_N), zero-padded up to N.
inline void write_trajectory(std::ostream& os, const Trajectory& traj,
                             long long stride = 1) {
  if (stride < 1) throw std::invalid_argument("write_trajectory: stride >= 1");
  const int n = traj.config.n_modes;
  const long long count =
      (static_cast<long long>(traj.snapshots.size()) + stride - 1) / stride;
  auto put = [&os](double v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(double));
  };
  put(static_cast<double>(n));
  put(traj.config.dt * static_cast<double>(stride));
  put(static_cast<double>(count));
  for (long long i = 0; i < static_cast<long long>(traj.snapshots.size());
       i += stride) {
    const auto& f = traj.snapshots[static_cast<std::size_t>(i)];
    for (int k = 1; k <= n; ++k) {
      const auto c = f.coeff(k);
      put(c.real());
      put(c.imag());
    }
  }
}

/// Inverse of write_trajectory (dt in the result is the written spacing).
inline Trajectory read_trajectory(std::istream& is) {
  auto get = [&is]() {
    double v = 0.0;
    is.read(reinterpret_cast<char*>(&v), sizeof(double));
    if (!is) throw std::runtime_error("read_trajectory: truncated stream");
    return v;
  };
  const int n = static_cast<int>(get());
  const double h = get();
  const long long count = static_cast<long long>(get());
  if (n < 1 || count < 1 || !(h > 0.0))
    throw std::runtime_error("read_trajectory: malformed header");
  Trajectory traj;
  traj.config.n_modes = n;
  traj.config.dt = h;
  traj.config.t_end = h * static_cast<double>(count - 1);
  traj.snapshots.reserve(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) {
    std::vector<std::complex<double>> c(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const double re = get(), im = get();
      c[static_cast<std::size_t>(k)] = {re, im};
    }
    traj.snapshots.emplace_back(std::move(c));
  }
  return traj;
}

}  // namespace sgv
