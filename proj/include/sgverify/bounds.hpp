#pragma once

// Scalar differential-inequality machinery for x' <= b x^p + a x + f with
// piecewise-constant data: Gronwall bound (b = 0), comparison-principle
// bounds of type I and II, and an adaptive Runge-Kutta oracle used only to
// validate the closed forms in tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace sgv {

inline constexpr double pos_inf = std::numeric_limits<double>::infinity();

/// Piecewise-constant coefficient data on a grid of n+1 boundaries:
/// interval i carries constant values a[i], b[i] and the integral f_int[i]
/// of the forcing over the interval.
struct OdeCoefficients {
  double p = 5.0;              // superlinear exponent, > 1
  std::vector<double> grid;    // n+1 strictly increasing boundaries
  std::vector<double> a;       // linear coefficient value per interval
  std::vector<double> b;       // superlinear coefficient value per interval, >= 0
  std::vector<double> f_int;   // forcing integral per interval, >= 0

  std::size_t n_intervals() const { return a.size(); }

  void validate() const {
    if (!(p > 1.0)) throw std::invalid_argument("OdeCoefficients: p must be > 1");
    if (grid.size() < 2 || grid.size() != a.size() + 1)
      throw std::invalid_argument("OdeCoefficients: grid/interval size mismatch");
    if (b.size() != a.size() || f_int.size() != a.size())
      throw std::invalid_argument("OdeCoefficients: coefficient size mismatch");
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
      if (!(grid[i] < grid[i + 1]))
        throw std::invalid_argument("OdeCoefficients: grid must be strictly increasing");
    for (std::size_t i = 0; i < a.size(); ++i)
      if (b[i] < 0.0 || f_int[i] < 0.0)
        throw std::invalid_argument("OdeCoefficients: b and f must be nonnegative");
  }
};

/// Bound values on a time grid; valid_until is the first time the bound is
/// infinite or a method threshold is violated (+inf when neither occurs).
struct BoundSeries {
  std::vector<double> times;
  std::vector<double> values;
  double valid_until = pos_inf;
};

namespace detail {

// em(y) = (e^y - 1)/y, continuously extended by em(0) = 1.
inline double em(double y) { return y == 0.0 ? 1.0 : std::expm1(y) / y; }

// Advances the Gronwall recurrence across one interval of width dt with
// linear coefficient a and forcing integral f_int:
//   x -> e^{a dt} x + f_int * em(a dt).
inline double gronwall_advance(double x, double a, double f_int, double dt) {
  return std::exp(a * dt) * x + f_int * em(a * dt);
}

// Accumulated state of the CP-Type II substitution: A = integral of a,
// F = integral of e^{-A} f, B = integral of b e^{(p-1)A}.
struct Cp2State {
  double A = 0.0;
  double F = 0.0;
  double B = 0.0;
};

inline void cp2_advance(Cp2State& st, double a, double b, double f_int,
                        double dt, double p) {
  st.F += f_int * std::exp(-st.A) * em(-a * dt);
  st.B += b * dt * std::exp((p - 1.0) * st.A) * em((p - 1.0) * a * dt);
  st.A += a * dt;
}

// CP-Type II bound value for the accumulated state and start value x0;
// +inf once the brace is nonpositive (blowup of the majorant).
inline double cp2_value(const Cp2State& st, double x0, double p) {
  const double xf = x0 + st.F;
  const double brace = 1.0 - (p - 1.0) * std::pow(xf, p - 1.0) * st.B;
  if (brace <= 0.0) return pos_inf;
  return std::exp(st.A) * xf * std::pow(brace, -1.0 / (p - 1.0));
}

// Locates t in the coefficient grid; returns the number of whole intervals
// before t and the width of the partial interval (0 when t is a boundary).
struct GridPos {
  std::size_t whole;
  double partial;
};

inline GridPos locate(const OdeCoefficients& co, double t) {
  if (!(t >= co.grid.front()) || !(t <= co.grid.back()))
    throw std::domain_error("time outside the coefficient grid");
  std::size_t i = 0;
  while (i < co.n_intervals() && co.grid[i + 1] <= t) ++i;
  return {i, t - co.grid[i]};
}

}  // namespace detail

/// Gronwall bound for x' <= a x + f (requires b identically zero):
///   e^{A(t)} x0 + integral_0^t e^{A(t)-A(s)} f(s) ds,
/// with closed-form integration per interval.
inline double gronwall(double x0, const OdeCoefficients& co, double t) {
  co.validate();
  for (double bi : co.b)
    if (bi != 0.0)
      throw std::invalid_argument("gronwall: b must be identically zero");
  const auto pos = detail::locate(co, t);
  double x = x0;
  for (std::size_t i = 0; i < pos.whole; ++i)
    x = detail::gronwall_advance(x, co.a[i], co.f_int[i],
                                 co.grid[i + 1] - co.grid[i]);
  if (pos.partial > 0.0) {
    const std::size_t i = pos.whole;
    const double width = co.grid[i + 1] - co.grid[i];
    x = detail::gronwall_advance(x, co.a[i],
                                 co.f_int[i] * (pos.partial / width),
                                 pos.partial);
  }
  return x;
}

/// CP-Type I bound for x' <= c x^p + e with integrals c_int, e_int up to the
/// target time:
///   (x0 + e_int) * {1 - (p-1) (x0 + e_int)^{p-1} c_int}^{-1/(p-1)},
/// +inf once the brace is nonpositive.
inline double cp_type1(double x0, double c_int, double e_int, double p) {
  if (!(p > 1.0)) throw std::invalid_argument("cp_type1: p must be > 1");
  if (x0 < 0.0 || c_int < 0.0 || e_int < 0.0)
    throw std::invalid_argument("cp_type1: arguments must be nonnegative");
  const double xe = x0 + e_int;
  const double brace = 1.0 - (p - 1.0) * std::pow(xe, p - 1.0) * c_int;
  if (brace <= 0.0) return pos_inf;
  return xe * std::pow(brace, -1.0 / (p - 1.0));
}

/// CP-Type II bound for x' <= b x^p + a x + f via the substitution that
/// removes the linear term (b~ = b e^{(p-1)A}, f~ = e^{-A} f):
///   e^{A(t)} (x0 + F) * {1 - (p-1) (x0 + F)^{p-1} B}^{-1/(p-1)}.
inline double cp_type2(double x0, const OdeCoefficients& co, double t) {
  co.validate();
  if (x0 < 0.0) throw std::invalid_argument("cp_type2: x0 must be >= 0");
  const auto pos = detail::locate(co, t);
  detail::Cp2State st;
  for (std::size_t i = 0; i < pos.whole; ++i)
    detail::cp2_advance(st, co.a[i], co.b[i], co.f_int[i],
                        co.grid[i + 1] - co.grid[i], co.p);
  if (pos.partial > 0.0) {
    const std::size_t i = pos.whole;
    const double width = co.grid[i + 1] - co.grid[i];
    detail::cp2_advance(st, co.a[i], co.b[i],
                        co.f_int[i] * (pos.partial / width), pos.partial,
                        co.p);
  }
  return detail::cp2_value(st, x0, co.p);
}

/// Reference solution of the equality ODE x' = b x^p + a x + f by an
/// adaptive Dormand-Prince 5(4) integrator, recorded at every coefficient
/// grid boundary up to t_end.  Blowup (x > 1e12, or step-size underflow) is
/// reported via valid_until with +inf values from there on.  Test oracle
/// only; never used in verification verdicts.
inline BoundSeries ode_oracle(double x0, const OdeCoefficients& co,
                              double t_end) {
  co.validate();
  if (x0 < 0.0) throw std::invalid_argument("ode_oracle: x0 must be >= 0");
  constexpr double atol = 1e-13, rtol = 1e-10, blowup_cap = 1e12;

  BoundSeries out;
  out.times.push_back(co.grid.front());
  out.values.push_back(x0);

  double x = x0;
  bool blown = false;
  for (std::size_t i = 0; i < co.n_intervals() && co.grid[i] < t_end; ++i) {
    const double left = co.grid[i];
    const double right = std::min(co.grid[i + 1], t_end);
    const double width = co.grid[i + 1] - co.grid[i];
    const double a = co.a[i], b = co.b[i], p = co.p;
    const double f = co.f_int[i] / width;  // forcing density on this interval
    auto rhs = [&](double y) { return b * std::pow(y, p) + a * y + f; };

    double t = left;
    if (!blown) {
      double dt = (right - left) / 16.0;
      long long iterations = 0;
      while (right - t > 1e-14 * std::max(1.0, std::abs(right))) {
        if (++iterations > 20'000'000) {  // safety net, practically unreachable
          blown = true;
          out.valid_until = std::min(out.valid_until, t);
          break;
        }
        const double step_dt = std::min(dt, right - t);
        // Dormand-Prince 5(4) embedded pair.
        const double k1 = rhs(x);
        const double k2 = rhs(x + step_dt * (k1 / 5.0));
        const double k3 =
            rhs(x + step_dt * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2));
        const double k4 = rhs(x + step_dt * (44.0 / 45.0 * k1 -
                                             56.0 / 15.0 * k2 + 32.0 / 9.0 * k3));
        const double k5 =
            rhs(x + step_dt * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 +
                               64448.0 / 6561.0 * k3 - 212.0 / 729.0 * k4));
        const double k6 =
            rhs(x + step_dt * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2 +
                               46732.0 / 5247.0 * k3 + 49.0 / 176.0 * k4 -
                               5103.0 / 18656.0 * k5));
        const double x5 =
            x + step_dt * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 +
                           125.0 / 192.0 * k4 - 2187.0 / 6784.0 * k5 +
                           11.0 / 84.0 * k6);
        const double k7 = rhs(x5);
        const double x4 =
            x + step_dt * (5179.0 / 57600.0 * k1 + 7571.0 / 16695.0 * k3 +
                           393.0 / 640.0 * k4 - 92097.0 / 339200.0 * k5 +
                           187.0 / 2100.0 * k6 + 1.0 / 40.0 * k7);
        const double scale = atol + rtol * std::max(std::abs(x), std::abs(x5));
        const double err = std::abs(x5 - x4) / scale;
        const bool finite = std::isfinite(x5) && std::isfinite(err);
        if (finite && err <= 1.0) {  // accepted
          t += step_dt;
          x = x5;
          if (x > blowup_cap) {
            blown = true;
            out.valid_until = std::min(out.valid_until, t);
            break;
          }
        }
        // Nonfinite trial steps are ordinary rejections: shrink and retry.
        const double factor =
            finite ? std::clamp(err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0,
                                0.2, 5.0)
                   : 0.2;
        dt = step_dt * factor;
        if (dt < 1e-14 * std::max(1.0, std::abs(t))) {  // step-size underflow
          blown = true;
          out.valid_until = std::min(out.valid_until, t);
          break;
        }
      }
    }
    out.times.push_back(right);
    out.values.push_back(blown ? pos_inf : x);
    if (right == t_end && co.grid[i + 1] > t_end) break;
  }
  return out;
}

}  // namespace sgv
