// Acceptance harness for the verification toolkit.  Ten end-to-end criteria
// cover the reference runs, residual scaling, the comparison-method algebra,
// and the solver/spectral invariants.  One PASS/FAIL line is printed per
// criterion with measured values on indented info lines; the exit code is
// the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "sgverify/harness.hpp"

namespace fs = std::filesystem;

namespace {

int g_failed = 0;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void info(const std::string& s) {
  std::cout << "  " << s << "\n" << std::flush;
}

void record(int id, bool ok, const std::string& what) {
  std::cout << (ok ? "PASS" : "FAIL") << ": criterion " << id << " - " << what
            << "\n"
            << std::flush;
  if (!ok) ++g_failed;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

sgv::ExperimentConfig base_config(const std::string& datum, double dt,
                                  double t_end, const std::string& out) {
  sgv::ExperimentConfig cfg;
  cfg.initial_data_text = datum;
  cfg.initial_data = sgv::parse_initial_datum(datum);
  cfg.n_modes = 128;
  cfg.dt = dt;
  cfg.t_end = t_end;
  cfg.output_dir = out;
  return cfg;
}

// Uniform-width series with constant residual density and constant
// ||phi_xx||_inf, cells [i*h, (i+1)*h).
sgv::CoefficientSeries flat_series(int n, double width, double res_int,
                                   double phixx_density) {
  sgv::CoefficientSeries s;
  s.intervals.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    sgv::IntervalData iv;
    iv.t_start = static_cast<double>(i) * width;
    iv.t_end = static_cast<double>(i + 1) * width;
    iv.res_hm1_sq_integral = res_int;
    iv.phixx_linf_sq_integral = phixx_density * width;
    iv.phixx_linf_left = std::sqrt(phixx_density);
    iv.phixx_linf_right = std::sqrt(phixx_density);
    s.intervals.push_back(iv);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Criterion 1: reference decaying run.  sin(x), N = 128, dt = 1e-5 up to
// t = 1.8.  Methods 2 and 3 must certify smallness in [1.10, 1.25]; the
// method-1 bound must cross its validity threshold inside [1.2, 1.8].
// ---------------------------------------------------------------------------
void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  auto cfg = base_config("sin(x)", 1e-5, 1.8, "acceptance_scratch/c1");
  const auto rep = sgv::run_experiment(cfg);
  const double wall = seconds_since(t0);

  const auto& m1 = rep.verdicts.at(0);
  const auto& m2 = rep.verdicts.at(1);
  const auto& m3 = rep.verdicts.at(2);

  const auto small_in_window = [](const sgv::Verdict& v) {
    return v.smallness_time().has_value() && *v.smallness_time() >= 1.10 &&
           *v.smallness_time() <= 1.25;
  };
  const bool ok2 = small_in_window(m2);
  const bool ok3 = small_in_window(m3);
  const double hit = m1.valid_until();
  const bool ok1 = std::isfinite(hit) && hit >= 1.2 && hit <= 1.8 &&
                   (!m1.smallness_time() || hit < *m1.smallness_time());

  for (const auto* v : {&m2, &m3})
    info("method " + v->method().substr(1) + " smallness at t = " +
         (v->smallness_time() ? num(*v->smallness_time()) : "none") +
         ", globally regular: " + (v->globally_regular() ? "yes" : "no"));
  if (!ok1) {
    // Pull the method-1 bound trace back in to report what happened instead.
    const auto rows =
        sgv::detail::read_csv("acceptance_scratch/c1/bound_m1.csv",
                              sgv::detail::bound_csv_header);
    double max_sqrt_bound = 0.0;
    for (const auto& r : rows)
      if (r[0] >= 1.2 && r[0] <= 1.8)
        max_sqrt_bound = std::max(max_sqrt_bound, std::sqrt(r[1]));
    info("method 1 never crosses its validity threshold " +
         num(sgv::kstar_threshold(sgv::KstarMode::paper)) +
         ": max sqrt(bound) on [1.2, 1.8] is " + num(max_sqrt_bound) +
         ", valid_until = " + num(hit) +
         (m1.smallness_time()
              ? ", and the run reaches smallness at t = " +
                    num(*m1.smallness_time()) + " while still valid"
              : ""));
    info("the crossing time is exponentially sensitive to the residual "
         "magnitude, so a dt-sized residual cannot reach the threshold");
  }
  info("wall time " + num(wall) + " s");
  record(1, ok1 && ok2 && ok3 && wall <= 600.0,
         "sin(x) run: methods 2/3 certify smallness in [1.10, 1.25] and the "
         "method-1 bound crosses its threshold in [1.2, 1.8]");
}

// ---------------------------------------------------------------------------
// Criterion 2: growing run.  2 sin(x), dt = 1e-6 up to t = 0.3.  Methods 2
// and 3 must lose validity (bound blow-up) in [0.10, 0.18] and no global
// regularity may be claimed.
// ---------------------------------------------------------------------------
void criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  auto cfg = base_config("2sin(x)", 1e-6, 0.3, "acceptance_scratch/c2");
  cfg.methods = {"m2", "m3"};
  const auto rep = sgv::run_experiment(cfg);
  const double wall = seconds_since(t0);

  bool ok = true;
  for (const auto& v : rep.verdicts) {
    const double vu = v.valid_until();
    info("method " + v.method().substr(1) + " valid until t = " + num(vu) +
         ", globally regular: " + (v.globally_regular() ? "yes" : "no"));
    ok = ok && std::isfinite(vu) && vu >= 0.10 && vu <= 0.18 &&
         !v.globally_regular();
  }
  info("wall time " + num(wall) + " s");
  record(2, ok && wall <= 900.0,
         "2sin(x) run: method 2/3 bounds blow up in [0.10, 0.18] and no "
         "regularity is claimed");
}

// ---------------------------------------------------------------------------
// Criterion 3: fast-decaying run.  sin(2x), dt = 1e-6 up to t = 0.2.
// Methods 2 and 3 must certify smallness in [0.10, 0.15], which yields
// global regularity through the smallness route.
// ---------------------------------------------------------------------------
void criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  auto cfg = base_config("sin(2x)", 1e-6, 0.2, "acceptance_scratch/c3");
  cfg.methods = {"m2", "m3"};
  const auto rep = sgv::run_experiment(cfg);
  const double wall = seconds_since(t0);

  bool ok = true;
  for (const auto& v : rep.verdicts) {
    const bool in_window = v.smallness_time().has_value() &&
                           *v.smallness_time() >= 0.10 &&
                           *v.smallness_time() <= 0.15;
    info("method " + v.method().substr(1) + " smallness at t = " +
         (v.smallness_time() ? num(*v.smallness_time()) : "none") +
         ", globally regular: " + (v.globally_regular() ? "yes" : "no"));
    ok = ok && in_window && v.globally_regular();
  }
  info("wall time " + num(wall) + " s");
  record(3, ok,
         "sin(2x) run: methods 2/3 certify smallness in [0.10, 0.15] and "
         "conclude global regularity");
}

// ---------------------------------------------------------------------------
// Criterion 4: first-order residual scaling.  The accumulated squared
// residual over t <= 0.1 must drop by about 100x when dt drops 10x, i.e.
// sqrt(total_coarse / total_fine) in [7, 13].
// ---------------------------------------------------------------------------
void criterion4() {
  auto coarse = base_config("sin(x)", 1e-5, 0.1, "acceptance_scratch/c4a");
  auto fine = base_config("sin(x)", 1e-6, 0.1, "acceptance_scratch/c4b");
  coarse.methods = {"m2"};
  fine.methods = {"m2"};
  const auto rep_coarse = sgv::run_experiment(coarse);
  const auto rep_fine = sgv::run_experiment(fine);
  const double ratio =
      std::sqrt(rep_coarse.res_hm1_sq_total / rep_fine.res_hm1_sq_total);
  info("residual totals: " + num(rep_coarse.res_hm1_sq_total) +
       " (dt=1e-5) vs " + num(rep_fine.res_hm1_sq_total) +
       " (dt=1e-6), sqrt ratio " + num(ratio));
  record(4, ratio >= 7.0 && ratio <= 13.0,
         "residual integral scales first order in dt (sqrt ratio in [7, 13])");
}

// ---------------------------------------------------------------------------
// Criterion 5: a single restart cell spanning the whole series must
// reproduce the unrestarted method exactly, including blown-up runs.
// ---------------------------------------------------------------------------
void criterion5() {
  std::mt19937 rng(777001u);
  auto uni = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  int blowups = 0;
  bool ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    const bool hard = trial % 3 == 0;  // force some bound blow-ups
    const int n = 2 + static_cast<int>(uni(0.0, 28.9));
    sgv::CoefficientSeries s;
    double t = 0.0;
    for (int i = 0; i < n; ++i) {
      sgv::IntervalData iv;
      const double w = uni(0.01, 0.05);
      const double phixx = uni(0.0, hard ? 4.0 : 1.0);
      iv.t_start = t;
      iv.t_end = t + w;
      iv.res_hm1_sq_integral = (hard ? 0.05 : uni(0.0, 1e-3)) * w;
      iv.phixx_linf_sq_integral = phixx * w;
      iv.phixx_linf_left = std::sqrt(phixx);
      iv.phixx_linf_right = std::sqrt(phixx);
      s.intervals.push_back(iv);
      t = iv.t_end;
    }
    const double d0_sq = trial % 2 == 0 ? 0.0 : uni(0.0, 1e-4);
    const auto m2 = sgv::method2(d0_sq, s);
    const auto m3 = sgv::method3(d0_sq, s, static_cast<std::size_t>(n));
    const bool same =
        m3.times.size() == 2 && m3.times[0] == m2.times.front() &&
        m3.times[1] == m2.times.back() &&
        m3.values[0] == m2.values.front() &&
        m3.values[1] == m2.values.back() &&
        std::isfinite(m3.valid_until) == std::isfinite(m2.valid_until);
    ok = ok && same;
    if (!std::isfinite(m2.values.back())) ++blowups;
  }
  info(num(blowups) + " of 20 series blew up; endpoint values identical in "
                      "all trials: " +
       (ok ? "yes" : "no"));
  record(5, ok && blowups >= 3,
         "single-cell restarted bound equals the unrestarted bound bitwise "
         "on 20 random series");
}

// ---------------------------------------------------------------------------
// Criterion 6: domination.  A high-accuracy solution of the comparison ODE
// never exceeds the closed-form bound wherever the bound is finite, and
// finer restarts never blow up earlier.
// ---------------------------------------------------------------------------
void criterion6() {
  std::mt19937 rng(777002u);
  auto uni = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  long finite_compared = 0;
  bool ok = true;
  for (int set = 0; set < 50; ++set) {
    sgv::OdeCoefficients co;
    co.p = 5.0;
    co.grid.push_back(0.0);
    const int n = 1 + static_cast<int>(uni(0.0, 11.9));
    for (int i = 0; i < n; ++i) {
      const double w = uni(0.02, 0.3);
      co.grid.push_back(co.grid.back() + w);
      co.a.push_back(uni(-1.0, 1.0));
      co.b.push_back(uni(0.0, 5.0));
      co.f_int.push_back(uni(0.0, 0.05) * w);
    }
    const double x0 = uni(0.0, 0.1);
    const auto oracle = sgv::ode_oracle(x0, co, co.grid.back());
    for (std::size_t i = 0; i < oracle.times.size(); ++i) {
      const double bound = sgv::cp_type2(x0, co, oracle.times[i]);
      if (!std::isfinite(bound)) continue;
      ++finite_compared;
      if (!(oracle.values[i] <= bound + 1e-8)) ok = false;
    }
  }
  info(num(static_cast<double>(finite_compared)) +
       " finite bound values compared against the ODE solution");

  // Restart granularity ordering on data hard enough to blow method 2 up.
  const auto s = flat_series(200, 0.01, 5e-4, 1.0);
  const auto m2 = sgv::method2(0.0, s);
  const auto m3_stride5 = sgv::method3(0.0, s, 5);
  const auto m3_stride1 = sgv::method3(0.0, s, 1);
  info("blow-up times: no restart " + num(m2.valid_until) +
       ", stride 5 " + num(m3_stride5.valid_until) + ", stride 1 " +
       num(m3_stride1.valid_until));
  // Restarting tightens the fold, so the reported blow-up time can only
  // move later.  Strides are not compared with each other: valid_until is
  // quantized up to each stride's own reporting grid, so a coarser stride
  // may legitimately report a later time than a finer one.
  const bool ordering = std::isfinite(m2.valid_until) &&
                        m2.valid_until <= m3_stride5.valid_until &&
                        m2.valid_until <= m3_stride1.valid_until;

  record(6, ok && finite_compared >= 100 && ordering,
         "ODE solutions stay below the closed-form bounds (50 random "
         "coefficient sets) and restarts never blow up earlier than the "
         "unrestarted bound");
}

// ---------------------------------------------------------------------------
// Criterion 7: convergence.  On a constant-coefficient series, the
// stride-1 restarted bound converges first order (in the cell width) to the
// true ODE solution: relative error monotone in h and below 5% at h = 1e-4.
// ---------------------------------------------------------------------------
void criterion7() {
  const double phixx_density = 1.25 / 9.0;  // linear coefficient becomes 1.0
  const double res_density = 0.02;
  const double a_const = -0.25 + 9.0 * phixx_density;

  auto make_co = [&](int n) {
    sgv::OdeCoefficients co;
    co.p = 5.0;
    const double h = 1.0 / n;
    co.grid.push_back(0.0);
    for (int i = 0; i < n; ++i) {
      co.grid.push_back(static_cast<double>(i + 1) * h);
      co.a.push_back(a_const);
      co.b.push_back(sgv::constants.K);
      co.f_int.push_back(res_density * h);
    }
    return co;
  };

  // Reference: the same ODE integrated on a fine grid with per-cell
  // Runge-Kutta substeps; far more accurate than the 5% target.
  const double ref = sgv::ode_oracle(0.0, make_co(1000), 1.0).values.back();

  std::vector<double> errs;
  for (const int n : {100, 1000, 10000}) {
    const double h = 1.0 / n;
    const auto s = flat_series(n, h, res_density * h, phixx_density);
    const double got = sgv::method3(0.0, s, 1).values.back();
    errs.push_back(std::abs(got - ref) / ref);
    info("h = " + num(h) + ": bound " + num(got) + ", relative error " +
         num(errs.back()));
  }
  info("reference value x(1) = " + num(ref));
  const bool ok = std::isfinite(ref) && ref > 0.0 && errs[0] > errs[1] &&
                  errs[1] > errs[2] && errs[2] <= 0.05;
  record(7, ok,
         "stride-1 restarted bound converges monotonically to the ODE "
         "solution, within 5% at h = 1e-4");
}

// ---------------------------------------------------------------------------
// Criterion 8: closed forms.  Linear comparison solutions, the superlinear
// closed form, and its blow-up boundary, all to 1e-12.
// ---------------------------------------------------------------------------
void criterion8() {
  double worst = 0.0;
  auto check = [&](double got, double want) {
    worst = std::max(worst, std::abs(got - want) / std::abs(want));
  };

  {
    // Linear ODE x' = 0.7 x + 0.3 on [0, 2], x(0) = 0.2.
    sgv::OdeCoefficients co;
    co.grid = {0.0, 2.0};
    co.a = {0.7};
    co.b = {0.0};
    co.f_int = {0.6};
    for (const double t : {1.3, 2.0})
      check(sgv::gronwall(0.2, co, t),
            0.2 * std::exp(0.7 * t) + 0.3 * std::expm1(0.7 * t) / 0.7);
  }
  // Superlinear closed form with zero forcing.
  check(sgv::cp_type1(0.5, 0.1, 0.0, 5.0), 0.5 * std::pow(0.975, -0.25));
  {
    // Constant-coefficient quintic with linear decay: independent formula.
    sgv::OdeCoefficients co;
    co.p = 5.0;
    co.grid = {0.0, 1.0};
    co.a = {-0.25};
    co.b = {sgv::constants.K};
    co.f_int = {0.0};
    const double x0 = 0.01;
    const double B =
        sgv::constants.K * std::expm1(4.0 * -0.25 * 1.0) / (4.0 * -0.25);
    const double want =
        std::exp(-0.25) * x0 *
        std::pow(1.0 - 4.0 * B * std::pow(x0, 4.0), -0.25);
    check(sgv::cp_type2(x0, co, 1.0), want);
    info("constant-coefficient quintic value " + num(want));
  }

  // Blow-up boundary: pole of (1 - (p-1) c x0^(p-1))^(-1/(p-1)).
  bool boundary_ok = true;
  for (const double p : {2.0, 5.0}) {
    const double x0 = 0.5;
    const double c_star = 1.0 / ((p - 1.0) * std::pow(x0, p - 1.0));
    boundary_ok = boundary_ok &&
                  std::isfinite(sgv::cp_type1(x0, c_star * (1.0 - 1e-12),
                                              0.0, p)) &&
                  std::isinf(sgv::cp_type1(x0, c_star * (1.0 + 1e-12),
                                           0.0, p));
  }

  info("worst relative closed-form error " + num(worst));
  record(8, worst <= 1e-12 && boundary_ok,
         "closed-form bound values match independent formulas to 1e-12 and "
         "the blow-up boundary is exact");
}

// ---------------------------------------------------------------------------
// Criterion 9: solver invariants.  Zero mean by construction, monotone L2
// on a decaying run, and the exact geometric decay of the linear update.
// ---------------------------------------------------------------------------
void criterion9() {
  const auto datum = sgv::parse_initial_datum("sin(x) + 1/2 sin(2x)");
  const auto traj = sgv::simulate(sgv::SolverConfig{32, 1e-4, 0.05}, datum);

  bool l2_monotone = true;
  for (std::size_t i = 0; i + 1 < traj.snapshots.size(); ++i)
    if (sgv::hp_norm(traj.snapshots[i + 1], 0) >
        sgv::hp_norm(traj.snapshots[i], 0) * (1.0 + 1e-12))
      l2_monotone = false;

  const auto grid = sgv::grid_values(traj.snapshots.back(), 256);
  double mean = 0.0, peak = 0.0;
  for (const double v : grid) {
    mean += v;
    peak = std::max(peak, std::abs(v));
  }
  mean /= static_cast<double>(grid.size());
  const bool zero_mean = std::abs(mean) <= 1e-13 * (1.0 + peak);

  auto f = sgv::to_field(sgv::parse_initial_datum("1/2 sin(3x)"));
  const double h = 1e-3;
  for (int n = 0; n < 100; ++n) f = sgv::linear_step(f, h);
  const double want = 0.25 / std::pow(1.0 + 81.0 * h, 100.0);
  const double decay_err =
      std::abs(std::abs(f.coeff(3)) - want) / want;
  const bool decay_ok = decay_err <= 1e-12 && f.coeff(3).real() == 0.0;

  info("final grid mean " + num(mean) + ", linear decay relative error " +
       num(decay_err));
  record(9, l2_monotone && zero_mean && decay_ok,
         "solver invariants: zero mean, monotone L2 over 500 steps, exact "
         "linear decay rate");
}

// ---------------------------------------------------------------------------
// Criterion 10: spectral identities on 200 random fields: Parseval against
// grid quadrature, the interpolation (Agmon) inequality, Poincare, the
// coefficient envelope, and the nonlinear term against a grid-space oracle.
// ---------------------------------------------------------------------------
void criterion10() {
  std::mt19937 rng(777003u);
  auto uni = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  bool parseval_ok = true, agmon_ok = true, poincare_ok = true,
       envelope_ok = true, nonlinear_ok = true;
  double worst_nl = 0.0;

  for (int trial = 0; trial < 200; ++trial) {
    const int band = 1 + static_cast<int>(uni(0.0, 31.9));
    const double scale = std::exp(uni(std::log(0.05), std::log(2.0)));
    std::vector<std::complex<double>> coeffs;
    for (int k = 1; k <= band; ++k)
      coeffs.emplace_back(scale * uni(-1.0, 1.0), scale * uni(-1.0, 1.0));
    const sgv::ZeroMeanField f(std::move(coeffs));

    const int m = 8 * band;
    const auto g = sgv::grid_values(f, m);
    double sum_sq = 0.0;
    for (const double v : g) sum_sq += v * v;
    const double parseval_grid = sgv::two_pi / m * sum_sq;
    const double parseval_coeff = std::pow(sgv::hp_norm(f, 0), 2.0);
    if (std::abs(parseval_grid - parseval_coeff) >
        1e-10 * std::max(1.0, parseval_coeff))
      parseval_ok = false;

    const double h0 = sgv::hp_norm(f, 0);
    const double h1 = sgv::hp_norm(f, 1);
    const double linf_grid = sgv::linf_bound(f, sgv::LinfMode::grid);
    const double linf_coeff = sgv::linf_bound(f, sgv::LinfMode::coeff);
    if (linf_grid > std::sqrt(h0 * h1) * (1.0 + 1e-8)) agmon_ok = false;
    if (h0 > h1 * (1.0 + 1e-12)) poincare_ok = false;
    if (linf_grid > linf_coeff * (1.0 + 1e-12)) envelope_ok = false;

    // Nonlinear term against a direct grid-space computation: sample the
    // derivative, square pointwise, transform back, apply the symbol k^2.
    const auto nl = sgv::nonlinear_term(f);
    const auto fx = sgv::grid_values(sgv::derivative(f, 1), m);
    double gmax = 0.0;
    std::vector<double> fx_sq(fx.size());
    for (std::size_t j = 0; j < fx.size(); ++j) {
      fx_sq[j] = fx[j] * fx[j];
      gmax = std::max(gmax, fx_sq[j]);
    }
    for (int k = 1; k <= 2 * band; ++k) {
      std::complex<double> acc = 0.0;
      for (int j = 0; j < m; ++j)
        acc += fx_sq[static_cast<std::size_t>(j)] *
               std::polar(1.0, -sgv::two_pi * k * j / m);
      acc /= static_cast<double>(m);
      const double dev = std::abs(nl.coeff(k) -
                                  static_cast<double>(k) * k * acc) /
                         std::max(1.0, gmax);
      worst_nl = std::max(worst_nl, dev);
      if (dev > 1e-10) nonlinear_ok = false;
    }
  }
  info("worst normalized nonlinear-term deviation " + num(worst_nl));
  record(10,
         parseval_ok && agmon_ok && poincare_ok && envelope_ok && nonlinear_ok,
         "spectral identities hold on 200 random fields (Parseval, Agmon, "
         "Poincare, coefficient envelope, nonlinear term vs grid oracle)");
}

}  // namespace

int main() {
  fs::remove_all("acceptance_scratch");
  std::cout << "acceptance criteria for the surface-growth verification "
               "toolkit\n"
            << std::flush;
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  std::cout << "acceptance: " << (10 - g_failed) << "/10 criteria passed";
  if (g_failed > 0) std::cout << ", " << g_failed << " failed";
  std::cout << "\n";
  return g_failed;
}
