#pragma once

// Experiment runner: configuration files, the streaming run pipeline
// (simulate -> residual series -> method bounds -> verdicts, with incremental
// CSV output and O(1) memory), the result-table runner and the plot-data
// bundle emitter.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "sgverify/bounds.hpp"
#include "sgverify/evolve.hpp"
#include "sgverify/residual.hpp"
#include "sgverify/spectral.hpp"
#include "sgverify/verify.hpp"

namespace sgv {

/// Runs needing more steps than this are refused unless explicitly allowed
/// (CLI flag --long).
inline constexpr long long long_run_step_cutoff = 2'000'000;

// ---------------------------------------------------------------------------
// Initial datum expressions
// ---------------------------------------------------------------------------

/// Parses expressions like "sin(x)", "2sin(x)", "sin(x)+1/2 sin(2x)",
/// "3/2 cos(x)-1/2 sin(2x)+1/3 cos(3x)".  "0" denotes the zero datum.
/// Coefficients may be decimals or fractions; whitespace is ignored.
inline InitialDatum parse_initial_datum(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  InitialDatum datum;
  if (s.empty())
    throw std::invalid_argument("initial datum: empty expression");
  if (s == "0") return datum;

  std::size_t i = 0;
  auto fail = [&](const std::string& msg) {
    throw std::invalid_argument("initial datum '" + text + "': " + msg +
                                " (near offset " + std::to_string(i) + ")");
  };
  auto digit = [&](std::size_t j) {
    return j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]));
  };
  auto parse_number = [&]() {
    const std::size_t start = i;
    while (digit(i) || (i < s.size() && s[i] == '.')) ++i;
    if (i == start) fail("expected a number");
    std::size_t used = 0;
    const double v = std::stod(s.substr(start, i - start), &used);
    if (used != i - start) fail("malformed number");
    return v;
  };

  while (i < s.size()) {
    double sign = 1.0;
    if (s[i] == '+' || s[i] == '-') {
      sign = (s[i] == '-') ? -1.0 : 1.0;
      ++i;
    }
    double coeff = 1.0;
    if (digit(i) || (i < s.size() && s[i] == '.')) {
      coeff = parse_number();
      if (i < s.size() && s[i] == '/') {
        ++i;
        const double den = parse_number();
        if (den == 0.0) fail("zero denominator");
        coeff /= den;
      }
      if (i < s.size() && s[i] == '*') ++i;
    }
    Waveform kind = Waveform::sine;
    if (s.compare(i, 4, "sin(") == 0) {
      kind = Waveform::sine;
      i += 4;
    } else if (s.compare(i, 4, "cos(") == 0) {
      kind = Waveform::cosine;
      i += 4;
    } else {
      fail("expected sin(...) or cos(...)");
    }
    long long k = 1;
    if (digit(i)) {
      const std::size_t start = i;
      while (digit(i)) ++i;
      k = std::stoll(s.substr(start, i - start));
      if (i < s.size() && s[i] == '*') ++i;
    }
    if (i >= s.size() || s[i] != 'x') fail("expected x");
    ++i;
    if (i >= s.size() || s[i] != ')') fail("expected )");
    ++i;
    if (k < 1 || k > 1'000'000) fail("wavenumber out of range");
    datum.terms.push_back(
        {kind, static_cast<int>(k), sign * coeff});
  }
  for (std::size_t a = 0; a < datum.terms.size(); ++a)
    for (std::size_t b = a + 1; b < datum.terms.size(); ++b)
      if (datum.terms[a].kind == datum.terms[b].kind &&
          datum.terms[a].wavenumber == datum.terms[b].wavenumber)
        throw std::invalid_argument("initial datum '" + text +
                                    "': duplicate term for wavenumber " +
                                    std::to_string(datum.terms[a].wavenumber));
  return datum;
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

inline std::string to_string(LinfMode m) {
  return m == LinfMode::grid ? "grid" : "coeff";
}
inline std::string to_string(KstarMode m) {
  return m == KstarMode::paper ? "paper" : "strict";
}
inline std::string to_string(TstarMode m) {
  return m == TstarMode::theorem ? "theorem" : "table";
}

inline LinfMode parse_linf_mode(const std::string& s) {
  if (s == "grid") return LinfMode::grid;
  if (s == "coeff") return LinfMode::coeff;
  throw std::invalid_argument("linf_mode must be 'grid' or 'coeff', got '" +
                              s + "'");
}
inline KstarMode parse_kstar_mode(const std::string& s) {
  if (s == "paper") return KstarMode::paper;
  if (s == "strict") return KstarMode::strict;
  throw std::invalid_argument("kstar_mode must be 'paper' or 'strict', got '" +
                              s + "'");
}
inline TstarMode parse_tstar_mode(const std::string& s) {
  if (s == "theorem") return TstarMode::theorem;
  if (s == "table") return TstarMode::table_compat;
  throw std::invalid_argument(
      "t_star_mode must be 'theorem' or 'table', got '" + s + "'");
}

struct ExperimentConfig {
  std::string initial_data_text = "0";
  InitialDatum initial_data;
  int n_modes = 128;
  double dt = 1e-5;
  std::optional<double> t_end;  // default: t* rounded up to 0.1 plus 0.1
  std::vector<std::string> methods = {"m1", "m2", "m3"};
  long long restart_stride = 1;
  LinfMode linf_mode = LinfMode::grid;
  KstarMode kstar_mode = KstarMode::paper;
  TstarMode t_star_mode = TstarMode::table_compat;
  std::string output_dir = "sgverify_out";
  long long snapshot_stride = 0;  // 0 disables the binary trajectory export

  bool has_method(const std::string& m) const {
    return std::find(methods.begin(), methods.end(), m) != methods.end();
  }

  void validate() const {
    if (n_modes < 2)
      throw std::invalid_argument("config: n_modes must be >= 2");
    if (!(dt > 0.0)) throw std::invalid_argument("config: dt must be > 0");
    if (t_end && !(*t_end >= dt))
      throw std::invalid_argument("config: t_end must be >= dt");
    if (methods.empty())
      throw std::invalid_argument("config: at least one method is required");
    for (const auto& m : methods)
      if (m != "m1" && m != "m2" && m != "m3")
        throw std::invalid_argument("config: unknown method '" + m + "'");
    if (restart_stride < 1)
      throw std::invalid_argument("config: restart_stride must be >= 1");
    if (snapshot_stride < 0)
      throw std::invalid_argument("config: snapshot_stride must be >= 0");
    if (initial_data.max_wavenumber() > n_modes)
      throw std::invalid_argument(
          "config: initial datum wavenumber " +
          std::to_string(initial_data.max_wavenumber()) +
          " exceeds n_modes " + std::to_string(n_modes));
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline long long parse_ll(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing garbage");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key +
                                "' needs an integer, got '" + value + "'");
  }
}

inline double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing garbage");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key +
                                "' needs a number, got '" + value + "'");
  }
}

inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Parses the flat key=value configuration format ('#' starts a comment).
/// Unknown and duplicate keys are hard errors.
inline ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::map<std::string, bool> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (seen[key])
      throw std::invalid_argument("config: duplicate key '" + key + "'");
    seen[key] = true;
    if (key == "initial_data") {
      cfg.initial_data_text = value;
      cfg.initial_data = parse_initial_datum(value);
    } else if (key == "n_modes") {
      cfg.n_modes = static_cast<int>(detail::parse_ll(key, value));
    } else if (key == "dt") {
      cfg.dt = detail::parse_double(key, value);
    } else if (key == "t_end") {
      cfg.t_end = detail::parse_double(key, value);
    } else if (key == "methods") {
      cfg.methods.clear();
      for (auto& m : detail::split(value, ',')) {
        const auto mm = detail::trim(m);
        if (!mm.empty()) cfg.methods.push_back(mm);
      }
    } else if (key == "restart_stride") {
      cfg.restart_stride = detail::parse_ll(key, value);
    } else if (key == "linf_mode") {
      cfg.linf_mode = parse_linf_mode(value);
    } else if (key == "kstar_mode") {
      cfg.kstar_mode = parse_kstar_mode(value);
    } else if (key == "t_star_mode") {
      cfg.t_star_mode = parse_tstar_mode(value);
    } else if (key == "output_dir") {
      cfg.output_dir = value;
    } else if (key == "snapshot_stride") {
      cfg.snapshot_stride = detail::parse_ll(key, value);
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str());
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

/// Default horizon: t* in the configured mode, rounded up to one decimal,
/// plus 0.1 (and at least one step).
inline double default_t_end(double t_star_value, double dt) {
  const double rounded = std::ceil(t_star_value * 10.0) / 10.0 + 0.1;
  return std::max(rounded, dt);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct Report {
  ExperimentConfig config;  // resolved: t_end filled in
  double t_star_value = 0.0;
  long long steps = 0;
  std::vector<Verdict> verdicts;
  std::map<std::string, std::string> files;  // logical name -> relative path
  double res_hm1_sq_total = 0.0;  // sum of all interval residual integrals
  double res_hm1_rms_max = 0.0;   // max over intervals of sqrt(integral / h)
  double wall_seconds = 0.0;
};

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["initial_data"] = cfg.initial_data_text;
  j["n_modes"] = cfg.n_modes;
  j["dt"] = cfg.dt;
  j["t_end"] = cfg.t_end ? nlohmann::json(*cfg.t_end) : nlohmann::json();
  std::string ms;
  for (const auto& m : cfg.methods) ms += (ms.empty() ? "" : ",") + m;
  j["methods"] = ms;
  j["restart_stride"] = cfg.restart_stride;
  j["linf_mode"] = to_string(cfg.linf_mode);
  j["kstar_mode"] = to_string(cfg.kstar_mode);
  j["t_star_mode"] = to_string(cfg.t_star_mode);
  j["output_dir"] = cfg.output_dir;
  j["snapshot_stride"] = cfg.snapshot_stride;
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.initial_data_text = j.at("initial_data").get<std::string>();
  cfg.initial_data = parse_initial_datum(cfg.initial_data_text);
  cfg.n_modes = j.at("n_modes").get<int>();
  cfg.dt = j.at("dt").get<double>();
  if (!j.at("t_end").is_null()) cfg.t_end = j.at("t_end").get<double>();
  cfg.methods.clear();
  for (auto& m : detail::split(j.at("methods").get<std::string>(), ','))
    cfg.methods.push_back(detail::trim(m));
  cfg.restart_stride = j.at("restart_stride").get<long long>();
  cfg.linf_mode = parse_linf_mode(j.at("linf_mode").get<std::string>());
  cfg.kstar_mode = parse_kstar_mode(j.at("kstar_mode").get<std::string>());
  cfg.t_star_mode = parse_tstar_mode(j.at("t_star_mode").get<std::string>());
  cfg.output_dir = j.at("output_dir").get<std::string>();
  cfg.snapshot_stride = j.at("snapshot_stride").get<long long>();
  cfg.validate();
  return cfg;
}

inline nlohmann::json verdict_to_json(const Verdict& v) {
  nlohmann::json j;
  j["method"] = v.method();
  j["smallness_time"] = v.smallness_time() ? nlohmann::json(*v.smallness_time())
                                           : nlohmann::json();
  j["time_criterion"] = v.time_criterion_met();
  j["valid_until"] = std::isfinite(v.valid_until())
                         ? nlohmann::json(v.valid_until())
                         : nlohmann::json();  // null encodes +inf
  j["t_star"] = v.t_star();
  j["globally_regular"] = v.globally_regular();
  return j;
}

inline nlohmann::json report_to_json(const Report& r) {
  nlohmann::json j;
  j["config"] = config_to_json(r.config);
  j["t_star"] = r.t_star_value;
  j["steps"] = r.steps;
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& v : r.verdicts) summary.push_back(verdict_to_json(v));
  j["summary"] = std::move(summary);
  j["files"] = r.files;
  j["residual"] = {{"res_hm1_sq_total", r.res_hm1_sq_total},
                   {"res_hm1_rms_max", r.res_hm1_rms_max}};
  j["timings"] = {{"wall_seconds", r.wall_seconds}};
  return j;
}

// ---------------------------------------------------------------------------
// The streaming run pipeline
// ---------------------------------------------------------------------------

struct RunOptions {
  bool allow_long = false;
};

/// Runs the full pipeline for one configuration, writing series.csv,
/// bound_<method>.csv, summary.json (and optionally trajectory.bin) into
/// config.output_dir.  Streaming: per-step memory is O(n_modes), CSV rows are
/// written incrementally, and the emitted numbers are bit-identical to the
/// batch path simulate -> build_series -> method1/2/3.
inline Report run_experiment(const ExperimentConfig& cfg_in,
                             const RunOptions& opt = {}) {
  const auto t_begin = std::chrono::steady_clock::now();
  ExperimentConfig cfg = cfg_in;
  cfg.validate();

  Report report;
  report.t_star_value = t_star(cfg.initial_data, cfg.t_star_mode);
  if (!cfg.t_end) cfg.t_end = default_t_end(report.t_star_value, cfg.dt);
  SolverConfig scfg{cfg.n_modes, cfg.dt, *cfg.t_end};
  scfg.validate();
  const long long steps = scfg.n_steps();
  if (steps > long_run_step_cutoff && !opt.allow_long)
    throw std::runtime_error(
        "run needs " + std::to_string(steps) + " steps (> " +
        std::to_string(long_run_step_cutoff) +
        "); pass --long to allow long runs");
  report.config = cfg;
  report.steps = steps;

  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  auto open_out = [&](const std::string& name) {
    std::ofstream os(fs::path(cfg.output_dir) / name,
                     std::ios::binary | std::ios::trunc);
    if (!os)
      throw std::runtime_error("cannot write " +
                               (fs::path(cfg.output_dir) / name).string());
    return os;
  };

  std::ofstream series_os = open_out("series.csv");
  series_os << detail::series_csv_header;
  report.files["series"] = "series.csv";

  const double h = cfg.dt;
  const double eps0 = constants.eps0;
  const double d0_sq = 0.0;  // datum lies inside the Galerkin band exactly

  // Streaming method states; bound CSV rows are written as boundaries are
  // reached.
  std::optional<Method1Fold> m1;
  std::optional<Method2Fold> m2;
  std::optional<Method3Fold> m3;
  std::map<std::string, std::ofstream> bound_os;
  std::map<std::string, std::optional<double>> smallness;
  for (const std::string name : {"m1", "m2", "m3"}) {
    if (!cfg.has_method(name)) continue;
    bound_os[name] = open_out("bound_" + name + ".csv");
    bound_os[name] << detail::bound_csv_header;
    report.files["bound_" + name] = "bound_" + name + ".csv";
    smallness[name] = std::nullopt;
  }
  if (cfg.has_method("m1"))
    m1.emplace(d0_sq, kstar_threshold(cfg.kstar_mode));
  if (cfg.has_method("m2")) m2.emplace(d0_sq);
  if (cfg.has_method("m3")) m3.emplace(d0_sq, cfg.restart_stride);

  std::optional<std::ofstream> traj_os;
  if (cfg.snapshot_stride > 0) {
    traj_os = open_out("trajectory.bin");
    report.files["trajectory"] = "trajectory.bin";
    auto put = [&](double v) {
      traj_os->write(reinterpret_cast<const char*>(&v), sizeof(double));
    };
    put(static_cast<double>(cfg.n_modes));
    put(h * static_cast<double>(cfg.snapshot_stride));
    put(static_cast<double>(steps / cfg.snapshot_stride + 1));
  }
  auto put_snapshot = [&](const ZeroMeanField& f) {
    for (int k = 1; k <= cfg.n_modes; ++k) {
      const auto c = f.coeff(k);
      const double re = c.real(), im = c.imag();
      traj_os->write(reinterpret_cast<const char*>(&re), sizeof(double));
      traj_os->write(reinterpret_cast<const char*>(&im), sizeof(double));
    }
  };

  ZeroMeanField phi = to_field(cfg.initial_data);
  double phi_h1 = hp_norm(phi, 1);
  if (traj_os) put_snapshot(phi);

  // A bound row at a boundary; also the smallness bookkeeping.
  auto emit_bound = [&](const std::string& name, double t, double value,
                        double phi_h1_at_t, double valid_until) {
    detail::append_bound_row(bound_os[name], t, value, phi_h1_at_t,
                             t < valid_until);
    auto& small = smallness[name];
    if (!small && t < valid_until && std::isfinite(value) &&
        phi_h1_at_t + std::sqrt(value) < eps0)
      small = t;
  };
  if (m1) emit_bound("m1", 0.0, d0_sq, phi_h1, m1->valid_until());
  if (m2) emit_bound("m2", 0.0, d0_sq, phi_h1, m2->valid_until());
  if (m3) emit_bound("m3", 0.0, d0_sq, phi_h1, m3->valid_until());

  auto v_prev = detail::dx_coeffs(phi);
  auto sq_prev = detail::square_onesided(v_prev);
  double linf_prev = linf_bound(derivative(phi, 2), cfg.linf_mode);
  double t_last = 0.0;

  for (long long n = 0; n < steps; ++n) {
    const double t_n = static_cast<double>(n) * h;
    ZeroMeanField phi_next =
        detail::step_from_square(phi, sq_prev, h, cfg.n_modes);
    if (!detail::all_finite(phi_next))
      throw std::runtime_error("nonfinite field at t = " +
                               std::to_string(t_n + h));
    auto v_next = detail::dx_coeffs(phi_next);
    auto sq_next = detail::square_onesided(v_next);
    const auto cross = detail::bilinear_onesided(v_prev, v_next);
    const IntervalData iv = detail::interval_data_from(
        phi, phi_next, sq_prev, cross, sq_next, t_n, h, cfg.linf_mode,
        linf_prev);
    detail::append_series_row(series_os, iv);
    report.res_hm1_sq_total += iv.res_hm1_sq_integral;
    report.res_hm1_rms_max = std::max(
        report.res_hm1_rms_max, std::sqrt(iv.res_hm1_sq_integral / h));

    const double phi_h1_next = hp_norm(phi_next, 1);
    if (m1) {
      const double v = m1->feed(iv);  // feed before reading valid_until
      emit_bound("m1", iv.t_end, v, phi_h1_next, m1->valid_until());
    }
    if (m2) {
      const double v = m2->feed(iv);
      emit_bound("m2", iv.t_end, v, phi_h1_next, m2->valid_until());
    }
    if (m3) {
      if (auto v = m3->feed(iv))
        emit_bound("m3", iv.t_end, *v, phi_h1_next, m3->valid_until());
    }
    if (traj_os && (n + 1) % cfg.snapshot_stride == 0) put_snapshot(phi_next);

    phi = std::move(phi_next);
    phi_h1 = phi_h1_next;
    v_prev = std::move(v_next);
    sq_prev = std::move(sq_next);
    linf_prev = iv.phixx_linf_right;
    t_last = iv.t_end;
  }
  if (m3) {
    if (auto v = m3->flush(t_last))
      emit_bound("m3", t_last, *v, phi_h1, m3->valid_until());
  }

  for (const std::string name : {"m1", "m2", "m3"}) {
    if (!cfg.has_method(name)) continue;
    const double valid_until = name == "m1"   ? m1->valid_until()
                               : name == "m2" ? m2->valid_until()
                                              : m3->valid_until();
    report.verdicts.push_back(Verdict::assess(
        name, t_last, valid_until, smallness[name], report.t_star_value));
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin)
          .count();
  report.files["summary"] = "summary.json";
  std::ofstream summary_os = open_out("summary.json");
  summary_os << report_to_json(report).dump(2) << "\n";
  return report;
}

// ---------------------------------------------------------------------------
// Table runner
// ---------------------------------------------------------------------------

struct TableOptions {
  bool allow_long = false;
  std::string output_root = "sgverify_table";
  std::optional<LinfMode> linf_override;
  std::optional<KstarMode> kstar_override;
  std::optional<TstarMode> tstar_override;
};

struct TableRow {
  std::string config_path;
  std::string label;  // initial datum text
  std::optional<Report> report;
  std::string error;  // nonempty when the row failed or was skipped
};

/// Reads a row file: one experiment config path per line, relative paths
/// resolved against the row file's directory; '#' comments allowed.
inline std::vector<std::string> read_row_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open row file '" + path + "'");
  const auto base = std::filesystem::path(path).parent_path();
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    std::filesystem::path p(line);
    out.push_back(p.is_absolute() ? p.string() : (base / p).string());
  }
  return out;
}

inline TableRow run_table_row(const std::string& config_path,
                              const TableOptions& opts,
                              const std::string& row_dir) {
  TableRow row;
  row.config_path = config_path;
  try {
    ExperimentConfig cfg = load_config(config_path);
    row.label = cfg.initial_data_text;
    if (opts.linf_override) cfg.linf_mode = *opts.linf_override;
    if (opts.kstar_override) cfg.kstar_mode = *opts.kstar_override;
    if (opts.tstar_override) cfg.t_star_mode = *opts.tstar_override;
    cfg.output_dir = row_dir;
    RunOptions ro;
    ro.allow_long = opts.allow_long;
    row.report = run_experiment(cfg, ro);
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

/// Runs every row of the row file, one experiment per worker, each writing
/// into its own subdirectory of output_root.  A failing row is recorded
/// in-row and does not affect the others.
inline std::vector<TableRow> run_table(const std::string& row_file,
                                       const TableOptions& opts = {}) {
  const auto paths = read_row_file(row_file);
  std::vector<std::future<TableRow>> futures;
  futures.reserve(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const std::string row_dir =
        (std::filesystem::path(opts.output_root) /
         ("row" + std::to_string(i + 1)))
            .string();
    futures.push_back(std::async(std::launch::async, run_table_row, paths[i],
                                 opts, row_dir));
  }
  std::vector<TableRow> rows;
  rows.reserve(paths.size());
  for (auto& f : futures) rows.push_back(f.get());
  return rows;
}

namespace detail {

inline const Verdict* find_verdict(const TableRow& row,
                                   const std::string& method) {
  if (!row.report) return nullptr;
  for (const auto& v : row.report->verdicts)
    if (v.method() == method) return &v;
  return nullptr;
}

// Smallness cell: the smallness time, or empty when not met / not run.
inline std::string smallness_cell(const TableRow& row,
                                  const std::string& method) {
  const Verdict* v = find_verdict(row, method);
  if (!v || !v->smallness_time()) return "";
  return fmt_g17(*v->smallness_time());
}

// Time cell: "ok" when the time criterion is met, else the time validity
// ended (threshold hit / blowup), else empty (not run, or the horizon was
// too short to decide).
inline std::string time_cell(const TableRow& row, const std::string& method) {
  const Verdict* v = find_verdict(row, method);
  if (!v) return "";
  if (v->time_criterion_met()) return "ok";
  if (std::isfinite(v->valid_until())) return fmt_g17(v->valid_until());
  return "";
}

}  // namespace detail

/// Machine-readable table mirroring the reference layout: one row per
/// experiment, smallness and time-criterion columns per method.
inline void write_table_csv(std::ostream& os,
                            const std::vector<TableRow>& rows) {
  os << "u0,t_star,n_modes,dt,m1_smallness,m2_smallness,m3_smallness,"
        "m1_time,m2_time,m3_time,error\n";
  for (const auto& row : rows) {
    if (row.report) {
      const auto& r = *row.report;
      os << row.label << "," << detail::fmt_g17(r.t_star_value) << ","
         << r.config.n_modes << "," << detail::fmt_g17(r.config.dt);
    } else {
      os << row.label << ",,,";
    }
    for (const std::string m : {"m1", "m2", "m3"})
      os << "," << detail::smallness_cell(row, m);
    for (const std::string m : {"m1", "m2", "m3"})
      os << "," << detail::time_cell(row, m);
    std::string err = row.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << "," << err << "\n";
  }
}

/// Human-readable rendering of the same table.
inline std::string render_table(const std::vector<TableRow>& rows) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return std::string(buf);
  };
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"u0", "T*", "N", "h", "M1 small", "M2 small", "M3 small",
                   "M1 time", "M2 time", "M3 time"});
  for (const auto& row : rows) {
    std::vector<std::string> c;
    if (!row.report) {
      c = {row.label.empty() ? row.config_path : row.label,
           "ERROR: " + row.error};
      c.resize(10, "");
      cells.push_back(std::move(c));
      continue;
    }
    const auto& r = *row.report;
    c.push_back(row.label);
    c.push_back(num(r.t_star_value));
    c.push_back(std::to_string(r.config.n_modes));
    c.push_back(num(r.config.dt));
    for (const std::string m : {"m1", "m2", "m3"}) {
      const Verdict* v = detail::find_verdict(row, m);
      c.push_back(v && v->smallness_time() ? num(*v->smallness_time()) : "--");
    }
    for (const std::string m : {"m1", "m2", "m3"}) {
      const Verdict* v = detail::find_verdict(row, m);
      if (!v)
        c.push_back("--");
      else if (v->time_criterion_met())
        c.push_back("ok");
      else if (std::isfinite(v->valid_until()))
        c.push_back(num(v->valid_until()));
      else
        c.push_back("?");
    }
    cells.push_back(std::move(c));
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& row : cells)
    for (std::size_t i = 0; i < row.size() && i < width.size(); ++i)
      width[i] = std::max(width[i], row[i].size());
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size() && i < width.size(); ++i) {
      out += row[i];
      if (i + 1 < width.size())
        out += std::string(width[i] - row[i].size() + 2, ' ');
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plot-data bundle
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::vector<double>> read_csv(
    const std::string& path, const std::string& expected_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing run artifact '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line) != trim(expected_header))
    throw std::runtime_error("unexpected header in '" + path + "'");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& cell : split(line, ','))
      row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Keeps at most `limit` rows: every ceil(n/limit)-th row plus the last.
inline std::vector<std::size_t> downsample_indices(std::size_t n,
                                                   std::size_t limit) {
  std::vector<std::size_t> idx;
  if (n == 0) return idx;
  const std::size_t stride = (n + limit - 1) / limit;
  for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
  if (idx.back() != n - 1) idx.push_back(n - 1);
  return idx;
}

}  // namespace detail

/// Turns a completed run directory into plot-ready per-panel CSVs
/// (downsampled to at most 10^4 rows each): residual trace, ||phi_xx||_inf
/// trace, and per method the bound with the smallness band
/// phi_h1 -+ sqrt(bound).
inline std::vector<std::string> emit_series_bundle(const std::string& run_dir,
                                                   const std::string& out_dir) {
  namespace fs = std::filesystem;
  constexpr std::size_t limit = 10000;
  const auto series =
      detail::read_csv((fs::path(run_dir) / "series.csv").string(),
                       detail::series_csv_header);
  if (series.empty())
    throw std::runtime_error("series.csv in '" + run_dir + "' has no rows");
  fs::create_directories(out_dir);
  std::vector<std::string> written;

  auto open_panel = [&](const std::string& name) {
    std::ofstream os(fs::path(out_dir) / name,
                     std::ios::binary | std::ios::trunc);
    if (!os)
      throw std::runtime_error("cannot write " +
                               (fs::path(out_dir) / name).string());
    written.push_back(name);
    return os;
  };

  {
    std::ofstream os = open_panel("panel_residual.csv");
    os << "t,res_hm1\n";
    for (std::size_t i : detail::downsample_indices(series.size(), limit)) {
      const auto& r = series[i];
      const double width = r[1] - r[0];
      os << detail::fmt_g17(r[1]) << ","
         << detail::fmt_g17(std::sqrt(r[2] / width)) << "\n";
    }
  }
  {
    std::ofstream os = open_panel("panel_phixx.csv");
    os << "t,phixx_linf\n";
    os << detail::fmt_g17(series.front()[0]) << ","
       << detail::fmt_g17(series.front()[4]) << "\n";
    for (std::size_t i : detail::downsample_indices(series.size(), limit))
      os << detail::fmt_g17(series[i][1]) << ","
         << detail::fmt_g17(series[i][5]) << "\n";
  }

  bool any_bound = false;
  for (const std::string m : {"m1", "m2", "m3"}) {
    const auto path = fs::path(run_dir) / ("bound_" + m + ".csv");
    if (!fs::exists(path)) continue;
    any_bound = true;
    const auto rows =
        detail::read_csv(path.string(), detail::bound_csv_header);
    std::ofstream os = open_panel("panel_bound_" + m + ".csv");
    os << "t,bound_sq,bound,phi_h1,small_lo,small_hi,valid\n";
    for (std::size_t i : detail::downsample_indices(rows.size(), limit)) {
      const auto& r = rows[i];
      const double bound = std::sqrt(r[1]);
      os << detail::fmt_g17(r[0]) << "," << detail::fmt_g17(r[1]) << ","
         << detail::fmt_g17(bound) << "," << detail::fmt_g17(r[2]) << ","
         << detail::fmt_g17(r[2] - bound) << ","
         << detail::fmt_g17(r[2] + bound) << ","
         << static_cast<int>(r[3]) << "\n";
    }
  }
  if (!any_bound)
    throw std::runtime_error("no bound_*.csv files in '" + run_dir + "'");
  return written;
}

}  // namespace sgv
