// Command-line front end: run one experiment, run a table of experiments, or
// turn a finished run directory into plot-ready CSV panels.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "sgverify/harness.hpp"

namespace {

struct ModeFlags {
  std::optional<std::string> linf;
  std::optional<std::string> kstar;
  std::optional<std::string> tstar;
};

void add_mode_flags(CLI::App* cmd, ModeFlags& flags) {
  cmd->add_option("--linf", flags.linf, "L-inf evaluation: grid or coeff")
      ->check(CLI::IsMember({"grid", "coeff"}));
  cmd->add_option("--kstar", flags.kstar,
                  "method-1 threshold constant: paper or strict")
      ->check(CLI::IsMember({"paper", "strict"}));
  cmd->add_option("--tstar", flags.tstar,
                  "t* convention: theorem or table")
      ->check(CLI::IsMember({"theorem", "table"}));
}

void print_verdicts(const sgv::Report& report) {
  std::printf("t* = %.6g, %lld steps, horizon %.6g, wall %.1fs\n",
              report.t_star_value, report.steps, *report.config.t_end,
              report.wall_seconds);
  for (const auto& v : report.verdicts) {
    std::printf("  %s: ", v.method().c_str());
    if (v.smallness_time())
      std::printf("smallness at t = %.6g; ", *v.smallness_time());
    else
      std::printf("no smallness; ");
    if (std::isfinite(v.valid_until()))
      std::printf("valid until t = %.6g; ", v.valid_until());
    else
      std::printf("valid on the whole horizon; ");
    std::printf("time criterion %s; %s\n",
                v.time_criterion_met() ? "met" : "not met",
                v.globally_regular() ? "GLOBALLY REGULAR" : "undecided");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"surface growth verification toolkit"};
  app.require_subcommand(1);

  // --- run ---
  auto* run_cmd = app.add_subcommand("run", "run one experiment config");
  std::string run_config;
  run_cmd->add_option("config", run_config, "experiment config file")
      ->required();
  bool run_long = false;
  run_cmd->add_flag("--long", run_long, "allow runs above the step cutoff");
  std::string run_out;
  run_cmd->add_option("--out", run_out, "override the output directory");
  ModeFlags run_modes;
  add_mode_flags(run_cmd, run_modes);

  // --- table ---
  auto* table_cmd =
      app.add_subcommand("table", "run a row file of experiment configs");
  std::string table_rows;
  table_cmd->add_option("rowfile", table_rows, "row file: one config per line")
      ->required();
  bool table_long = false;
  table_cmd->add_flag("--long", table_long, "allow runs above the step cutoff");
  std::string table_out = "sgverify_table";
  table_cmd->add_option("--out", table_out, "output root directory");
  ModeFlags table_modes;
  add_mode_flags(table_cmd, table_modes);

  // --- series ---
  auto* series_cmd = app.add_subcommand(
      "series", "emit plot-ready panel CSVs from a finished run directory");
  std::string series_dir;
  series_cmd->add_option("run_dir", series_dir, "finished run directory")
      ->required();
  std::string series_out;
  series_cmd->add_option("--out", series_out,
                         "panel output directory (default: run_dir/panels)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      sgv::ExperimentConfig cfg = sgv::load_config(run_config);
      if (run_modes.linf) cfg.linf_mode = sgv::parse_linf_mode(*run_modes.linf);
      if (run_modes.kstar)
        cfg.kstar_mode = sgv::parse_kstar_mode(*run_modes.kstar);
      if (run_modes.tstar)
        cfg.t_star_mode = sgv::parse_tstar_mode(*run_modes.tstar);
      if (!run_out.empty()) cfg.output_dir = run_out;
      sgv::RunOptions opts;
      opts.allow_long = run_long;
      const sgv::Report report = sgv::run_experiment(cfg, opts);
      std::printf("wrote %s\n",
                  (std::filesystem::path(cfg.output_dir) / "summary.json")
                      .string()
                      .c_str());
      print_verdicts(report);
    } else if (*table_cmd) {
      sgv::TableOptions opts;
      opts.allow_long = table_long;
      opts.output_root = table_out;
      if (table_modes.linf)
        opts.linf_override = sgv::parse_linf_mode(*table_modes.linf);
      if (table_modes.kstar)
        opts.kstar_override = sgv::parse_kstar_mode(*table_modes.kstar);
      if (table_modes.tstar)
        opts.tstar_override = sgv::parse_tstar_mode(*table_modes.tstar);
      const auto rows = sgv::run_table(table_rows, opts);
      std::filesystem::create_directories(opts.output_root);
      const auto csv_path =
          std::filesystem::path(opts.output_root) / "table.csv";
      std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
      if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
      sgv::write_table_csv(csv, rows);
      std::printf("wrote %s\n\n%s", csv_path.string().c_str(),
                  sgv::render_table(rows).c_str());
      for (const auto& row : rows)
        if (!row.error.empty())
          std::fprintf(stderr, "row %s failed: %s\n", row.config_path.c_str(),
                       row.error.c_str());
    } else if (*series_cmd) {
      const std::string out =
          series_out.empty()
              ? (std::filesystem::path(series_dir) / "panels").string()
              : series_out;
      const auto written = sgv::emit_series_bundle(series_dir, out);
      for (const auto& name : written)
        std::printf("wrote %s\n",
                    (std::filesystem::path(out) / name).string().c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
