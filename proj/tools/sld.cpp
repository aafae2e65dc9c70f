// Copyright (c) 2026 SLD toolkit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: pretrain teachers, distill students under the
// swapped-logit loss stack, run the ablation grids and produce analysis
// tables. Exit codes: 0 success, 1 runtime failure, 2 config/usage error.

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <string>

#include "sld/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"swapped logit distillation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_override;
  std::string preset = "components";
  std::string run_dir;
  int jobs = 1;

  auto* train_cmd = app.add_subcommand("train-teacher", "pretrain a teacher with cross-entropy");
  train_cmd->add_option("-c,--config", config_path, "run config (TOML)")->required();
  train_cmd->add_option("-o,--output", output_override, "override run.output_dir");

  auto* distill_cmd = app.add_subcommand("distill", "distill a student from a teacher checkpoint");
  distill_cmd->add_option("-c,--config", config_path, "run config (TOML)")->required();
  distill_cmd->add_option("-o,--output", output_override, "override run.output_dir");

  auto* ablate_cmd = app.add_subcommand("ablate", "run an ablation grid preset");
  ablate_cmd->add_option("-c,--config", config_path, "run config (TOML)")->required();
  ablate_cmd->add_option("--preset", preset, "components | schemes | multiswap | conditional");
  ablate_cmd->add_option("--jobs", jobs, "parallel cell runs");
  ablate_cmd->add_option("-o,--output", output_override, "override run.output_dir");

  auto* analyze_cmd = app.add_subcommand("analyze", "emit metric tables for a finished run");
  analyze_cmd->add_option("run_dir", run_dir, "distill run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message / help text
    return e.get_exit_code() == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*analyze_cmd) {
      const auto result = sld::run_analyze(run_dir);
      std::cout << "analysis written to " << result.dir.string() << "\n";
      return kExitOk;
    }

    sld::run_config cfg = sld::load_run_config(config_path);
    if (!output_override.empty()) cfg.output_dir = output_override;

    if (*train_cmd) {
      const auto result = sld::run_train_teacher(cfg);
      std::cout << "teacher checkpoint: " << result.checkpoint_path.string() << "\n"
                << "report: " << result.report_path.string() << "\n"
                << "final train top-1: " << sld::csv_num(result.report.final_train_top1)
                << ", val top-1: " << sld::csv_num(result.report.final_val_top1) << "\n";
    } else if (*distill_cmd) {
      const auto result = sld::run_distill(cfg);
      std::cout << "distill run: " << result.dir.string() << "\n"
                << "mean final val top-1: " << sld::csv_num(result.mean_final_val_top1)
                << " (stddev " << sld::csv_num(result.stddev_final_val_top1) << " over "
                << result.final_val_top1.size() << " seeds)\n";
    } else if (*ablate_cmd) {
      const auto result = sld::run_ablate(cfg, preset, jobs);
      std::cout << "ablation grid: " << result.dir.string() << "\n";
      for (std::size_t i = 0; i < result.cell_names.size(); ++i)
        std::cout << "  " << result.cell_names[i] << ": mean final val top-1 "
                  << sld::csv_num(result.cells[i].mean_final_val_top1) << "\n";
    }
    return kExitOk;
  } catch (const sld::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
