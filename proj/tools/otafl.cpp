// Copyright 2026 The otafl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line driver: otafl <mse|robustness|fl|bounds|timing> [options]

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "otafl/config.hpp"
#include "otafl/errors.hpp"
#include "otafl/harness.hpp"

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::string out;
  std::optional<std::size_t> workers;
  bool full_grid = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "Experiment config file (key = value)");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--trials", o.trials, "Monte Carlo trials per cell");
  cmd->add_option("--out", o.out, "Output CSV path (stdout when omitted)");
  cmd->add_option("--workers", o.workers, "Worker threads (0 = all cores)");
  cmd->add_flag("--full-grid", o.full_grid, "Add the large antenna counts to the grid");
}

otafl::ExperimentConfig resolve(const Options& o, otafl::ExperimentKind kind,
                                std::vector<otafl::ExperimentKind> allowed) {
  otafl::ExperimentConfig cfg =
      o.config_path.empty() ? otafl::default_config(kind) : otafl::load_config(o.config_path, kind);
  if (std::find(allowed.begin(), allowed.end(), cfg.kind) == allowed.end()) {
    throw otafl::ConfigError("config kind '" + otafl::to_string(cfg.kind) + "' does not match this subcommand");
  }
  if (o.seed) cfg.master_seed = *o.seed;
  if (o.trials) cfg.trials = *o.trials;
  if (o.workers) cfg.workers = *o.workers;
  if (!o.out.empty()) cfg.output_path = o.out;
  cfg.validate();
  return cfg;
}

void emit(const otafl::ExperimentConfig& cfg, const std::vector<otafl::RunRecord>& rows) {
  if (cfg.output_path.empty()) {
    otafl::write_csv(std::cout, rows);
  } else {
    otafl::write_csv_file(cfg.output_path, rows);
    std::cerr << "wrote " << rows.size() << " rows to " << cfg.output_path << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  using otafl::ExperimentKind;
  CLI::App app{"Over-the-air federated learning simulator"};
  app.require_subcommand(1);
  Options o;
  auto* mse = app.add_subcommand("mse", "MSE-versus-SNR sweep with CRLBs");
  auto* robustness = app.add_subcommand("robustness", "Correlated channels and imperfect CSI");
  auto* fl = app.add_subcommand("fl", "Federated training runs");
  auto* bounds = app.add_subcommand("bounds", "Convergence constants and bound values");
  auto* timing = app.add_subcommand("timing", "Aggregation CPU time");
  for (auto* cmd : {mse, robustness, fl, bounds, timing}) add_common(cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (mse->parsed()) {
      auto cfg = resolve(o, ExperimentKind::mse_sweep, {ExperimentKind::mse_sweep});
      emit(cfg, otafl::run_mse_sweep(cfg, o.full_grid));
    } else if (robustness->parsed()) {
      auto cfg = resolve(o, ExperimentKind::robustness_correlation,
                         {ExperimentKind::robustness_correlation, ExperimentKind::robustness_imperfect_csi});
      emit(cfg, otafl::run_robustness(cfg));
    } else if (fl->parsed()) {
      auto cfg = resolve(o, ExperimentKind::fl_run, {ExperimentKind::fl_run});
      emit(cfg, otafl::run_fl_experiment(cfg));
    } else if (bounds->parsed()) {
      auto cfg = resolve(o, ExperimentKind::bounds_eval, {ExperimentKind::bounds_eval});
      emit(cfg, otafl::evaluate_bounds(cfg));
    } else if (timing->parsed()) {
      auto cfg = resolve(o, ExperimentKind::timing, {ExperimentKind::timing});
      emit(cfg, otafl::run_timing(cfg, o.full_grid));
    }
  } catch (const otafl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const otafl::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const otafl::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
