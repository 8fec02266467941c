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

#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "otafl/bounds.hpp"
#include "otafl/config.hpp"
#include "otafl/fl_engine.hpp"

namespace otafl {

/// One CSV row. Non-finite values are written as "unbounded".
struct RunRecord {
  std::string experiment;
  std::string scheme;
  std::size_t M = 0;
  std::size_t K = 0;
  double snr_db = 0.0;
  std::string metric;
  double value = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::string noise_convention;
  std::string csi_mode;
};

inline constexpr const char* kCsvHeader =
    "experiment,scheme,M,K,snr_db,metric,value,trials,seed,noise_convention,csi_mode";

/// Shortest round-trip decimal form.
std::string format_double(double v);
void write_csv(std::ostream& out, std::span<const RunRecord> records);
/// Throws ConfigError naming the path when the file cannot be written.
void write_csv_file(const std::filesystem::path& path, std::span<const RunRecord> records);

/// 0 means hardware concurrency.
std::size_t resolve_workers(std::size_t requested);

/// Calls f(i) for i in [0, n) on up to `workers` threads. If any call
/// throws, the exception of the lowest index is rethrown.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& f);

struct McStat {
  double mean = 0.0;
  /// Standard error of the mean.
  double se = 0.0;
};

/// Pairwise-summed mean and standard error.
McStat summarize(std::span<const double> samples);

struct CellSpec {
  std::size_t M = 64;
  std::size_t K = 4;
  double snr_db = 10.0;
  NoiseConvention noise = NoiseConvention::unscaled;
  bool noiseless = false;
  ChannelKind channel = ChannelKind::iid_rayleigh;
  double rho = 0.0;
  EstimationMode estimation = EstimationMode::perfect();
  std::size_t slots = 16;
  std::size_t trials = 2000;
  std::uint64_t seed = 1;
  std::size_t workers = 0;
  std::vector<UplinkScheme> uplink{UplinkScheme::random_orthogonalization, UplinkScheme::enhanced};
  std::vector<DownlinkScheme> downlink{DownlinkScheme::random_orthogonalization, DownlinkScheme::enhanced};
  MmseForm mmse_form = MmseForm::gram;

  /// Stream index of the cell. Depends on (M, K, snr_db) only, so cells
  /// that differ in correlation or CSI quality see the same draws.
  std::uint64_t stream() const;
  std::string describe() const;
};

struct SchemeCellResult {
  std::string scheme;
  McStat mse;
  /// Matched bound: 1^T F^-1 1 for uplink aggregates, per-client downlink CRLB.
  McStat crlb;
  /// Per-trial mse - crlb.
  McStat gap;
  /// trace(F^-1) for uplink schemes.
  McStat crlb_trace;
  McStat gap_trace;
  bool unbounded = false;
};

struct CellResult {
  CellSpec spec;
  std::vector<SchemeCellResult> schemes;
  /// Random orthogonalization uplink only.
  std::optional<double> sinr_mc;
  double sinr_formula = 0.0;
  /// E||(1/K) p - (1/K) sum x||^2 on the complex projection p, and the closed form.
  std::optional<McStat> lemma3_mc;
  std::optional<McStat> lemma3_formula;

  const SchemeCellResult& at(const std::string& scheme) const;
};

std::string uplink_label(UplinkScheme s);
std::string downlink_label(DownlinkScheme s);

/// Paired Monte Carlo over one (M, K, snr) cell. Throws NumericError
/// naming the cell on numeric failure.
CellResult run_mse_cell(const CellSpec& spec);

std::vector<RunRecord> run_mse_sweep(const ExperimentConfig& cfg, bool full_grid = false);
std::vector<RunRecord> run_robustness(const ExperimentConfig& cfg);

struct TimingResult {
  std::size_t M = 0;
  std::size_t K = 0;
  double ro_s = 0.0;
  double enhanced_s = 0.0;
  double mmse_s = 0.0;
  double mmse_gram_s = 0.0;

  double ratio() const { return ro_s / mmse_s; }
};

/// Wall-clock of the server-side aggregation kernels over `trials`
/// repetitions on fixed inputs. `mmse_s` uses `form`.
TimingResult time_aggregation(std::size_t M, std::size_t K, std::size_t slots, std::size_t trials,
                              double snr_db, std::uint64_t seed, MmseForm form = MmseForm::covariance);

std::vector<RunRecord> run_timing(const ExperimentConfig& cfg, bool full_grid = false);

std::vector<RunRecord> evaluate_bounds(const ExperimentConfig& cfg);

struct FlRun {
  FlSchemePair pair;
  std::size_t M = 0;
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  FlState state;
  /// max over clients of ||grad f_k(w)||^2 at the global models of the run.
  double max_grad_sq = 0.0;
};

/// Convergence envelope for the iid quadratic task.
struct EnvelopeInfo {
  ConvergenceParams params;
  double f_star = 0.0;
  /// Per M: B and the bound for rounds 1..T.
  std::map<std::size_t, double> B;
  std::map<std::size_t, std::vector<double>> rhs;
};

struct FlSuiteResult {
  std::vector<FlRun> runs;
  std::optional<EnvelopeInfo> envelope;

  /// Mean over repetitions of the final test accuracy.
  double mean_final_accuracy(const FlSchemePair& pair, std::size_t M) const;
  /// Mean over repetitions of f(w_t) - f*, one entry per round.
  std::vector<double> mean_gap(const FlSchemePair& pair, std::size_t M) const;
};

FlSuiteResult run_fl_suite(const ExperimentConfig& cfg);
std::vector<RunRecord> fl_records(const ExperimentConfig& cfg, const FlSuiteResult& suite);
std::vector<RunRecord> run_fl_experiment(const ExperimentConfig& cfg);

}  // namespace otafl
