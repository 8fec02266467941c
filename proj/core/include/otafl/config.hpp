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
#include <filesystem>
#include <string>
#include <vector>

#include "otafl/channel.hpp"
#include "otafl/fl_engine.hpp"
#include "otafl/loss.hpp"
#include "otafl/phy.hpp"

namespace otafl {

enum class ExperimentKind {
  mse_sweep,
  robustness_correlation,
  robustness_imperfect_csi,
  fl_run,
  bounds_eval,
  timing,
};

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

enum class FlTask { synthetic, quadratic_iid, matrix_file, mnist };

std::string to_string(FlTask task);

/// One uplink/downlink pairing of an FL run.
struct FlSchemePair {
  UplinkScheme uplink = UplinkScheme::ideal;
  DownlinkScheme downlink = DownlinkScheme::ideal;

  std::string label() const;
  bool operator==(const FlSchemePair&) const = default;
};

/// Parses "uplink/downlink", e.g. "ro/ideal".
FlSchemePair parse_scheme_pair(const std::string& text);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::mse_sweep;
  std::vector<UplinkScheme> uplink_schemes{UplinkScheme::random_orthogonalization, UplinkScheme::enhanced,
                                           UplinkScheme::mmse_full_csi};
  std::vector<DownlinkScheme> downlink_schemes{DownlinkScheme::random_orthogonalization,
                                               DownlinkScheme::enhanced};
  std::vector<std::size_t> M{64, 256};
  std::vector<std::size_t> full_grid_M{512, 1024};
  std::vector<std::size_t> K{8};
  std::vector<double> snr_db{0.0, 4.0, 8.0, 12.0, 16.0, 20.0};
  std::size_t trials = 2000;
  std::uint64_t master_seed = 1;
  std::string output_path;
  std::size_t workers = 0;
  NoiseConvention noise_convention = NoiseConvention::unscaled;
  std::size_t slots = 16;

  ChannelKind correlation = ChannelKind::antenna_correlated;
  std::vector<double> rho{0.01, 0.05};
  std::vector<double> pilot_snr_db{20.0};
  EchoNoise echo_noise = EchoNoise::estimate_level;
  MmseForm mmse_form = MmseForm::covariance;

  // fl_run
  FlTask task = FlTask::synthetic;
  std::vector<FlSchemePair> fl_schemes;
  std::size_t N = 20;
  std::size_t rounds = 200;
  std::size_t local_steps = 5;
  std::size_t batch_size = 50;
  std::size_t repetitions = 5;
  std::size_t eval_every = 10;
  double mu = 1.0;
  double gamma_shift = 0.0;
  LossKind loss = LossKind::logistic_l2;
  double lambda = 1e-3;
  double smoothing = 1.0;
  double ul_snr_db = 10.0;
  double dl_snr_db = 10.0;
  PowerSchedule power_schedule = PowerSchedule::theorem1_scaling;
  double initial_snr_db = 0.0;
  PayloadNormalization normalization = PayloadNormalization::per_round_unit_power;
  std::size_t dim = 784;
  std::size_t train_samples = 10000;
  std::size_t test_samples = 2000;
  double label_noise = 0.3;
  double noise_std = 0.5;
  std::string data_path;
  std::string test_path;
  std::string mnist_images;
  std::string mnist_labels;

  // bounds_eval
  std::size_t E = 1;
  std::size_t d = 16;
  double L = 1.0;
  double Gamma = 0.0;
  double H_sq = 1.0;
  std::vector<double> Hk_sq;
  double delta0 = 1.0;
  std::vector<std::size_t> t{1, 10, 100, 1000};

  /// Throws ConfigError on empty grids, zero trials and similar.
  void validate() const;
};

/// key = value lines; '#' starts a comment; lists are comma separated.
/// Defaults come from default_config(kind), where kind is the `kind` key or
/// `fallback_kind` when absent. Unknown keys, duplicate keys and unparsable
/// values throw ConfigError.
ExperimentConfig parse_config(const std::string& text,
                              ExperimentKind fallback_kind = ExperimentKind::mse_sweep);
ExperimentConfig load_config(const std::filesystem::path& path,
                             ExperimentKind fallback_kind = ExperimentKind::mse_sweep);

/// Defaults for a CLI subcommand before a config file is applied.
ExperimentConfig default_config(ExperimentKind kind);

}  // namespace otafl
