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

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "otafl/channel.hpp"
#include "otafl/loss.hpp"
#include "otafl/phy.hpp"
#include "otafl/rng.hpp"

namespace otafl {

enum class PowerSchedule { fixed, theorem1_scaling };
enum class PayloadNormalization { none, per_round_unit_power };

std::string to_string(PowerSchedule s);
std::string to_string(PayloadNormalization n);
PowerSchedule parse_power_schedule(const std::string& name);
PayloadNormalization parse_payload_normalization(const std::string& name);

struct FlConfig {
  std::size_t total_clients = 20;
  std::size_t participants = 8;
  std::size_t local_steps = 1;
  std::size_t batch_size = 50;
  std::size_t rounds = 200;
  double mu = 1.0;
  double gamma_shift = 0.0;

  std::size_t antennas = 256;
  ChannelKind channel_kind = ChannelKind::iid_rayleigh;
  double rho = 0.0;
  EstimationMode estimation = EstimationMode::perfect();

  UplinkSchemeConfig uplink;
  DownlinkSchemeConfig downlink;
  PowerSchedule power_schedule = PowerSchedule::fixed;
  /// Floor of the theorem1_scaling schedule.
  double initial_snr_db = 0.0;
  PayloadNormalization normalization = PayloadNormalization::per_round_unit_power;

  /// Loss/accuracy are logged every `eval_every` rounds and at the last round.
  std::size_t eval_every = 1;

  /// Throws ConfigError.
  void validate() const;
};

struct RoundLog {
  std::size_t round = 0;
  double learning_rate = 0.0;
  double dl_snr_linear = 0.0;
  /// ||w_ideal||^2 / ||w - w_ideal||^2 for the updated model; +inf when exact.
  double effective_sinr = std::numeric_limits<double>::infinity();
  /// NaN on rounds that were not evaluated.
  double train_loss = std::numeric_limits<double>::quiet_NaN();
  double test_accuracy = std::numeric_limits<double>::quiet_NaN();
};

struct FlState {
  std::vector<double> w;
  std::size_t round = 0;
  std::vector<RoundLog> history;
  double best_train_loss = std::numeric_limits<double>::infinity();
};

/// eta_t = 2 / (mu (t + gamma))
double lr_schedule(std::size_t t, double mu, double gamma_shift);

/// max(floor, (1 - mu eta) / eta^2); floor when mu eta >= 1.
double dl_power_schedule(double mu, double eta, double floor_snr_linear);

/// Sorted sample of K distinct indices from [0, N).
std::vector<std::size_t> sample_clients(std::size_t N, std::size_t K, RngStream& rng);

/// E mini-batch steps at constant eta; batches are drawn without
/// replacement from a reshuffled permutation of the client's rows.
std::vector<double> local_sgd(std::span<const double> w_start, const ClientDataset& data,
                              const LossModel& loss, std::size_t E, std::size_t batch_size,
                              double eta, RngStream& rng);

/// x = w_global - w_local
std::vector<double> compute_differential(std::span<const double> w_global, std::span<const double> w_local);

/// w_{t+1} = w_t - x_tilde / K
std::vector<double> aggregate_global(std::span<const double> w, std::span<const double> x_tilde, std::size_t K);

struct NormalizedPayload {
  RealMatrix x;
  double scale = 1.0;
};

/// scale = sqrt(mean of squares); an all-zero payload keeps scale 1.
NormalizedPayload normalize_payload(const RealMatrix& x);
std::vector<double> denormalize(std::span<const double> x, double scale);

/// Streams used by the engine for one round. Everything is keyed by
/// (seed, round, tag) so runs with different schemes share draws.
struct RoundStreams {
  RngStream sampling;
  RngStream channel;
  RngStream csi;
  RngStream downlink;
  RngStream uplink;
  RngStream root;

  RoundStreams(std::uint64_t seed, std::size_t round);
  /// Local SGD stream of a client (global index).
  RngStream client(std::size_t id) const;
};

using RoundObserver = std::function<void(const FlState&)>;

/// Mean of the per-client losses (the global objective under equal sizes).
double global_loss(const LossModel& loss, std::span<const ClientDataset> clients, std::span<const double> w);

FlState run_federated_training(const FlConfig& config, const LossModel& loss,
                               std::span<const ClientDataset> clients, const ClientDataset* test_set,
                               std::uint64_t seed, std::optional<std::vector<double>> w0 = std::nullopt,
                               const RoundObserver& observer = {});

}  // namespace otafl
