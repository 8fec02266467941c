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
#include <optional>
#include <string>
#include <vector>

#include "otafl/numerics.hpp"
#include "otafl/rng.hpp"

namespace otafl {

enum class ChannelKind {
  iid_rayleigh,
  user_correlated,     // K x K covariance shared by every antenna row
  antenna_correlated,  // M x M covariance shared by every user column
};

std::string to_string(ChannelKind kind);
ChannelKind parse_channel_kind(const std::string& name);

struct ChannelModelConfig {
  std::size_t antennas = 1;
  std::size_t clients = 1;
  ChannelKind kind = ChannelKind::iid_rayleigh;
  double rho = 0.0;

  /// Throws InvalidArgument on zero dimensions or rho outside [0, 1).
  void validate() const;
  bool operator==(const ChannelModelConfig&) const = default;
};

/// One block-fading draw. Column k of `h` is h_k; entries have variance 1/M.
struct ChannelRealization {
  ComplexMatrix h;
  ChannelModelConfig config;

  std::size_t antennas() const noexcept { return h.rows(); }
  std::size_t clients() const noexcept { return h.cols(); }
  ComplexVector column(std::size_t k) const;
  /// h_s = sum_k h_k
  ComplexVector sum_channel() const;
};

/// Caches the correlation factor so repeated draws only pay for sampling.
class ChannelModel {
 public:
  explicit ChannelModel(ChannelModelConfig config);

  const ChannelModelConfig& config() const noexcept { return config_; }
  ChannelRealization draw(RngStream& rng) const;

 private:
  ChannelModelConfig config_;
  std::optional<RealMatrix> factor_;
};

/// Draws entries in row-major order as CN(0, 1/M), then applies the
/// correlation factor. rho = 0 reproduces the iid draw for the same stream.
ChannelRealization draw_channel(const ChannelModelConfig& config, RngStream& rng);

/// How the echo-gain estimate is perturbed under pilot noise.
enum class EchoNoise {
  power_normalized,  // g_hat = g + sqrt(K) eps, eps ~ CN(0, sigma^2)
  estimate_level,    // g_hat = g + eps
};

std::string to_string(EchoNoise mode);
EchoNoise parse_echo_noise(const std::string& name);

struct EstimationMode {
  enum class Variant { perfect, pilot_noise };

  Variant variant = Variant::perfect;
  double pilot_snr_db = 0.0;
  EchoNoise echo_noise = EchoNoise::power_normalized;

  static EstimationMode perfect() { return {}; }
  static EstimationMode pilot(double snr_db, EchoNoise echo = EchoNoise::power_normalized);

  /// 10^(-snr/10); zero for perfect estimation.
  double error_variance() const;
  /// "perfect" or "pilot_<db>dB[_estimate_level]".
  std::string label() const;
};

struct CsiEstimates {
  ComplexVector sum_channel;
  std::vector<Complex> echo_gains;
  EstimationMode mode;
  /// Clients whose |Re(g_hat)| fell below the echo-gain floor.
  std::vector<std::size_t> near_singular;
};

inline constexpr double kEchoGainFloor = 1e-9;

ComplexVector estimate_sum_channel(const ChannelRealization& real, const EstimationMode& mode,
                                   RngStream& rng);

std::vector<Complex> estimate_echo_gains(const ChannelRealization& real,
                                         const ComplexVector& sum_channel,
                                         const EstimationMode& mode, RngStream& rng);

/// Runs both estimation steps and records near-singular echo gains.
CsiEstimates estimate_csi(const ChannelRealization& real, const EstimationMode& mode,
                          RngStream& rng);

}  // namespace otafl
