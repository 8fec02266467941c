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

#include "otafl/channel.hpp"
#include "otafl/numerics.hpp"
#include "otafl/rng.hpp"

namespace otafl {

/// Per-element uplink noise variance: sigma^2 / M (scaled) or sigma^2 (unscaled).
enum class NoiseConvention { scaled, unscaled };

std::string to_string(NoiseConvention c);
NoiseConvention parse_noise_convention(const std::string& name);

double db_to_linear(double db);
double linear_to_db(double value);

enum class UplinkScheme { ideal, random_orthogonalization, enhanced, mmse_full_csi };
enum class DownlinkScheme { ideal, random_orthogonalization, enhanced };

std::string to_string(UplinkScheme s);
std::string to_string(DownlinkScheme s);
UplinkScheme parse_uplink_scheme(const std::string& name);
DownlinkScheme parse_downlink_scheme(const std::string& name);

struct UplinkSchemeConfig {
  UplinkScheme scheme = UplinkScheme::random_orthogonalization;
  double snr_ul_db = 10.0;
  NoiseConvention noise = NoiseConvention::scaled;
  bool noiseless = false;

  void validate() const;
  /// Per-element variance of n_i for M antennas; 0 when noiseless.
  double noise_variance(std::size_t antennas) const;
};

struct DownlinkSchemeConfig {
  DownlinkScheme scheme = DownlinkScheme::random_orthogonalization;
  double snr_dl_db = 10.0;
  bool noiseless = false;

  void validate() const;
  /// Variance of z_i^k; 0 when noiseless.
  double noise_variance() const;
};

/// d x K: column k holds client k's differential, row i is slot i.
using UplinkPayload = RealMatrix;

/// Additive decomposition of the complex projection of one slot.
struct SlotComponents {
  double signal = 0.0;
  Complex interference{};
  Complex estimation_error{};
  Complex noise{};
};

struct AggregateEstimate {
  /// Real estimate of sum_k x_{k,i}, one entry per slot.
  std::vector<double> value;
  /// Complex statistic before the real part is taken.
  std::vector<Complex> projection;
  std::vector<SlotComponents> components;
  /// d x K per-user estimates (MMSE only).
  std::optional<RealMatrix> per_user;
};

/// d x M noise rows n_i with the given per-element variance.
ComplexMatrix draw_uplink_noise(std::size_t antennas, std::size_t slots, double variance,
                                RngStream& rng);

/// Rows y_i = sum_k h_k x_{k,i} + n_i, with x_k scaled by `client_gain[k]`.
ComplexMatrix superimpose(const ComplexMatrix& h, const UplinkPayload& x,
                          const std::vector<double>& client_gain, const ComplexMatrix& noise);

/// projector^H y_i for every row of y.
std::vector<Complex> project_rows(const ComplexVector& projector, const ComplexMatrix& y);

enum class MmseForm {
  gram,        // (H^H H + r I)^-1 H^H y, K x K solve
  covariance,  // H^H (H H^H + r I)^-1 y, M x M solve
};

/// Linear MMSE detection of every row of y; returns d x K real parts.
RealMatrix mmse_detect(const ComplexMatrix& h, const ComplexMatrix& y, double regularizer,
                       MmseForm form);

// Every uplink scheme draws its noise first from `rng`, so passing copies of
// one stream to several schemes gives them identical noise.

AggregateEstimate uplink_aggregate_ideal(const UplinkPayload& x);

AggregateEstimate uplink_aggregate_ro(const ChannelRealization& real, const ComplexVector& sum_channel,
                                      const UplinkPayload& x, const UplinkSchemeConfig& cfg,
                                      RngStream rng);

/// Throws SingularEchoGainError if any |Re(g_hat_k)| < kEchoGainFloor.
AggregateEstimate uplink_aggregate_enhanced(const ChannelRealization& real,
                                            const ComplexVector& sum_channel,
                                            const std::vector<Complex>& echo_gains,
                                            const UplinkPayload& x, const UplinkSchemeConfig& cfg,
                                            RngStream rng);

/// Regularizer is the active per-element noise variance (1e-12 when noiseless).
AggregateEstimate uplink_aggregate_mmse(const ChannelRealization& real, const UplinkPayload& x,
                                        const UplinkSchemeConfig& cfg, RngStream rng,
                                        MmseForm form = MmseForm::gram);

/// Dispatches on cfg.scheme.
AggregateEstimate uplink_aggregate(const ChannelRealization& real, const CsiEstimates& csi,
                                   const UplinkPayload& x, const UplinkSchemeConfig& cfg,
                                   RngStream rng);

struct DownlinkReception {
  /// K x d: row k is client k's received model.
  RealMatrix received;
  /// h_k^H h_s_hat
  std::vector<Complex> effective_gain;
  /// ||h_k||^2
  std::vector<double> signal_gain;
  /// sum_{j != k} h_k^H h_j
  std::vector<Complex> interference_gain;
};

DownlinkReception downlink_broadcast_ideal(std::span<const double> w, std::size_t clients);

DownlinkReception downlink_broadcast_ro(const ChannelRealization& real,
                                        const ComplexVector& sum_channel,
                                        std::span<const double> w,
                                        const DownlinkSchemeConfig& cfg, RngStream rng);

/// Throws SingularEchoGainError if any |Re(g_hat_k)| < kEchoGainFloor.
DownlinkReception downlink_broadcast_enhanced(const ChannelRealization& real,
                                              const ComplexVector& sum_channel,
                                              const std::vector<Complex>& echo_gains,
                                              std::span<const double> w,
                                              const DownlinkSchemeConfig& cfg, RngStream rng);

DownlinkReception downlink_broadcast(const ChannelRealization& real, const CsiEstimates& csi,
                                     std::span<const double> w, const DownlinkSchemeConfig& cfg,
                                     RngStream rng);

/// M / (K - 1 + 1/snr). K = 1 with infinite snr returns +infinity.
double approx_sinr(std::size_t antennas, std::size_t clients, double snr_linear);

}  // namespace otafl
