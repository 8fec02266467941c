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

#include "otafl/channel.hpp"

#include <cmath>
#include <cstdio>

namespace otafl {

std::string to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::iid_rayleigh: return "iid_rayleigh";
    case ChannelKind::user_correlated: return "user_correlated";
    case ChannelKind::antenna_correlated: return "antenna_correlated";
  }
  return "unknown";
}

ChannelKind parse_channel_kind(const std::string& name) {
  if (name == "iid_rayleigh" || name == "iid") return ChannelKind::iid_rayleigh;
  if (name == "user_correlated") return ChannelKind::user_correlated;
  if (name == "antenna_correlated") return ChannelKind::antenna_correlated;
  throw InvalidArgument("unknown channel kind '" + name + "'");
}

void ChannelModelConfig::validate() const {
  if (antennas == 0 || clients == 0) throw InvalidArgument("channel: M and K must be positive");
  if (!(rho >= 0.0 && rho < 1.0)) throw InvalidArgument("channel: rho must lie in [0, 1)");
}

ComplexVector ChannelRealization::column(std::size_t k) const {
  ComplexVector v(h.rows());
  for (std::size_t m = 0; m < h.rows(); ++m) v[m] = h(m, k);
  return v;
}

ComplexVector ChannelRealization::sum_channel() const {
  ComplexVector s(h.rows());
  for (std::size_t m = 0; m < h.rows(); ++m) {
    Complex acc{};
    for (const Complex& v : h.row(m)) acc += v;
    s[m] = acc;
  }
  return s;
}

namespace {

RealMatrix equicorrelation(std::size_t n, double rho) {
  RealMatrix c(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) c(i, j) = (i == j) ? 1.0 : rho;
  }
  return c;
}

}  // namespace

ChannelModel::ChannelModel(ChannelModelConfig config) : config_(config) {
  config_.validate();
  if (config_.rho == 0.0) return;
  if (config_.kind == ChannelKind::user_correlated) {
    factor_ = cholesky_factor(equicorrelation(config_.clients, config_.rho));
  } else if (config_.kind == ChannelKind::antenna_correlated) {
    factor_ = cholesky_factor(equicorrelation(config_.antennas, config_.rho));
  }
}

ChannelRealization ChannelModel::draw(RngStream& rng) const {
  const std::size_t m_count = config_.antennas;
  const std::size_t k_count = config_.clients;
  const double variance = 1.0 / static_cast<double>(m_count);
  ComplexMatrix z(m_count, k_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    for (std::size_t k = 0; k < k_count; ++k) z(m, k) = rng.complex_normal(variance);
  }
  if (!factor_) return {std::move(z), config_};

  const RealMatrix& l = *factor_;
  ComplexMatrix h(m_count, k_count);
  if (config_.kind == ChannelKind::user_correlated) {
    // Row m: h[m, :] = L z[m, :]
    for (std::size_t m = 0; m < m_count; ++m) {
      for (std::size_t k = 0; k < k_count; ++k) {
        Complex acc{};
        for (std::size_t j = 0; j <= k; ++j) acc += l(k, j) * z(m, j);
        h(m, k) = acc;
      }
    }
  } else {
    // Column k: h_k = L z_k
    for (std::size_t m = 0; m < m_count; ++m) {
      const double* lm = l.data() + m * m_count;
      for (std::size_t j = 0; j <= m; ++j) {
        const double c = lm[j];
        const Complex* zj = z.data() + j * k_count;
        Complex* hm = h.data() + m * k_count;
        for (std::size_t k = 0; k < k_count; ++k) hm[k] += c * zj[k];
      }
    }
  }
  return {std::move(h), config_};
}

ChannelRealization draw_channel(const ChannelModelConfig& config, RngStream& rng) {
  return ChannelModel(config).draw(rng);
}

std::string to_string(EchoNoise mode) {
  return mode == EchoNoise::power_normalized ? "power_normalized" : "estimate_level";
}

EchoNoise parse_echo_noise(const std::string& name) {
  if (name == "power_normalized") return EchoNoise::power_normalized;
  if (name == "estimate_level") return EchoNoise::estimate_level;
  throw InvalidArgument("unknown echo noise model '" + name + "'");
}

EstimationMode EstimationMode::pilot(double snr_db, EchoNoise echo) {
  if (!std::isfinite(snr_db)) throw InvalidArgument("pilot SNR must be finite");
  return {Variant::pilot_noise, snr_db, echo};
}

double EstimationMode::error_variance() const {
  if (variant == Variant::perfect) return 0.0;
  return std::pow(10.0, -pilot_snr_db / 10.0);
}

std::string EstimationMode::label() const {
  if (variant == Variant::perfect) return "perfect";
  std::string s = "pilot_";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", pilot_snr_db);
  s += buf;
  s += "dB";
  if (echo_noise == EchoNoise::estimate_level) s += "_estimate_level";
  return s;
}

ComplexVector estimate_sum_channel(const ChannelRealization& real, const EstimationMode& mode,
                                   RngStream& rng) {
  ComplexVector hs = real.sum_channel();
  if (mode.variant == EstimationMode::Variant::perfect) return hs;
  const double variance = mode.error_variance() / static_cast<double>(real.antennas());
  for (Complex& v : hs) v += rng.complex_normal(variance);
  return hs;
}

std::vector<Complex> estimate_echo_gains(const ChannelRealization& real,
                                         const ComplexVector& sum_channel,
                                         const EstimationMode& mode, RngStream& rng) {
  const std::size_t m_count = real.antennas();
  const std::size_t k_count = real.clients();
  if (sum_channel.size() != m_count) throw InvalidArgument("echo gains: sum channel length != M");
  std::vector<Complex> g(k_count);
  // g_k = h_k^H h_s, accumulated row by row to stay cache friendly.
  for (std::size_t m = 0; m < m_count; ++m) {
    const Complex s = sum_channel[m];
    const auto row = real.h.row(m);
    for (std::size_t k = 0; k < k_count; ++k) g[k] += std::conj(row[k]) * s;
  }
  if (mode.variant == EstimationMode::Variant::pilot_noise) {
    const double scale =
        mode.echo_noise == EchoNoise::power_normalized ? std::sqrt(static_cast<double>(k_count)) : 1.0;
    const double variance = mode.error_variance();
    for (Complex& gk : g) gk += scale * rng.complex_normal(variance);
  }
  return g;
}

CsiEstimates estimate_csi(const ChannelRealization& real, const EstimationMode& mode,
                          RngStream& rng) {
  CsiEstimates est;
  est.sum_channel = estimate_sum_channel(real, mode, rng);
  est.echo_gains = estimate_echo_gains(real, est.sum_channel, mode, rng);
  est.mode = mode;
  for (std::size_t k = 0; k < est.echo_gains.size(); ++k) {
    if (std::abs(est.echo_gains[k].real()) < kEchoGainFloor) est.near_singular.push_back(k);
  }
  return est;
}

}  // namespace otafl
