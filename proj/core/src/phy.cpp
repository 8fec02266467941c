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

#include "otafl/phy.hpp"

#include <cmath>
#include <limits>

namespace otafl {

std::string to_string(NoiseConvention c) { return c == NoiseConvention::scaled ? "scaled" : "unscaled"; }

NoiseConvention parse_noise_convention(const std::string& name) {
  if (name == "scaled") return NoiseConvention::scaled;
  if (name == "unscaled") return NoiseConvention::unscaled;
  throw InvalidArgument("unknown noise convention '" + name + "'");
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double value) { return 10.0 * std::log10(value); }

std::string to_string(UplinkScheme s) {
  switch (s) {
    case UplinkScheme::ideal: return "ideal";
    case UplinkScheme::random_orthogonalization: return "random_orthogonalization";
    case UplinkScheme::enhanced: return "enhanced";
    case UplinkScheme::mmse_full_csi: return "mmse_full_csi";
  }
  return "unknown";
}

std::string to_string(DownlinkScheme s) {
  switch (s) {
    case DownlinkScheme::ideal: return "ideal";
    case DownlinkScheme::random_orthogonalization: return "random_orthogonalization";
    case DownlinkScheme::enhanced: return "enhanced";
  }
  return "unknown";
}

UplinkScheme parse_uplink_scheme(const std::string& name) {
  if (name == "ideal") return UplinkScheme::ideal;
  if (name == "random_orthogonalization" || name == "ro") return UplinkScheme::random_orthogonalization;
  if (name == "enhanced") return UplinkScheme::enhanced;
  if (name == "mmse_full_csi" || name == "mmse") return UplinkScheme::mmse_full_csi;
  throw InvalidArgument("unknown uplink scheme '" + name + "'");
}

DownlinkScheme parse_downlink_scheme(const std::string& name) {
  if (name == "ideal") return DownlinkScheme::ideal;
  if (name == "random_orthogonalization" || name == "ro") return DownlinkScheme::random_orthogonalization;
  if (name == "enhanced") return DownlinkScheme::enhanced;
  throw InvalidArgument("unknown downlink scheme '" + name + "'");
}

void UplinkSchemeConfig::validate() const {
  if (!std::isfinite(snr_ul_db)) throw InvalidArgument("uplink SNR must be finite");
}

double UplinkSchemeConfig::noise_variance(std::size_t antennas) const {
  if (noiseless) return 0.0;
  const double sigma2 = db_to_linear(-snr_ul_db);
  return noise == NoiseConvention::scaled ? sigma2 / static_cast<double>(antennas) : sigma2;
}

void DownlinkSchemeConfig::validate() const {
  if (!std::isfinite(snr_dl_db)) throw InvalidArgument("downlink SNR must be finite");
}

double DownlinkSchemeConfig::noise_variance() const {
  return noiseless ? 0.0 : db_to_linear(-snr_dl_db);
}

ComplexMatrix draw_uplink_noise(std::size_t antennas, std::size_t slots, double variance,
                                RngStream& rng) {
  ComplexMatrix n(slots, antennas);
  if (variance == 0.0) return n;
  Complex* p = n.data();
  for (std::size_t i = 0; i < slots * antennas; ++i) p[i] = rng.complex_normal(variance);
  return n;
}

ComplexMatrix superimpose(const ComplexMatrix& h, const UplinkPayload& x,
                          const std::vector<double>& client_gain, const ComplexMatrix& noise) {
  const std::size_t m_count = h.rows();
  const std::size_t k_count = h.cols();
  const std::size_t slots = x.rows();
  if (x.cols() != k_count || client_gain.size() != k_count || noise.rows() != slots ||
      noise.cols() != m_count) {
    throw InvalidArgument("superimpose: dimension mismatch");
  }
  ComplexMatrix y = noise;
  std::vector<double> s(k_count);
  for (std::size_t i = 0; i < slots; ++i) {
    for (std::size_t k = 0; k < k_count; ++k) s[k] = x(i, k) * client_gain[k];
    Complex* yi = y.data() + i * m_count;
    for (std::size_t m = 0; m < m_count; ++m) {
      const Complex* hm = h.data() + m * k_count;
      Complex acc{};
      for (std::size_t k = 0; k < k_count; ++k) acc += hm[k] * s[k];
      yi[m] += acc;
    }
  }
  return y;
}

std::vector<Complex> project_rows(const ComplexVector& projector, const ComplexMatrix& y) {
  if (projector.size() != y.cols()) throw InvalidArgument("project_rows: length mismatch");
  std::vector<Complex> out(y.rows());
  for (std::size_t i = 0; i < y.rows(); ++i) out[i] = hermitian_inner(projector.span(), y.row(i));
  return out;
}

RealMatrix mmse_detect(const ComplexMatrix& h, const ComplexMatrix& y, double regularizer,
                       MmseForm form) {
  const std::size_t m_count = h.rows();
  const std::size_t k_count = h.cols();
  const std::size_t slots = y.rows();
  if (y.cols() != m_count) throw InvalidArgument("mmse_detect: dimension mismatch");
  RealMatrix out(slots, k_count);
  if (form == MmseForm::gram) {
    ComplexMatrix g = gram(h);
    for (std::size_t k = 0; k < k_count; ++k) g(k, k) += regularizer;
    const ComplexMatrix l = cholesky_factor(g);
    std::vector<Complex> rhs(k_count);
    for (std::size_t i = 0; i < slots; ++i) {
      std::fill(rhs.begin(), rhs.end(), Complex{});
      const Complex* yi = y.data() + i * m_count;
      for (std::size_t m = 0; m < m_count; ++m) {
        const Complex* hm = h.data() + m * k_count;
        for (std::size_t k = 0; k < k_count; ++k) rhs[k] += std::conj(hm[k]) * yi[m];
      }
      cholesky_solve_in_place(l, rhs);
      for (std::size_t k = 0; k < k_count; ++k) out(i, k) = rhs[k].real();
    }
    return out;
  }
  ComplexMatrix r = multiply_adjoint(h, h);
  for (std::size_t m = 0; m < m_count; ++m) r(m, m) += regularizer;
  const ComplexMatrix l = cholesky_factor(r);
  std::vector<Complex> v(m_count);
  for (std::size_t i = 0; i < slots; ++i) {
    const auto yi = y.row(i);
    std::copy(yi.begin(), yi.end(), v.begin());
    cholesky_solve_in_place(l, v);
    for (std::size_t k = 0; k < k_count; ++k) {
      Complex acc{};
      for (std::size_t m = 0; m < m_count; ++m) acc += std::conj(h(m, k)) * v[m];
      out(i, k) = acc.real();
    }
  }
  return out;
}

namespace {

void check_dims(const ChannelRealization& real, const UplinkPayload& x) {
  if (x.cols() != real.clients()) throw InvalidArgument("uplink payload has wrong client count");
  if (x.rows() == 0) throw InvalidArgument("uplink payload has no slots");
}

void check_echo_gains(const std::vector<Complex>& g, std::size_t clients) {
  if (g.size() != clients) throw InvalidArgument("echo gain count != K");
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (std::abs(g[k].real()) < kEchoGainFloor) throw SingularEchoGainError(k, g[k].real());
  }
}

// c_k = projector^H h_k
std::vector<Complex> column_projections(const ComplexMatrix& h, const ComplexVector& projector) {
  std::vector<Complex> c(h.cols());
  for (std::size_t m = 0; m < h.rows(); ++m) {
    const Complex p = std::conj(projector[m]);
    const auto row = h.row(m);
    for (std::size_t k = 0; k < h.cols(); ++k) c[k] += p * row[k];
  }
  return c;
}

std::vector<double> column_norms(const ComplexMatrix& h) {
  std::vector<double> e(h.cols());
  for (std::size_t m = 0; m < h.rows(); ++m) {
    const auto row = h.row(m);
    for (std::size_t k = 0; k < h.cols(); ++k) e[k] += std::norm(row[k]);
  }
  return e;
}

}  // namespace

AggregateEstimate uplink_aggregate_ideal(const UplinkPayload& x) {
  AggregateEstimate out;
  out.value.resize(x.rows());
  out.projection.resize(x.rows());
  out.components.resize(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (double v : x.row(i)) s += v;
    out.value[i] = s;
    out.projection[i] = s;
    out.components[i].signal = s;
  }
  return out;
}

AggregateEstimate uplink_aggregate_ro(const ChannelRealization& real, const ComplexVector& sum_channel,
                                      const UplinkPayload& x, const UplinkSchemeConfig& cfg,
                                      RngStream rng) {
  check_dims(real, x);
  cfg.validate();
  const std::size_t slots = x.rows();
  const std::size_t k_count = real.clients();
  const ComplexMatrix noise = draw_uplink_noise(real.antennas(), slots, cfg.noise_variance(real.antennas()), rng);
  const ComplexMatrix y = superimpose(real.h, x, std::vector<double>(k_count, 1.0), noise);

  AggregateEstimate out;
  out.projection = project_rows(sum_channel, y);
  out.value.resize(slots);
  for (std::size_t i = 0; i < slots; ++i) out.value[i] = out.projection[i].real();

  const std::vector<Complex> est = column_projections(real.h, sum_channel);
  const std::vector<Complex> truth = column_projections(real.h, real.sum_channel());
  const std::vector<double> self = column_norms(real.h);
  out.components.resize(slots);
  for (std::size_t i = 0; i < slots; ++i) {
    SlotComponents& c = out.components[i];
    for (std::size_t k = 0; k < k_count; ++k) {
      const double xk = x(i, k);
      c.signal += self[k] * xk;
      c.interference += (truth[k] - self[k]) * xk;
      c.estimation_error += (est[k] - truth[k]) * xk;
    }
    c.noise = hermitian_inner(sum_channel.span(), noise.row(i));
  }
  return out;
}

AggregateEstimate uplink_aggregate_enhanced(const ChannelRealization& real,
                                            const ComplexVector& sum_channel,
                                            const std::vector<Complex>& echo_gains,
                                            const UplinkPayload& x, const UplinkSchemeConfig& cfg,
                                            RngStream rng) {
  check_dims(real, x);
  cfg.validate();
  const std::size_t k_count = real.clients();
  check_echo_gains(echo_gains, k_count);
  const std::size_t slots = x.rows();
  std::vector<double> inv_gain(k_count);
  for (std::size_t k = 0; k < k_count; ++k) inv_gain[k] = 1.0 / echo_gains[k].real();

  const ComplexMatrix noise = draw_uplink_noise(real.antennas(), slots, cfg.noise_variance(real.antennas()), rng);
  const ComplexMatrix y = superimpose(real.h, x, inv_gain, noise);

  AggregateEstimate out;
  out.projection = project_rows(sum_channel, y);
  out.value.resize(slots);
  for (std::size_t i = 0; i < slots; ++i) out.value[i] = out.projection[i].real();

  const std::vector<Complex> est = column_projections(real.h, sum_channel);
  out.components.resize(slots);
  for (std::size_t i = 0; i < slots; ++i) {
    SlotComponents& c = out.components[i];
    for (std::size_t k = 0; k < k_count; ++k) {
      const double xk = x(i, k);
      c.signal += xk;
      c.estimation_error += (est[k] * inv_gain[k] - 1.0) * xk;
    }
    c.noise = hermitian_inner(sum_channel.span(), noise.row(i));
  }
  return out;
}

AggregateEstimate uplink_aggregate_mmse(const ChannelRealization& real, const UplinkPayload& x,
                                        const UplinkSchemeConfig& cfg, RngStream rng, MmseForm form) {
  check_dims(real, x);
  cfg.validate();
  const std::size_t k_count = real.clients();
  const std::size_t slots = x.rows();
  const double variance = cfg.noise_variance(real.antennas());
  const ComplexMatrix noise = draw_uplink_noise(real.antennas(), slots, variance, rng);
  const ComplexMatrix y = superimpose(real.h, x, std::vector<double>(k_count, 1.0), noise);
  const double regularizer = variance > 0.0 ? variance : 1e-12;

  AggregateEstimate out;
  out.per_user = mmse_detect(real.h, y, regularizer, form);
  out.value.resize(slots);
  out.projection.resize(slots);
  out.components.resize(slots);
  for (std::size_t i = 0; i < slots; ++i) {
    double s = 0.0;
    double truth = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
      s += (*out.per_user)(i, k);
      truth += x(i, k);
    }
    out.value[i] = s;
    out.projection[i] = s;
    out.components[i].signal = truth;
    out.components[i].estimation_error = s - truth;
  }
  return out;
}

AggregateEstimate uplink_aggregate(const ChannelRealization& real, const CsiEstimates& csi,
                                   const UplinkPayload& x, const UplinkSchemeConfig& cfg,
                                   RngStream rng) {
  switch (cfg.scheme) {
    case UplinkScheme::ideal: return uplink_aggregate_ideal(x);
    case UplinkScheme::random_orthogonalization:
      return uplink_aggregate_ro(real, csi.sum_channel, x, cfg, rng);
    case UplinkScheme::enhanced:
      return uplink_aggregate_enhanced(real, csi.sum_channel, csi.echo_gains, x, cfg, rng);
    case UplinkScheme::mmse_full_csi: return uplink_aggregate_mmse(real, x, cfg, rng);
  }
  throw InvalidArgument("unknown uplink scheme");
}

namespace {

DownlinkReception gains_for(const ChannelRealization& real, const ComplexVector& sum_channel) {
  DownlinkReception r;
  const std::vector<Complex> est = column_projections(real.h, sum_channel);
  const std::vector<Complex> truth = column_projections(real.h, real.sum_channel());
  r.signal_gain = column_norms(real.h);
  r.effective_gain.resize(est.size());
  r.interference_gain.resize(est.size());
  for (std::size_t k = 0; k < est.size(); ++k) {
    // h_k^H v = conj(v^H h_k)
    r.effective_gain[k] = std::conj(est[k]);
    r.interference_gain[k] = std::conj(truth[k]) - r.signal_gain[k];
  }
  return r;
}

}  // namespace

DownlinkReception downlink_broadcast_ideal(std::span<const double> w, std::size_t clients) {
  DownlinkReception r;
  r.received = RealMatrix(clients, w.size());
  for (std::size_t k = 0; k < clients; ++k) {
    std::copy(w.begin(), w.end(), r.received.row(k).begin());
  }
  r.effective_gain.assign(clients, Complex(1.0, 0.0));
  r.signal_gain.assign(clients, 1.0);
  r.interference_gain.assign(clients, Complex{});
  return r;
}

DownlinkReception downlink_broadcast_ro(const ChannelRealization& real,
                                        const ComplexVector& sum_channel,
                                        std::span<const double> w,
                                        const DownlinkSchemeConfig& cfg, RngStream rng) {
  cfg.validate();
  if (sum_channel.size() != real.antennas()) throw InvalidArgument("downlink: sum channel length != M");
  const std::size_t k_count = real.clients();
  const double variance = cfg.noise_variance();
  DownlinkReception r = gains_for(real, sum_channel);
  r.received = RealMatrix(k_count, w.size());
  for (std::size_t k = 0; k < k_count; ++k) {
    const Complex c = r.effective_gain[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const Complex z = variance > 0.0 ? rng.complex_normal(variance) : Complex{};
      r.received(k, i) = (c * w[i] + z).real();
    }
  }
  return r;
}

DownlinkReception downlink_broadcast_enhanced(const ChannelRealization& real,
                                              const ComplexVector& sum_channel,
                                              const std::vector<Complex>& echo_gains,
                                              std::span<const double> w,
                                              const DownlinkSchemeConfig& cfg, RngStream rng) {
  cfg.validate();
  if (sum_channel.size() != real.antennas()) throw InvalidArgument("downlink: sum channel length != M");
  const std::size_t k_count = real.clients();
  check_echo_gains(echo_gains, k_count);
  const double variance = cfg.noise_variance();
  const double root_k = std::sqrt(static_cast<double>(k_count));
  DownlinkReception r = gains_for(real, sum_channel);
  r.received = RealMatrix(k_count, w.size());
  for (std::size_t k = 0; k < k_count; ++k) {
    const Complex c = r.effective_gain[k];
    const Complex g = echo_gains[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const Complex z = variance > 0.0 ? rng.complex_normal(variance) : Complex{};
      const Complex y = c / root_k * w[i] + z;
      r.received(k, i) = (root_k * y / g).real();
    }
  }
  return r;
}

DownlinkReception downlink_broadcast(const ChannelRealization& real, const CsiEstimates& csi,
                                     std::span<const double> w, const DownlinkSchemeConfig& cfg,
                                     RngStream rng) {
  switch (cfg.scheme) {
    case DownlinkScheme::ideal: return downlink_broadcast_ideal(w, real.clients());
    case DownlinkScheme::random_orthogonalization:
      return downlink_broadcast_ro(real, csi.sum_channel, w, cfg, rng);
    case DownlinkScheme::enhanced:
      return downlink_broadcast_enhanced(real, csi.sum_channel, csi.echo_gains, w, cfg, rng);
  }
  throw InvalidArgument("unknown downlink scheme");
}

double approx_sinr(std::size_t antennas, std::size_t clients, double snr_linear) {
  if (clients == 0) throw InvalidArgument("approx_sinr: K must be positive");
  if (!(snr_linear > 0.0)) throw InvalidArgument("approx_sinr: snr must be positive");
  const double denom = static_cast<double>(clients) - 1.0 + 1.0 / snr_linear;
  if (denom == 0.0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(antennas) / denom;
}

}  // namespace otafl
