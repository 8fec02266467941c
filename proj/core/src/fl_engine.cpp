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

#include "otafl/fl_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace otafl {

std::string to_string(PowerSchedule s) { return s == PowerSchedule::fixed ? "fixed" : "theorem1_scaling"; }

std::string to_string(PayloadNormalization n) {
  return n == PayloadNormalization::none ? "none" : "per_round_unit_power";
}

PowerSchedule parse_power_schedule(const std::string& name) {
  if (name == "fixed") return PowerSchedule::fixed;
  if (name == "theorem1_scaling") return PowerSchedule::theorem1_scaling;
  throw InvalidArgument("unknown power schedule '" + name + "'");
}

PayloadNormalization parse_payload_normalization(const std::string& name) {
  if (name == "none") return PayloadNormalization::none;
  if (name == "per_round_unit_power") return PayloadNormalization::per_round_unit_power;
  throw InvalidArgument("unknown payload normalization '" + name + "'");
}

void FlConfig::validate() const {
  if (participants == 0 || participants > total_clients) throw ConfigError("fl: need 1 <= K <= N");
  if (local_steps == 0) throw ConfigError("fl: local_steps must be at least 1");
  if (rounds == 0) throw ConfigError("fl: rounds must be at least 1");
  if (batch_size == 0) throw ConfigError("fl: batch_size must be positive");
  if (!(mu > 0.0) || !(gamma_shift >= 0.0)) throw ConfigError("fl: need mu > 0 and gamma >= 0");
  if (antennas == 0) throw ConfigError("fl: antennas must be positive");
  if (eval_every == 0) throw ConfigError("fl: eval_every must be positive");
  if (!std::isfinite(uplink.snr_ul_db) || !std::isfinite(downlink.snr_dl_db) || !std::isfinite(initial_snr_db)) {
    throw ConfigError("fl: SNRs must be finite");
  }
  ChannelModelConfig{antennas, participants, channel_kind, rho}.validate();
}

double lr_schedule(std::size_t t, double mu, double gamma_shift) {
  if (!(mu > 0.0)) throw InvalidArgument("lr_schedule: mu must be positive");
  return 2.0 / (mu * (static_cast<double>(t) + gamma_shift));
}

double dl_power_schedule(double mu, double eta, double floor_snr_linear) {
  if (mu * eta >= 1.0) return floor_snr_linear;
  return std::max(floor_snr_linear, (1.0 - mu * eta) / (eta * eta));
}

std::vector<std::size_t> sample_clients(std::size_t N, std::size_t K, RngStream& rng) {
  if (K > N) throw InvalidArgument("sample_clients: K > N");
  std::vector<std::size_t> pool(N);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t i = 0; i < K; ++i) {
    const std::size_t j = i + rng.uniform_index(N - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(K);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<double> local_sgd(std::span<const double> w_start, const ClientDataset& data,
                              const LossModel& loss, std::size_t E, std::size_t batch_size,
                              double eta, RngStream& rng) {
  if (!(eta > 0.0)) throw InvalidArgument("local_sgd: eta must be positive");
  if (E == 0 || batch_size == 0) throw InvalidArgument("local_sgd: E and batch_size must be positive");
  data.validate();
  const std::size_t n = data.size();
  std::vector<double> w(w_start.begin(), w_start.end());
  std::vector<double> grad(w.size());
  if (batch_size >= n) {
    for (std::size_t s = 0; s < E; ++s) {
      loss.gradient(w, data, {}, grad);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= eta * grad[i];
    }
    return w;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = n;
  for (std::size_t s = 0; s < E; ++s) {
    if (cursor + batch_size > n) {
      for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
      cursor = 0;
    }
    loss.gradient(w, data, std::span<const std::size_t>(order).subspan(cursor, batch_size), grad);
    cursor += batch_size;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= eta * grad[i];
  }
  return w;
}

std::vector<double> compute_differential(std::span<const double> w_global, std::span<const double> w_local) {
  if (w_global.size() != w_local.size()) throw InvalidArgument("compute_differential: length mismatch");
  std::vector<double> x(w_global.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = w_global[i] - w_local[i];
  return x;
}

std::vector<double> aggregate_global(std::span<const double> w, std::span<const double> x_tilde, std::size_t K) {
  if (w.size() != x_tilde.size()) throw InvalidArgument("aggregate_global: length mismatch");
  if (K == 0) throw InvalidArgument("aggregate_global: K must be positive");
  std::vector<double> out(w.size());
  const double k = static_cast<double>(K);
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] - x_tilde[i] / k;
  return out;
}

NormalizedPayload normalize_payload(const RealMatrix& x) {
  double sum = 0.0;
  for (double v : x.values()) sum += v * v;
  NormalizedPayload out{x, 1.0};
  if (sum == 0.0 || x.values().empty()) return out;
  out.scale = std::sqrt(sum / static_cast<double>(x.values().size()));
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (double& v : out.x.row(r)) v /= out.scale;
  }
  return out;
}

std::vector<double> denormalize(std::span<const double> x, double scale) {
  std::vector<double> out(x.begin(), x.end());
  for (double& v : out) v *= scale;
  return out;
}

namespace {

enum StreamTag : std::uint64_t { kSampling = 1, kChannel, kCsi, kDownlink, kUplink, kClientBase = 1000 };

}  // namespace

RoundStreams::RoundStreams(std::uint64_t seed, std::size_t round)
    : sampling(RngStream(seed, 0).substream(round).substream(kSampling)),
      channel(RngStream(seed, 0).substream(round).substream(kChannel)),
      csi(RngStream(seed, 0).substream(round).substream(kCsi)),
      downlink(RngStream(seed, 0).substream(round).substream(kDownlink)),
      uplink(RngStream(seed, 0).substream(round).substream(kUplink)),
      root(RngStream(seed, 0).substream(round)) {}

RngStream RoundStreams::client(std::size_t id) const { return root.substream(kClientBase + id); }

double global_loss(const LossModel& loss, std::span<const ClientDataset> clients, std::span<const double> w) {
  std::vector<double> per(clients.size());
  for (std::size_t k = 0; k < clients.size(); ++k) per[k] = loss.value(w, clients[k]);
  return pairwise_sum(per) / static_cast<double>(clients.size());
}

namespace {

double rms(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

FlState run_federated_training(const FlConfig& config, const LossModel& loss,
                               std::span<const ClientDataset> clients, const ClientDataset* test_set,
                               std::uint64_t seed, std::optional<std::vector<double>> w0,
                               const RoundObserver& observer) {
  config.validate();
  if (clients.size() != config.total_clients) {
    throw ConfigError("fl: got " + std::to_string(clients.size()) + " client datasets, expected " +
                      std::to_string(config.total_clients));
  }
  const std::size_t d = clients.front().dim();
  for (const auto& c : clients) {
    c.validate();
    if (c.size() != clients.front().size()) throw ConfigError("fl: client datasets must have equal sizes");
    if (c.dim() != d) throw ConfigError("fl: client feature dimensions differ");
  }

  const std::size_t K = config.participants;
  const ChannelModel channel_model({config.antennas, K, config.channel_kind, config.rho});
  const bool normalize = config.normalization == PayloadNormalization::per_round_unit_power;

  FlState state;
  state.w = w0 ? std::move(*w0) : std::vector<double>(d, 0.0);
  if (state.w.size() != d) throw ConfigError("fl: initial model has wrong dimension");

  for (std::size_t t = 1; t <= config.rounds; ++t) {
    RoundStreams streams(seed, t);
    RoundLog log;
    log.round = t;
    log.learning_rate = lr_schedule(t, config.mu, config.gamma_shift);

    DownlinkSchemeConfig dl = config.downlink;
    if (config.power_schedule == PowerSchedule::theorem1_scaling) {
      dl.snr_dl_db = linear_to_db(dl_power_schedule(config.mu, log.learning_rate, db_to_linear(config.initial_snr_db)));
    }
    log.dl_snr_linear = db_to_linear(dl.snr_dl_db);

    const std::vector<std::size_t> chosen = sample_clients(config.total_clients, K, streams.sampling);
    const ChannelRealization real = channel_model.draw(streams.channel);
    const bool needs_csi = dl.scheme != DownlinkScheme::ideal ||
                           config.uplink.scheme == UplinkScheme::random_orthogonalization ||
                           config.uplink.scheme == UplinkScheme::enhanced;
    CsiEstimates csi;
    if (needs_csi) csi = estimate_csi(real, config.estimation, streams.csi);

    try {
      // Downlink
      const double w_scale = normalize ? (rms(state.w) > 0.0 ? rms(state.w) : 1.0) : 1.0;
      std::vector<double> w_tx(state.w);
      for (double& v : w_tx) v /= w_scale;
      const DownlinkReception rx = downlink_broadcast(real, csi, w_tx, dl, streams.downlink);

      // Local training and differentials
      RealMatrix x(d, K);
      for (std::size_t j = 0; j < K; ++j) {
        std::vector<double> received = denormalize(rx.received.row(j), w_scale);
        RngStream client_rng = streams.client(chosen[j]);
        const std::vector<double> local = local_sgd(received, clients[chosen[j]], loss, config.local_steps,
                                                    config.batch_size, log.learning_rate, client_rng);
        const std::vector<double> diff = compute_differential(received, local);
        for (std::size_t i = 0; i < d; ++i) x(i, j) = diff[i];
      }

      // Uplink
      NormalizedPayload payload = normalize ? normalize_payload(x) : NormalizedPayload{x, 1.0};
      const AggregateEstimate agg = uplink_aggregate(real, csi, payload.x, config.uplink, streams.uplink);
      const std::vector<double> x_tilde = denormalize(agg.value, payload.scale);

      std::vector<double> ideal_sum(d);
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < K; ++j) ideal_sum[i] += x(i, j);
      }
      const std::vector<double> w_ideal = aggregate_global(state.w, ideal_sum, K);
      state.w = aggregate_global(state.w, x_tilde, K);

      double sig = 0.0;
      double err = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        sig += w_ideal[i] * w_ideal[i];
        err += (state.w[i] - w_ideal[i]) * (state.w[i] - w_ideal[i]);
      }
      log.effective_sinr = err > 0.0 ? sig / err : std::numeric_limits<double>::infinity();
    } catch (const SingularEchoGainError& e) {
      throw NumericError("round " + std::to_string(t) + ", client " + std::to_string(chosen.at(e.client())) +
                         ": " + e.what());
    } catch (const NumericError& e) {
      throw NumericError("round " + std::to_string(t) + ": " + e.what());
    }

    for (double v : state.w) {
      if (!std::isfinite(v)) throw NumericError("round " + std::to_string(t) + ": model diverged");
    }
    state.round = t;
    if (t % config.eval_every == 0 || t == config.rounds) {
      log.train_loss = global_loss(loss, clients, state.w);
      state.best_train_loss = std::min(state.best_train_loss, log.train_loss);
      if (test_set != nullptr) log.test_accuracy = LossModel::accuracy(state.w, *test_set);
    }
    state.history.push_back(log);
    if (observer) observer(state);
  }
  return state;
}

}  // namespace otafl
