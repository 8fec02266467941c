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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "otafl/fl_engine.hpp"

namespace otafl {
namespace {

std::vector<ClientDataset> split_equal(const ClientDataset& pool, std::size_t clients) {
  const std::size_t per = pool.size() / clients;
  std::vector<ClientDataset> out(clients);
  for (std::size_t k = 0; k < clients; ++k) {
    out[k].features = RealMatrix(per, pool.dim());
    out[k].target.resize(per);
    for (std::size_t j = 0; j < per; ++j) {
      const auto row = pool.features.row(k * per + j);
      std::copy(row.begin(), row.end(), out[k].features.row(j).begin());
      out[k].target[j] = pool.target[k * per + j];
    }
  }
  return out;
}

FlConfig ideal_config(std::size_t N, std::size_t K) {
  FlConfig c;
  c.total_clients = N;
  c.participants = K;
  c.uplink.scheme = UplinkScheme::ideal;
  c.downlink.scheme = DownlinkScheme::ideal;
  c.power_schedule = PowerSchedule::fixed;
  c.antennas = 16;
  return c;
}

// Mean-squared-error gradient X^T (X w - y) / n, written out directly.
std::vector<double> quadratic_gradient(const ClientDataset& d, const std::vector<double>& w) {
  std::vector<double> g(w.size(), 0.0);
  for (std::size_t r = 0; r < d.size(); ++r) {
    double score = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) score += d.features(r, j) * w[j];
    const double res = score - d.target[r];
    for (std::size_t j = 0; j < w.size(); ++j) g[j] += res * d.features(r, j);
  }
  for (double& v : g) v /= static_cast<double>(d.size());
  return g;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double mean = (n - 1.0) / 2.0;
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - mean) * (rb[i] - mean);
    da += (ra[i] - mean) * (ra[i] - mean);
    db += (rb[i] - mean) * (rb[i] - mean);
  }
  return num / std::sqrt(da * db);
}

TEST(LrSchedule, Values) {
  EXPECT_DOUBLE_EQ(lr_schedule(1, 2.0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(lr_schedule(1, 1.0, 9.0), 0.2);
  EXPECT_THROW(lr_schedule(1, 0.0, 0.0), InvalidArgument);
}

TEST(LrSchedule, DecaysAtMostByHalfOverEStepsWhenShiftCoversE) {
  for (double gamma : {0.0, 3.0, 10.0}) {
    for (std::size_t t = 1; t < 60; ++t) {
      for (std::size_t E = 1; E <= 10; ++E) {
        if (static_cast<double>(E) > static_cast<double>(t) + gamma) continue;
        EXPECT_LE(lr_schedule(t, 0.7, gamma), 2.0 * lr_schedule(t + E, 0.7, gamma) * (1 + 1e-15));
      }
    }
  }
}

TEST(DlPowerSchedule, FloorAndGrowth) {
  EXPECT_EQ(dl_power_schedule(1.0, 1.0, 3.0), 3.0);
  EXPECT_EQ(dl_power_schedule(1.0, lr_schedule(1, 1.0, 1.0), 0.5), 0.5);
  const double mu = 0.5;
  for (std::size_t t : {1000u, 10000u, 100000u}) {
    const double eta = lr_schedule(t, mu, 0.0);
    const double direct = (1.0 - mu * eta) / (eta * eta);
    EXPECT_EQ(dl_power_schedule(mu, eta, 1.0), direct);
    const double asymptote = mu * mu * static_cast<double>(t) * static_cast<double>(t) / 4.0;
    EXPECT_NEAR(direct / asymptote, 1.0, 3.0 / static_cast<double>(t));
  }
}

TEST(SampleClients, SortedDistinctAndUniform) {
  const std::size_t N = 20, K = 8;
  RngStream rng(1, 0);
  std::vector<double> count(N, 0.0);
  const int rounds = 100000;
  for (int r = 0; r < rounds; ++r) {
    const auto s = sample_clients(N, K, rng);
    ASSERT_EQ(s.size(), K);
    ASSERT_TRUE(std::is_sorted(s.begin(), s.end()));
    ASSERT_EQ(std::adjacent_find(s.begin(), s.end()), s.end());
    for (std::size_t k : s) count[k] += 1.0;
  }
  const double p = static_cast<double>(K) / N;
  const double se = std::sqrt(p * (1 - p) / rounds);
  for (std::size_t k = 0; k < N; ++k) EXPECT_NEAR(count[k] / rounds, p, 3 * se) << "client " << k;
  EXPECT_THROW(sample_clients(3, 4, rng), InvalidArgument);
}

TEST(LocalSgd, FullBatchSingleStepIsGradientStep) {
  const ClientDataset d = make_regression_pool(30, 4, 0.1, RngStream(2, 0));
  const std::vector<double> w0{0.1, -0.2, 0.3, 0.0};
  RngStream rng(2, 1);
  const auto w1 = local_sgd(w0, d, LossModel::quadratic(), 1, 100, 0.05, rng);
  const auto g = quadratic_gradient(d, w0);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(w1[j], w0[j] - 0.05 * g[j], 1e-14);
}

TEST(LocalSgd, SmallStepDoesNotIncreaseLoss) {
  const ClientDataset d = make_regression_pool(64, 5, 0.1, RngStream(3, 0));
  const LossModel loss = LossModel::quadratic();
  const double L = loss.curvature(d).L;
  std::vector<double> w(5, 1.0);
  RngStream rng(3, 1);
  double prev = loss.value(w, d);
  for (int s = 0; s < 20; ++s) {
    w = local_sgd(w, d, loss, 1, 64, 0.5 / L, rng);
    const double v = loss.value(w, d);
    EXPECT_LE(v, prev);
    prev = v;
  }
}

TEST(LocalSgd, MiniBatchesCoverEachEpochWithoutReplacement) {
  // With x = e_r for row r and zero targets, the gradient touches only the rows in the batch.
  const std::size_t n = 12;
  ClientDataset d;
  d.features = RealMatrix(n, n);
  d.target.assign(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) d.features(r, r) = 1.0;
  const std::vector<double> w0(n, 1.0);
  RngStream rng(4, 0);
  const auto w = local_sgd(w0, d, LossModel::quadratic(), 3, 4, 1.0, rng);
  // Each coordinate is hit exactly once: w_j = 1 - 1/4.
  for (double v : w) EXPECT_NEAR(v, 0.75, 1e-15);
  EXPECT_THROW(local_sgd(w0, d, LossModel::quadratic(), 0, 4, 1.0, rng), InvalidArgument);
}

TEST(Differential, ReconstructionAndZero) {
  const std::vector<double> g{1.5, -2.0, 0.25};
  const std::vector<double> l{0.5, 1.0, 0.25};
  const auto x = compute_differential(g, l);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(g[i] - x[i], l[i]);
  for (double v : compute_differential(g, g)) EXPECT_EQ(v, 0.0);
}

TEST(AggregateGlobal, ZeroAndMeanOfLocals) {
  const std::vector<double> w{1.0, 2.0};
  EXPECT_EQ(aggregate_global(w, std::vector<double>{0.0, 0.0}, 4), w);
  const std::vector<std::vector<double>> locals{{0.0, 1.0}, {2.0, 5.0}, {4.0, 0.0}};
  std::vector<double> sum(2, 0.0);
  for (const auto& loc : locals) {
    const auto x = compute_differential(w, loc);
    for (std::size_t i = 0; i < 2; ++i) sum[i] += x[i];
  }
  const auto next = aggregate_global(w, sum, 3);
  EXPECT_NEAR(next[0], 2.0, 1e-15);
  EXPECT_NEAR(next[1], 2.0, 1e-15);
}

TEST(Normalization, ZeroRoundTripAndUnitPower) {
  const NormalizedPayload z = normalize_payload(RealMatrix(3, 2));
  EXPECT_EQ(z.scale, 1.0);
  EXPECT_EQ(z.x, RealMatrix(3, 2));
  const RealMatrix x(2, 2, {3.0, -1.0, 0.5, 8.0});
  const NormalizedPayload n = normalize_payload(x);
  double ms = 0.0;
  for (double v : n.x.values()) ms += v * v;
  EXPECT_NEAR(ms / 4.0, 1.0, 1e-12);
  const auto back = denormalize(n.x.values(), n.scale);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(back[i], x.values()[i], 1e-12 * std::abs(x.values()[i]));
}

TEST(FlConfigValidation, Errors) {
  FlConfig c = ideal_config(4, 5);
  EXPECT_THROW(c.validate(), ConfigError);
  c = ideal_config(4, 2);
  c.local_steps = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ideal_config(4, 2);
  c.rounds = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunFederatedTraining, RejectsMismatchedClients) {
  const ClientDataset pool = make_regression_pool(40, 3, 0.1, RngStream(5, 0));
  auto clients = split_equal(pool, 4);
  FlConfig c = ideal_config(5, 2);
  EXPECT_THROW(run_federated_training(c, LossModel::quadratic(), clients, nullptr, 1), ConfigError);
  c = ideal_config(4, 2);
  clients[3].target.pop_back();
  clients[3].features = RealMatrix(clients[3].target.size(), 3);
  EXPECT_THROW(run_federated_training(c, LossModel::quadratic(), clients, nullptr, 1), ConfigError);
}

TEST(RunFederatedTraining, IdealPathEqualsReferenceFedAvg) {
  const std::size_t N = 10, K = 4, d = 6;
  SyntheticTaskConfig task_cfg;
  task_cfg.dim = d;
  task_cfg.train_samples = 400;
  task_cfg.test_samples = 50;
  const SyntheticTask task = make_synthetic_classification(task_cfg, RngStream(6, 0));
  RngStream part_rng(6, 1);
  const auto clients = partition_label_skewed(task.train, N, part_rng);
  const LossModel loss = LossModel::logistic(0.01);
  FlConfig c = ideal_config(N, K);
  c.local_steps = 3;
  c.batch_size = 7;
  c.rounds = 25;
  c.mu = 0.5;
  c.gamma_shift = 4.0;
  const std::uint64_t seed = 99;
  const FlState state = run_federated_training(c, loss, clients, &task.test, seed);

  std::vector<double> w(d, 0.0);
  for (std::size_t t = 1; t <= c.rounds; ++t) {
    const RoundStreams streams(seed, t);
    RngStream sampling = streams.sampling;
    const auto chosen = sample_clients(N, K, sampling);
    const double eta = 2.0 / (c.mu * (static_cast<double>(t) + c.gamma_shift));
    std::vector<double> mean(d, 0.0);
    for (std::size_t k : chosen) {
      RngStream crng = streams.client(k);
      const auto local = local_sgd(w, clients[k], loss, c.local_steps, c.batch_size, eta, crng);
      for (std::size_t i = 0; i < d; ++i) mean[i] += local[i] / static_cast<double>(K);
    }
    w = mean;
  }
  ASSERT_EQ(state.w.size(), d);
  for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(state.w[i], w[i], 1e-12);
  EXPECT_EQ(state.round, c.rounds);
  EXPECT_EQ(state.history.size(), c.rounds);
}

TEST(RunFederatedTraining, IdealQuadraticMatchesGradientDescentOnAverage) {
  const std::size_t N = 5, d = 4;
  const ClientDataset pool = make_regression_pool(50, d, 0.2, RngStream(7, 0));
  const auto clients = split_equal(pool, N);
  FlConfig c = ideal_config(N, N);
  c.local_steps = 1;
  c.batch_size = 1000;
  c.rounds = 30;
  c.mu = 0.5;
  c.gamma_shift = 6.0;
  const FlState state = run_federated_training(c, LossModel::quadratic(), clients, nullptr, 3);
  std::vector<double> w(d, 0.0);
  std::size_t t = 0;
  auto check = [&](const FlState& s) {
    ++t;
    const double eta = 2.0 / (c.mu * (static_cast<double>(t) + c.gamma_shift));
    std::vector<double> g(d, 0.0);
    for (const auto& cl : clients) {
      const auto gk = quadratic_gradient(cl, w);
      for (std::size_t i = 0; i < d; ++i) g[i] += gk[i] / static_cast<double>(N);
    }
    for (std::size_t i = 0; i < d; ++i) w[i] -= eta * g[i];
    for (std::size_t i = 0; i < d; ++i) ASSERT_NEAR(s.w[i], w[i], 1e-10) << "round " << t;
  };
  run_federated_training(c, LossModel::quadratic(), clients, nullptr, 3, std::nullopt, check);
  EXPECT_EQ(t, c.rounds);
  for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(state.w[i], w[i], 1e-10);
}

TEST(RunFederatedTraining, EvaluationCadenceAndDeterminism) {
  const ClientDataset pool = make_regression_pool(40, 3, 0.1, RngStream(8, 0));
  const auto clients = split_equal(pool, 4);
  FlConfig c = ideal_config(4, 2);
  c.uplink.scheme = UplinkScheme::random_orthogonalization;
  c.downlink.scheme = DownlinkScheme::enhanced;
  c.rounds = 7;
  c.eval_every = 3;
  c.gamma_shift = 2.0;
  const FlState a = run_federated_training(c, LossModel::quadratic(), clients, &pool, 11);
  const FlState b = run_federated_training(c, LossModel::quadratic(), clients, &pool, 11);
  EXPECT_EQ(a.w, b.w);
  for (const RoundLog& log : a.history) {
    const bool evaluated = log.round % 3 == 0 || log.round == 7;
    EXPECT_EQ(std::isnan(log.train_loss), !evaluated) << log.round;
  }
}

TEST(RunFederatedTraining, EffectiveSinrRisesOnConvergingQuadraticRun) {
  const std::size_t N = 8, d = 10;
  const ClientDataset pool = make_regression_pool(800, d, 0.5, RngStream(9, 0));
  const auto clients = split_equal(pool, N);
  FlConfig c;
  c.total_clients = N;
  c.participants = N;
  c.local_steps = 1;
  c.batch_size = 10000;
  c.rounds = 100;
  c.antennas = 64;
  c.uplink.scheme = UplinkScheme::random_orthogonalization;
  c.uplink.snr_ul_db = 10.0;
  c.downlink.scheme = DownlinkScheme::ideal;
  const LossModel loss = LossModel::quadratic();
  const Curvature cv = loss.curvature(merge(clients));
  c.mu = cv.mu;
  c.gamma_shift = std::max(8.0 * cv.L / cv.mu, 1.0) - 1.0;
  const FlState state = run_federated_training(c, loss, clients, nullptr, 21);
  std::vector<double> rounds, sinr;
  for (const RoundLog& log : state.history) {
    rounds.push_back(static_cast<double>(log.round));
    sinr.push_back(log.effective_sinr);
  }
  EXPECT_GT(spearman(rounds, sinr), 0.8);
}

}  // namespace
}  // namespace otafl
