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

#include <cmath>
#include <set>
#include <vector>

#include "otafl/loss.hpp"

namespace otafl {
namespace {

ClientDataset small_dataset(std::size_t n, std::size_t dim, std::uint64_t seed, bool labels) {
  RngStream rng(seed, 0);
  ClientDataset d;
  d.features = RealMatrix(n, dim);
  d.target.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < dim; ++j) d.features(r, j) = rng.normal();
    d.target[r] = labels ? (rng.uniform() < 0.5 ? -1.0 : 1.0) : rng.normal();
  }
  return d;
}

std::vector<double> random_point(std::size_t dim, std::uint64_t seed) {
  RngStream rng(seed, 1);
  std::vector<double> w(dim);
  for (double& v : w) v = rng.normal();
  return w;
}

TEST(LossNames, RoundTrip) {
  for (LossKind k : {LossKind::quadratic, LossKind::logistic_l2, LossKind::svm_hinge_smoothed}) {
    EXPECT_EQ(parse_loss_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_loss_kind("hinge3"), InvalidArgument);
  EXPECT_THROW(LossModel(LossKind::logistic_l2, -1.0), InvalidArgument);
  EXPECT_THROW(LossModel(LossKind::logistic_l2, 0.0), InvalidArgument);
  EXPECT_THROW(LossModel(LossKind::svm_hinge_smoothed, 0.1, 0.0), InvalidArgument);
}

TEST(LossValue, HandComputed) {
  ClientDataset d;
  d.features = RealMatrix(2, 2, {1.0, 0.0, 0.0, 2.0});
  d.target = {1.0, -1.0};
  const std::vector<double> w{0.5, 0.25};
  // scores 0.5 and 0.5
  EXPECT_NEAR(LossModel::quadratic().value(w, d), 0.5 * (0.25 + 2.25) / 2.0, 1e-15);
  const double logistic = (std::log1p(std::exp(-0.5)) + std::log1p(std::exp(0.5))) / 2.0;
  // 0.5 * 2 * ||w||^2 = 0.3125
  EXPECT_NEAR(LossModel::logistic(2.0).value(w, d), logistic + 0.3125, 1e-14);
  // margins 0.5 and -0.5 with smoothing 1: 0.5*0.25 and 1 + 0.5 - 0.5
  EXPECT_NEAR(LossModel::svm(2.0, 1.0).value(w, d), (0.125 + 1.0) / 2.0 + 0.3125, 1e-15);
}

TEST(LossGradient, MatchesCentralDifferences) {
  const ClientDataset d = small_dataset(40, 6, 3, true);
  const std::vector<LossModel> losses{LossModel::quadratic(0.1), LossModel::logistic(0.05), LossModel::svm(0.02, 0.5)};
  for (const LossModel& loss : losses) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      std::vector<double> w = random_point(6, 10 + s);
      const std::vector<double> g = loss.full_gradient(w, d);
      for (std::size_t j = 0; j < 6; ++j) {
        const double h = 1e-6;
        const double w0 = w[j];
        w[j] = w0 + h;
        const double up = loss.value(w, d);
        w[j] = w0 - h;
        const double down = loss.value(w, d);
        w[j] = w0;
        EXPECT_NEAR(g[j], (up - down) / (2 * h), 1e-6) << to_string(loss.kind()) << " j=" << j;
      }
    }
  }
}

TEST(LossGradient, RowSubsetAveragesSelectedRows) {
  const ClientDataset d = small_dataset(10, 3, 4, true);
  const LossModel loss = LossModel::logistic(0.1);
  const std::vector<double> w = random_point(3, 5);
  const std::vector<std::size_t> rows{2, 7};
  std::vector<double> g(3);
  loss.gradient(w, d, rows, g);
  ClientDataset sub;
  sub.features = RealMatrix(2, 3);
  sub.target = {d.target[2], d.target[7]};
  for (std::size_t j = 0; j < 3; ++j) {
    sub.features(0, j) = d.features(2, j);
    sub.features(1, j) = d.features(7, j);
  }
  const std::vector<double> ref = loss.full_gradient(w, sub);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(g[j], ref[j], 1e-15);
}

TEST(Curvature, QuadraticIsExactForTwoByTwo) {
  ClientDataset d;
  d.features = RealMatrix(2, 2, {2.0, 1.0, 0.0, 1.0});
  d.target = {0.0, 0.0};
  // X^T X / n = [[2, 1], [1, 1]]; eigenvalues (3 +- sqrt 5) / 2.
  const Curvature c = LossModel::quadratic().curvature(d);
  EXPECT_NEAR(c.L, (3.0 + std::sqrt(5.0)) / 2.0, 1e-9);
  EXPECT_NEAR(c.mu, (3.0 - std::sqrt(5.0)) / 2.0, 1e-9);
  const Curvature r = LossModel::quadratic(0.5).curvature(d);
  EXPECT_NEAR(r.L, c.L + 0.5, 1e-9);
  EXPECT_NEAR(r.mu, c.mu + 0.5, 1e-9);
}

TEST(Curvature, LogisticBounds) {
  const ClientDataset d = small_dataset(50, 4, 6, true);
  const double top = feature_second_moment_bound(d.features);
  const Curvature c = LossModel::logistic(0.01).curvature(d);
  EXPECT_DOUBLE_EQ(c.mu, 0.01);
  EXPECT_NEAR(c.L, 0.01 + top / 4.0, 1e-9);
}

TEST(Accuracy, CountsSignAgreement) {
  ClientDataset d;
  d.features = RealMatrix(4, 1, {1.0, -1.0, 2.0, -3.0});
  d.target = {1.0, 1.0, 1.0, -1.0};
  EXPECT_DOUBLE_EQ(LossModel::accuracy(std::vector<double>{1.0}, d), 0.75);
  EXPECT_DOUBLE_EQ(LossModel::accuracy(std::vector<double>{-1.0}, d), 0.25);
}

TEST(Minimizers, QuadraticMinimizerZeroesGradient) {
  const ClientDataset d = small_dataset(60, 5, 7, false);
  const LossModel loss = LossModel::quadratic(0.01);
  const std::vector<double> w = quadratic_minimizer(loss, d);
  for (double g : loss.full_gradient(w, d)) EXPECT_NEAR(g, 0.0, 1e-10);
  const std::vector<double> gd = gradient_descent_minimizer(loss, d, 5000);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(gd[j], w[j], 1e-6);
}

TEST(Merge, ConcatenatesRows) {
  const ClientDataset a = small_dataset(3, 2, 8, true);
  const ClientDataset b = small_dataset(4, 2, 9, true);
  const std::vector<ClientDataset> parts{a, b};
  const ClientDataset m = merge(parts);
  ASSERT_EQ(m.size(), 7u);
  EXPECT_EQ(m.features(4, 1), b.features(1, 1));
  EXPECT_EQ(m.target[2], a.target[2]);
}

TEST(Synthetic, BalancedUnitTeacherAndScaledFeatures) {
  SyntheticTaskConfig cfg;
  cfg.dim = 50;
  cfg.train_samples = 4000;
  cfg.test_samples = 1000;
  cfg.label_noise = 0.1;
  const SyntheticTask task = make_synthetic_classification(cfg, RngStream(10, 0));
  double tn = 0.0;
  for (double v : task.teacher) tn += v * v;
  EXPECT_NEAR(tn, 1.0, 1e-12);
  std::size_t pos = 0;
  for (double y : task.train.target) {
    EXPECT_TRUE(y == 1.0 || y == -1.0);
    pos += y > 0 ? 1 : 0;
  }
  EXPECT_EQ(pos, 2000u);
  EXPECT_EQ(task.test.size(), 1000u);
  double e = 0.0;
  for (double v : task.train.features.values()) e += v * v;
  EXPECT_NEAR(e / 4000.0, 1.0, 0.05);
  EXPECT_GT(LossModel::accuracy(task.teacher, task.test), 0.7);
}

TEST(Partition, DisjointEqualSingleClass) {
  SyntheticTaskConfig cfg;
  cfg.dim = 5;
  cfg.train_samples = 200;
  cfg.test_samples = 10;
  const SyntheticTask task = make_synthetic_classification(cfg, RngStream(11, 0));
  RngStream rng(11, 1);
  const std::vector<ClientDataset> parts = partition_label_skewed(task.train, 10, rng);
  ASSERT_EQ(parts.size(), 10u);
  std::set<std::vector<double>> seen;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    EXPECT_EQ(parts[k].size(), parts[0].size());
    EXPECT_EQ(parts[k].class_id, static_cast<int>(k % 2));
    const double label = k % 2 == 0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < parts[k].size(); ++r) {
      EXPECT_EQ(parts[k].target[r], label);
      const auto row = parts[k].features.row(r);
      EXPECT_TRUE(seen.insert(std::vector<double>(row.begin(), row.end())).second);
    }
  }
  EXPECT_EQ(parts[0].size(), 20u);
}

TEST(Partition, TooFewSamplesIsConfigError) {
  const ClientDataset d = small_dataset(5, 2, 12, true);
  RngStream rng(12, 1);
  EXPECT_THROW(partition_label_skewed(d, 50, rng), ConfigError);
}

TEST(RegressionPool, ShapesAndDeterminism) {
  const ClientDataset a = make_regression_pool(30, 4, 0.5, RngStream(13, 0));
  const ClientDataset b = make_regression_pool(30, 4, 0.5, RngStream(13, 0));
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.target, b.target);
  EXPECT_EQ(a.dim(), 4u);
  EXPECT_THROW(make_regression_pool(0, 4, 0.5, RngStream(13, 0)), InvalidArgument);
}

}  // namespace
}  // namespace otafl
