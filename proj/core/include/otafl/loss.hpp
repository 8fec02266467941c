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
#include <span>
#include <string>
#include <vector>

#include "otafl/numerics.hpp"
#include "otafl/rng.hpp"

namespace otafl {

/// Feature rows with a real target each (+-1 for classification).
struct ClientDataset {
  RealMatrix features;
  std::vector<double> target;
  /// Class shared by every sample under label skew, -1 otherwise.
  int class_id = -1;

  std::size_t size() const noexcept { return target.size(); }
  std::size_t dim() const noexcept { return features.cols(); }
  void validate() const;
};

enum class LossKind { quadratic, logistic_l2, svm_hinge_smoothed };

std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& name);

struct Curvature {
  double mu = 0.0;
  double L = 0.0;
};

/// Per-sample losses averaged over a dataset plus (lambda/2)||w||^2.
///  quadratic:          0.5 (x.w - y)^2
///  logistic_l2:        log(1 + exp(-y x.w))
///  svm_hinge_smoothed: Huber-smoothed hinge on the margin y x.w
class LossModel {
 public:
  LossModel(LossKind kind, double lambda, double smoothing = 1.0);

  static LossModel quadratic(double ridge = 0.0) { return {LossKind::quadratic, ridge}; }
  static LossModel logistic(double lambda) { return {LossKind::logistic_l2, lambda}; }
  static LossModel svm(double lambda, double smoothing) {
    return {LossKind::svm_hinge_smoothed, lambda, smoothing};
  }

  LossKind kind() const noexcept { return kind_; }
  double lambda() const noexcept { return lambda_; }
  double smoothing() const noexcept { return smoothing_; }

  double value(std::span<const double> w, const ClientDataset& data) const;
  /// Mean over `rows` (all rows when empty); result written to `grad`.
  void gradient(std::span<const double> w, const ClientDataset& data,
                std::span<const std::size_t> rows, std::span<double> grad) const;
  std::vector<double> full_gradient(std::span<const double> w, const ClientDataset& data) const;

  /// Exact extreme eigenvalues for quadratic; lambda and a data-dependent
  /// upper bound for the others.
  Curvature curvature(const ClientDataset& data) const;

  /// Fraction of rows where sign(x.w) matches the sign of the target.
  static double accuracy(std::span<const double> w, const ClientDataset& data);

 private:
  LossKind kind_;
  double lambda_;
  double smoothing_;
};

/// Concatenates client datasets.
ClientDataset merge(std::span<const ClientDataset> parts);

/// Minimiser of the quadratic loss over `data` (normal equations).
std::vector<double> quadratic_minimizer(const LossModel& loss, const ClientDataset& data);

/// Full-batch gradient descent with step 1/L.
std::vector<double> gradient_descent_minimizer(const LossModel& loss, const ClientDataset& data,
                                               std::size_t steps);

/// Largest eigenvalue of X^T X / n by power iteration.
double feature_second_moment_bound(const RealMatrix& features);

struct SyntheticTaskConfig {
  std::size_t dim = 784;
  std::size_t train_samples = 10000;
  std::size_t test_samples = 2000;
  double label_noise = 0.3;
};

struct SyntheticTask {
  ClientDataset train;
  ClientDataset test;
  std::vector<double> teacher;
};

/// Features N(0, I/dim); labels sign(teacher.x + noise) with a unit-norm teacher.
SyntheticTask make_synthetic_classification(const SyntheticTaskConfig& cfg, RngStream rng);

/// Linear-regression pool: y = teacher.x + noise, features N(0, I).
ClientDataset make_regression_pool(std::size_t samples, std::size_t dim, double noise_std,
                                   RngStream rng);

/// N disjoint equal-size single-class clients; classes alternate across
/// clients (client 0 gets -1). Throws ConfigError when a class runs short.
std::vector<ClientDataset> partition_label_skewed(const ClientDataset& data, std::size_t clients,
                                                  RngStream& rng);

}  // namespace otafl
