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

#include "otafl/loss.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace otafl {

void ClientDataset::validate() const {
  if (target.empty()) throw InvalidArgument("dataset is empty");
  if (features.rows() != target.size()) throw InvalidArgument("dataset rows != targets");
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::quadratic: return "quadratic";
    case LossKind::logistic_l2: return "logistic_l2";
    case LossKind::svm_hinge_smoothed: return "svm_hinge_smoothed";
  }
  return "unknown";
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "quadratic") return LossKind::quadratic;
  if (name == "logistic_l2" || name == "logistic") return LossKind::logistic_l2;
  if (name == "svm_hinge_smoothed" || name == "svm") return LossKind::svm_hinge_smoothed;
  throw InvalidArgument("unknown loss '" + name + "'");
}

LossModel::LossModel(LossKind kind, double lambda, double smoothing)
    : kind_(kind), lambda_(lambda), smoothing_(smoothing) {
  if (!(lambda >= 0.0)) throw InvalidArgument("loss: lambda must be non-negative");
  if (kind != LossKind::quadratic && !(lambda > 0.0)) {
    throw InvalidArgument("loss: regularised losses need lambda > 0");
  }
  if (!(smoothing > 0.0)) throw InvalidArgument("loss: smoothing must be positive");
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double log1p_exp(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Loss and derivative of one sample as a function of the score s = x.w.
struct Pointwise {
  double value;
  double slope;
};

Pointwise pointwise(LossKind kind, double smoothing, double score, double y) {
  switch (kind) {
    case LossKind::quadratic: {
      const double r = score - y;
      return {0.5 * r * r, r};
    }
    case LossKind::logistic_l2: {
      const double m = y * score;
      return {log1p_exp(-m), -y * sigmoid(-m)};
    }
    case LossKind::svm_hinge_smoothed: {
      const double m = y * score;
      if (m >= 1.0) return {0.0, 0.0};
      if (m <= 1.0 - smoothing) return {1.0 - m - 0.5 * smoothing, -y};
      const double u = 1.0 - m;
      return {0.5 * u * u / smoothing, -y * u / smoothing};
    }
  }
  return {0.0, 0.0};
}

}  // namespace

double LossModel::value(std::span<const double> w, const ClientDataset& data) const {
  data.validate();
  if (w.size() != data.dim()) throw InvalidArgument("loss: model dimension mismatch");
  std::vector<double> per(data.size());
  for (std::size_t r = 0; r < data.size(); ++r) {
    per[r] = pointwise(kind_, smoothing_, dot(data.features.row(r), w), data.target[r]).value;
  }
  const double reg = 0.5 * lambda_ * dot(w, w);
  return pairwise_sum(per) / static_cast<double>(data.size()) + reg;
}

void LossModel::gradient(std::span<const double> w, const ClientDataset& data,
                         std::span<const std::size_t> rows, std::span<double> grad) const {
  if (w.size() != data.dim() || grad.size() != w.size()) {
    throw InvalidArgument("loss: gradient dimension mismatch");
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  const std::size_t count = rows.empty() ? data.size() : rows.size();
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t r = rows.empty() ? j : rows[j];
    const auto x = data.features.row(r);
    const double slope = pointwise(kind_, smoothing_, dot(x, w), data.target[r]).slope;
    if (slope == 0.0) continue;
    for (std::size_t i = 0; i < x.size(); ++i) grad[i] += slope * x[i];
  }
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = grad[i] * inv + lambda_ * w[i];
}

std::vector<double> LossModel::full_gradient(std::span<const double> w, const ClientDataset& data) const {
  std::vector<double> g(w.size());
  gradient(w, data, {}, g);
  return g;
}

namespace {

RealMatrix second_moment(const RealMatrix& x) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  RealMatrix s(d, d);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = x.row(r);
    for (std::size_t i = 0; i < d; ++i) {
      if (row[i] == 0.0) continue;
      double* si = s.data() + i * d;
      for (std::size_t j = i; j < d; ++j) si[j] += row[i] * row[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      s(i, j) *= inv;
      s(j, i) = s(i, j);
    }
  }
  return s;
}

double top_eigenvalue(const RealMatrix& a, double shift = 0.0, bool negate = false) {
  // Power iteration on (negate ? shift I - A : A).
  const std::size_t d = a.rows();
  std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d)));
  std::vector<double> next(d);
  double lambda = 0.0;
  for (int it = 0; it < 5000; ++it) {
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += a(i, j) * v[j];
      next[i] = negate ? shift * v[i] - acc : acc;
    }
    const double norm = std::sqrt(dot(next, next));
    if (norm == 0.0) return 0.0;
    const double estimate = dot(v, next);
    for (std::size_t i = 0; i < d; ++i) v[i] = next[i] / norm;
    if (it > 10 && std::abs(estimate - lambda) <= 1e-13 * std::abs(estimate)) {
      lambda = estimate;
      break;
    }
    lambda = estimate;
  }
  return lambda;
}

}  // namespace

double feature_second_moment_bound(const RealMatrix& features) {
  return top_eigenvalue(second_moment(features));
}

Curvature LossModel::curvature(const ClientDataset& data) const {
  data.validate();
  const RealMatrix s = second_moment(data.features);
  const double top = top_eigenvalue(s);
  switch (kind_) {
    case LossKind::quadratic: {
      const double bottom = top - top_eigenvalue(s, top, true);
      return {std::max(bottom, 0.0) + lambda_, top + lambda_};
    }
    case LossKind::logistic_l2: return {lambda_, lambda_ + 0.25 * top};
    case LossKind::svm_hinge_smoothed: return {lambda_, lambda_ + top / smoothing_};
  }
  return {};
}

double LossModel::accuracy(std::span<const double> w, const ClientDataset& data) {
  data.validate();
  std::size_t hits = 0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const double score = dot(data.features.row(r), w);
    if ((score >= 0.0) == (data.target[r] >= 0.0)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

ClientDataset merge(std::span<const ClientDataset> parts) {
  if (parts.empty()) throw InvalidArgument("merge: no datasets");
  std::size_t rows = 0;
  const std::size_t d = parts.front().dim();
  for (const auto& p : parts) {
    if (p.dim() != d) throw InvalidArgument("merge: feature dimension mismatch");
    rows += p.size();
  }
  ClientDataset out;
  out.features = RealMatrix(rows, d);
  out.target.reserve(rows);
  std::size_t r = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < p.size(); ++i, ++r) {
      std::copy(p.features.row(i).begin(), p.features.row(i).end(), out.features.row(r).begin());
      out.target.push_back(p.target[i]);
    }
  }
  return out;
}

std::vector<double> quadratic_minimizer(const LossModel& loss, const ClientDataset& data) {
  if (loss.kind() != LossKind::quadratic) throw InvalidArgument("quadratic_minimizer: loss is not quadratic");
  data.validate();
  RealMatrix a = second_moment(data.features);
  const std::size_t d = a.rows();
  for (std::size_t i = 0; i < d; ++i) a(i, i) += loss.lambda();
  std::vector<double> b(d);
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto x = data.features.row(r);
    for (std::size_t i = 0; i < d; ++i) b[i] += x[i] * data.target[r];
  }
  for (double& v : b) v /= static_cast<double>(data.size());
  const RealMatrix l = cholesky_factor(a);
  cholesky_solve_in_place(l, b);
  return b;
}

std::vector<double> gradient_descent_minimizer(const LossModel& loss, const ClientDataset& data,
                                               std::size_t steps) {
  const double step = 1.0 / loss.curvature(data).L;
  std::vector<double> w(data.dim(), 0.0);
  std::vector<double> g(data.dim());
  for (std::size_t s = 0; s < steps; ++s) {
    loss.gradient(w, data, {}, g);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= step * g[i];
  }
  return w;
}

SyntheticTask make_synthetic_classification(const SyntheticTaskConfig& cfg, RngStream rng) {
  if (cfg.dim == 0 || cfg.train_samples == 0 || cfg.test_samples == 0) {
    throw InvalidArgument("synthetic task: sizes must be positive");
  }
  SyntheticTask task;
  task.teacher.resize(cfg.dim);
  for (double& v : task.teacher) v = rng.normal();
  const double tn = std::sqrt(dot(task.teacher, task.teacher));
  for (double& v : task.teacher) v /= tn;

  const double feature_std = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
  // Draws until each class holds exactly half of the set.
  auto make = [&](std::size_t n) {
    ClientDataset out;
    out.features = RealMatrix(n, cfg.dim);
    out.target.assign(n, 0.0);
    const std::size_t want_pos = n / 2;
    const std::size_t want_neg = n - want_pos;
    std::size_t pos = 0;
    std::size_t neg = 0;
    std::vector<double> x(cfg.dim);
    while (pos + neg < n) {
      for (double& v : x) v = feature_std * rng.normal();
      const double label = dot(task.teacher, x) + cfg.label_noise * feature_std * rng.normal() >= 0.0 ? 1.0 : -1.0;
      if (label > 0.0 ? pos == want_pos : neg == want_neg) continue;
      const std::size_t r = pos + neg;
      std::copy(x.begin(), x.end(), out.features.row(r).begin());
      out.target[r] = label;
      (label > 0.0 ? pos : neg) += 1;
    }
    return out;
  };
  task.train = make(cfg.train_samples);
  task.test = make(cfg.test_samples);
  return task;
}

ClientDataset make_regression_pool(std::size_t samples, std::size_t dim, double noise_std, RngStream rng) {
  if (samples == 0 || dim == 0) throw InvalidArgument("regression pool: sizes must be positive");
  std::vector<double> teacher(dim);
  for (double& v : teacher) v = rng.normal();
  ClientDataset out;
  out.features = RealMatrix(samples, dim);
  out.target.resize(samples);
  for (std::size_t r = 0; r < samples; ++r) {
    auto row = out.features.row(r);
    for (double& v : row) v = rng.normal();
    out.target[r] = dot(row, teacher) + noise_std * rng.normal();
  }
  return out;
}

std::vector<ClientDataset> partition_label_skewed(const ClientDataset& data, std::size_t clients,
                                                  RngStream& rng) {
  data.validate();
  if (clients == 0) throw ConfigError("partition: need at least one client");
  std::map<double, std::vector<std::size_t>> by_class;
  for (std::size_t r = 0; r < data.size(); ++r) by_class[data.target[r]].push_back(r);
  std::vector<std::vector<std::size_t>> classes;
  for (auto& [label, rows] : by_class) classes.push_back(std::move(rows));
  const std::size_t n_classes = classes.size();

  std::size_t per_client = data.size() / clients;
  for (std::size_t c = 0; c < n_classes; ++c) {
    const std::size_t owners = clients / n_classes + (c < clients % n_classes ? 1 : 0);
    if (owners > 0) per_client = std::min(per_client, classes[c].size() / owners);
  }
  if (per_client == 0) throw ConfigError("partition: not enough samples per class for " +
                                         std::to_string(clients) + " clients");
  for (auto& rows : classes) {
    // Fisher-Yates shuffle.
    for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[rng.uniform_index(i)]);
  }
  std::vector<std::size_t> taken(n_classes, 0);
  std::vector<ClientDataset> out(clients);
  for (std::size_t k = 0; k < clients; ++k) {
    const std::size_t c = k % n_classes;
    ClientDataset& part = out[k];
    part.class_id = static_cast<int>(c);
    part.features = RealMatrix(per_client, data.dim());
    part.target.resize(per_client);
    for (std::size_t j = 0; j < per_client; ++j) {
      const std::size_t r = classes[c][taken[c]++];
      std::copy(data.features.row(r).begin(), data.features.row(r).end(), part.features.row(j).begin());
      part.target[j] = data.target[r];
    }
  }
  return out;
}

}  // namespace otafl
