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

#include "otafl/bounds.hpp"

#include <cmath>
#include <limits>

namespace otafl {

RealMatrix fim_uplink(const ComplexMatrix& h_effective, double snr_linear) {
  if (!(snr_linear > 0.0)) throw InvalidArgument("fim_uplink: snr must be positive");
  const ComplexMatrix g = gram(h_effective);
  RealMatrix f(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.rows(); ++i) {
    for (std::size_t j = 0; j < g.cols(); ++j) f(i, j) = 2.0 * snr_linear * g(i, j).real();
  }
  return f;
}

ComplexMatrix enhanced_effective_channel(const ComplexMatrix& h, const std::vector<Complex>& echo_gains) {
  if (echo_gains.size() != h.cols()) throw InvalidArgument("echo gain count != K");
  ComplexMatrix out = h;
  for (std::size_t m = 0; m < h.rows(); ++m) {
    for (std::size_t k = 0; k < h.cols(); ++k) out(m, k) /= echo_gains[k].real();
  }
  return out;
}

namespace {

RealMatrix bounded_inverse(const RealMatrix& fim) {
  const std::size_t n = fim.rows();
  if (n == 0 || fim.cols() != n) throw InvalidArgument("FIM must be square and non-empty");
  RealMatrix l;
  try {
    l = cholesky_factor(fim);
  } catch (const SingularMatrixError&) {
    throw UnboundedCrlbError("Fisher information is singular");
  }
  RealMatrix inv(n, n);
  std::vector<double> col(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(col.begin(), col.end(), 0.0);
    col[j] = 1.0;
    cholesky_solve_in_place(l, col);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  double nf = 0.0;
  double ni = 0.0;
  for (double v : fim.values()) nf += v * v;
  for (double v : inv.values()) ni += v * v;
  // Frobenius condition number, an upper bound on the 2-norm one.
  const double cond = std::sqrt(nf) * std::sqrt(ni);
  if (!std::isfinite(cond) || cond > 1e12) {
    throw UnboundedCrlbError("Fisher information condition number exceeds 1e12");
  }
  return inv;
}

}  // namespace

double crlb_uplink_sum_mse(const RealMatrix& fim) {
  const RealMatrix inv = bounded_inverse(fim);
  double t = 0.0;
  for (std::size_t i = 0; i < inv.rows(); ++i) t += inv(i, i);
  return t;
}

double crlb_uplink_aggregate(const RealMatrix& fim) {
  const RealMatrix inv = bounded_inverse(fim);
  double s = 0.0;
  for (double v : inv.values()) s += v;
  return s;
}

double crlb_downlink(const ComplexVector& h_k, const ComplexVector& h_s, double snr_linear) {
  if (!(snr_linear > 0.0)) throw InvalidArgument("crlb_downlink: snr must be positive");
  const double gain = std::norm(hermitian_inner(h_k, h_s));
  const double scale = norm_squared(h_k) * norm_squared(h_s);
  if (gain == 0.0 || gain <= 1e-24 * scale) throw UnboundedCrlbError("h_k is orthogonal to h_s");
  return 1.0 / (2.0 * snr_linear * gain);
}

void ConvergenceParams::validate() const {
  if (N == 0 || K == 0 || M == 0 || E == 0 || d == 0) throw InvalidArgument("convergence: counts must be positive");
  if (K > N) throw InvalidArgument("convergence: K must not exceed N");
  if (!(mu > 0.0) || !(L > 0.0) || mu > L) throw InvalidArgument("convergence: need 0 < mu <= L");
  if (Gamma < 0.0 || H_sq < 0.0 || gamma_shift < 0.0 || delta0 < 0.0) {
    throw InvalidArgument("convergence: Gamma, H^2, gamma and delta0 must be non-negative");
  }
  if (!(snr_ul_linear > 0.0)) throw InvalidArgument("convergence: snr must be positive");
  if (!Hk_sq.empty() && Hk_sq.size() != N) throw InvalidArgument("convergence: need one H_k^2 per client");
}

std::vector<double> convergence_constant_B_terms(const ConvergenceParams& p) {
  p.validate();
  const double n = static_cast<double>(p.N);
  const double k = static_cast<double>(p.K);
  const double m = static_cast<double>(p.M);
  const double e = static_cast<double>(p.E);
  double hk_sum = 0.0;
  if (p.Hk_sq.empty()) {
    hk_sum = n * p.H_sq;
  } else {
    for (double v : p.Hk_sq) hk_sum += v;
  }
  const double participation = p.N > 1 ? (n - k) / (n - 1.0) : 0.0;
  return {
      hk_sum / (n * n),
      6.0 * p.L * p.Gamma,
      8.0 * (e - 1.0) * (e - 1.0) * p.H_sq,
      participation * (4.0 / k) * e * e * p.H_sq,
      (4.0 / k) * (k / m + 1.0 / p.snr_ul_linear) * e * e * p.H_sq,
      m * k / (n * n * (k + m)),
  };
}

double convergence_constant_B(const ConvergenceParams& p) {
  double b = 0.0;
  for (double t : convergence_constant_B_terms(p)) b += t;
  return b;
}

double convergence_constant_Btilde(std::size_t K, std::size_t M, double snr_linear, double H_sq) {
  if (K == 0 || M == 0) throw InvalidArgument("Btilde: K and M must be positive");
  const double k = static_cast<double>(K);
  return (1.0 + k / static_cast<double>(M) + 1.0 / snr_linear) * H_sq / k;
}

double convergence_bound_rhs(std::size_t t, const ConvergenceParams& p, double B) {
  if (t == 0) throw InvalidArgument("bound_rhs: t must be at least 1");
  const double shift = static_cast<double>(t) + p.gamma_shift;
  return p.L / (2.0 * shift) * (4.0 * B / (p.mu * p.mu) + (1.0 + p.gamma_shift) * p.delta0);
}

double lemma3_variance_exact(const UplinkPayload& x, std::size_t K, std::size_t M,
                             double snr_ul_linear, NoiseConvention convention) {
  if (K == 0 || M == 0) throw InvalidArgument("aggregate error: K and M must be positive");
  if (x.cols() != K) throw InvalidArgument("aggregate error: payload column count != K");
  double energy = 0.0;
  for (double v : x.values()) energy += v * v;
  const double k = static_cast<double>(K);
  const double m = static_cast<double>(M);
  double noise = 1.0 / snr_ul_linear;
  if (convention == NoiseConvention::scaled) noise /= m;
  return (k / m + noise) * energy / (k * k);
}

double lemma4_variance_exact(std::size_t N, std::size_t K, std::size_t M, std::size_t d,
                             double snr_dl_linear) {
  if (N == 0 || K == 0 || M == 0) throw InvalidArgument("downlink noise: counts must be positive");
  const double n = static_cast<double>(N);
  const double k = static_cast<double>(K);
  const double m = static_cast<double>(M);
  return m * k / (n * n * (k + m)) * static_cast<double>(d) / snr_dl_linear;
}

}  // namespace otafl
