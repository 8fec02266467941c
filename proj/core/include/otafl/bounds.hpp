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
#include <vector>

#include "otafl/numerics.hpp"
#include "otafl/phy.hpp"

namespace otafl {

/// F = 2 snr Re(H^H H), real symmetric K x K.
RealMatrix fim_uplink(const ComplexMatrix& h_effective, double snr_linear);

/// Effective channel of the enhanced uplink: columns h_k / Re(g_k).
ComplexMatrix enhanced_effective_channel(const ComplexMatrix& h, const std::vector<Complex>& echo_gains);

/// trace(F^-1). Throws UnboundedCrlbError when F is singular or its
/// condition number exceeds 1e12.
double crlb_uplink_sum_mse(const RealMatrix& fim);

/// 1^T F^-1 1, the bound on the error of the summed estimate.
double crlb_uplink_aggregate(const RealMatrix& fim);

/// 1 / (2 snr |h_k^H h_s|^2). Throws UnboundedCrlbError when h_k is orthogonal to h_s.
double crlb_downlink(const ComplexVector& h_k, const ComplexVector& h_s, double snr_linear);

struct ConvergenceParams {
  std::size_t N = 1;
  std::size_t K = 1;
  std::size_t M = 1;
  std::size_t E = 1;
  std::size_t d = 1;
  double mu = 1.0;
  double L = 1.0;
  double Gamma = 0.0;
  double H_sq = 0.0;
  std::vector<double> Hk_sq;
  double snr_ul_linear = 1.0;
  double gamma_shift = 0.0;
  double delta0 = 0.0;

  /// Throws InvalidArgument when mu > L, K > N or a count is zero.
  void validate() const;
};

/// The six additive terms of B, in order: local variance, non-iid,
/// local drift, partial participation, uplink channel, downlink.
std::vector<double> convergence_constant_B_terms(const ConvergenceParams& p);
double convergence_constant_B(const ConvergenceParams& p);

/// (1 + K/M + 1/snr) H^2 / K
double convergence_constant_Btilde(std::size_t K, std::size_t M, double snr_linear, double H_sq);

/// L / (2 (t + gamma)) [4 B / mu^2 + (1 + gamma) delta0]
double convergence_bound_rhs(std::size_t t, const ConvergenceParams& p, double B);

/// (1/K^2)(K/M + v) sum_k ||x_k||^2 with v = 1/snr (unscaled) or 1/(M snr) (scaled).
double lemma3_variance_exact(const UplinkPayload& x, std::size_t K, std::size_t M,
                             double snr_ul_linear, NoiseConvention convention = NoiseConvention::unscaled);

/// (M K / (N^2 (K + M))) d / snr
double lemma4_variance_exact(std::size_t N, std::size_t K, std::size_t M, std::size_t d,
                             double snr_dl_linear);

}  // namespace otafl
