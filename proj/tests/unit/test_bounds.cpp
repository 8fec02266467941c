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
#include <limits>
#include <vector>

#include "otafl/bounds.hpp"

namespace otafl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ComplexMatrix random_channel(std::size_t M, std::size_t K, RngStream& rng) {
  return draw_channel({M, K, ChannelKind::iid_rayleigh, 0.0}, rng).h;
}

RealMatrix real_identity_scaled(std::size_t n, double s) {
  RealMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = s;
  return m;
}

TEST(FimUplink, UnitChannel) {
  ComplexMatrix h(3, 1);
  h(0, 0) = Complex(0.6, 0.0);
  h(2, 0) = Complex(0.0, 0.8);
  const RealMatrix f = fim_uplink(h, 1.0);
  ASSERT_EQ(f.rows(), 1u);
  EXPECT_NEAR(f(0, 0), 2.0, 1e-15);
}

TEST(FimUplink, OrthonormalColumns) {
  ComplexMatrix h(4, 3);
  h(0, 0) = 1.0;
  h(1, 1) = Complex(0.0, 1.0);
  h(3, 2) = Complex(std::sqrt(0.5), std::sqrt(0.5));
  const RealMatrix f = fim_uplink(h, 7.0);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(f(i, j), i == j ? 14.0 : 0.0, 1e-14);
  }
}

TEST(FimUplink, RandomIsSymmetricPsd) {
  RngStream rng(1, 0);
  for (int t = 0; t < 50; ++t) {
    const RealMatrix f = fim_uplink(random_channel(8, 6, rng), 3.0);
    RealMatrix jitter = f;
    for (std::size_t i = 0; i < 6; ++i) {
      for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(f(i, j), f(j, i));
      jitter(i, i) += 1e-10;
    }
    EXPECT_NO_THROW(cholesky_factor(jitter));
  }
}

TEST(FimUplink, RejectsNonPositiveSnr) {
  EXPECT_THROW(fim_uplink(ComplexMatrix::identity(2), 0.0), InvalidArgument);
}

TEST(CrlbUplink, ScaledIdentity) {
  EXPECT_NEAR(crlb_uplink_sum_mse(real_identity_scaled(5, 2.0 * 3.0)), 5.0 / 6.0, 1e-15);
  EXPECT_NEAR(crlb_uplink_sum_mse(real_identity_scaled(1, 2.0)), 0.5, 1e-15);
  EXPECT_NEAR(crlb_uplink_aggregate(real_identity_scaled(5, 6.0)), 5.0 / 6.0, 1e-15);
}

TEST(CrlbUplink, TraceDominatesInverseDiagonal) {
  RngStream rng(2, 0);
  for (int t = 0; t < 100; ++t) {
    const RealMatrix f = fim_uplink(random_channel(16, 6, rng), 2.0);
    double inv_diag = 0.0;
    for (std::size_t k = 0; k < 6; ++k) inv_diag += 1.0 / f(k, k);
    EXPECT_GE(crlb_uplink_sum_mse(f), inv_diag * (1.0 - 1e-12));
  }
}

TEST(CrlbUplink, AggregateMatchesExplicitInverse) {
  RealMatrix f(2, 2, {4.0, 1.0, 1.0, 3.0});
  // inverse = [3 -1; -1 4] / 11
  EXPECT_NEAR(crlb_uplink_sum_mse(f), 7.0 / 11.0, 1e-14);
  EXPECT_NEAR(crlb_uplink_aggregate(f), 5.0 / 11.0, 1e-14);
}

TEST(CrlbUplink, SingularOrIllConditionedIsUnbounded) {
  EXPECT_THROW(crlb_uplink_sum_mse(RealMatrix(2, 2, {1.0, 1.0, 1.0, 1.0})), UnboundedCrlbError);
  EXPECT_THROW(crlb_uplink_sum_mse(RealMatrix(2, 2, {1.0, 0.0, 0.0, 1e-14})), UnboundedCrlbError);
  EXPECT_THROW(crlb_uplink_aggregate(RealMatrix(2, 2, {1.0, 0.0, 0.0, 1e-14})), UnboundedCrlbError);
}

TEST(EnhancedEffectiveChannel, DividesColumnsByRealEchoGain) {
  ComplexMatrix h(2, 2, {Complex(1, 1), 2.0, 3.0, Complex(0, 4)});
  const ComplexMatrix e = enhanced_effective_channel(h, {Complex(2.0, 5.0), Complex(-0.5, 1.0)});
  EXPECT_EQ(e(0, 0), Complex(0.5, 0.5));
  EXPECT_EQ(e(1, 1), Complex(0.0, -8.0));
  EXPECT_THROW(enhanced_effective_channel(h, {1.0}), InvalidArgument);
}

TEST(CrlbDownlink, Values) {
  ComplexVector h{Complex(0.6, 0.0), Complex(0.0, 0.8)};
  EXPECT_NEAR(crlb_downlink(h, h, 1.0), 0.5, 1e-15);
  ComplexVector h2{Complex(1.2, 0.0), Complex(0.0, 1.6)};
  EXPECT_NEAR(crlb_downlink(h, h2, 1.0), 0.5 / 4.0, 1e-15);
  EXPECT_THROW(crlb_downlink(ComplexVector{1.0, 0.0}, ComplexVector{0.0, 1.0}, 1.0), UnboundedCrlbError);
}

TEST(CrlbDownlink, EnhancedMonteCarloDominatesPerRealization) {
  const std::size_t M = 256, K = 8;
  RngStream rng(3, 0);
  const ChannelRealization r = draw_channel({M, K, ChannelKind::iid_rayleigh, 0.0}, rng);
  const CsiEstimates csi = estimate_csi(r, EstimationMode::perfect(), rng);
  DownlinkSchemeConfig cfg;
  cfg.scheme = DownlinkScheme::enhanced;
  cfg.snr_dl_db = 5.0;
  const std::vector<double> w(20000, 0.3);
  const DownlinkReception rx = downlink_broadcast_enhanced(r, csi.sum_channel, csi.echo_gains, w, cfg, rng);
  ComplexVector precoder = csi.sum_channel;
  for (auto& v : precoder) v /= std::sqrt(static_cast<double>(K));
  for (std::size_t k = 0; k < K; ++k) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double e2 = (rx.received(k, i) - w[i]) * (rx.received(k, i) - w[i]);
      s += e2;
      s2 += e2 * e2;
    }
    const double n = static_cast<double>(w.size());
    const double mse = s / n;
    const double se = std::sqrt((s2 / n - mse * mse) / n);
    const double bound = crlb_downlink(r.column(k), precoder, db_to_linear(cfg.snr_dl_db));
    EXPECT_GE(mse + 3 * se, bound) << "k=" << k;
  }
}

ConvergenceParams base_params() {
  ConvergenceParams p;
  p.N = 20;
  p.K = 8;
  p.M = 256;
  p.E = 1;
  p.d = 10;
  p.mu = 0.5;
  p.L = 1.0;
  p.Gamma = 1.0;
  p.H_sq = 1.0;
  p.Hk_sq.assign(20, 1.0);
  p.snr_ul_linear = 10.0;
  p.gamma_shift = 0.0;
  p.delta0 = 1.0;
  return p;
}

TEST(ConvergenceB, FullParticipationSingleStep) {
  ConvergenceParams p = base_params();
  p.N = p.K = 8;
  p.Gamma = 0.0;
  p.H_sq = 2.0;
  p.Hk_sq.assign(8, 2.0);
  const double n = 8.0, k = 8.0, m = 256.0;
  const double expected = 2.0 / n + (4.0 / k) * (k / m + 0.1) * 2.0 + m * k / (n * n * (k + m));
  EXPECT_NEAR(convergence_constant_B(p), expected, 1e-14);
  const auto terms = convergence_constant_B_terms(p);
  EXPECT_EQ(terms[2], 0.0);
  EXPECT_EQ(terms[3], 0.0);
}

TEST(ConvergenceB, ChannelTermVanishesInTheLimit) {
  ConvergenceParams p = base_params();
  p.N = p.K = 8;
  p.Gamma = 0.0;
  p.Hk_sq.assign(8, 1.0);
  p.M = 100000000;
  p.snr_ul_linear = 1e12;
  const auto terms = convergence_constant_B_terms(p);
  EXPECT_LT(terms[4], 1e-6);
  EXPECT_NEAR(terms[5], 8.0 / 64.0, 1e-6);
}

TEST(ConvergenceB, TermByTermRederivation) {
  const ConvergenceParams p = base_params();
  // N=20, K=8, M=256, E=1, Gamma=1, L=1, H^2=1, H_k^2=1, snr=10.
  const double t1 = 20.0 / 400.0;
  const double t2 = 6.0;
  const double t3 = 0.0;
  const double t4 = (12.0 / 19.0) * 0.5;
  const double t5 = 0.5 * (8.0 / 256.0 + 0.1);
  const double t6 = 2048.0 / (400.0 * 264.0);
  const auto terms = convergence_constant_B_terms(p);
  const std::vector<double> expected{t1, t2, t3, t4, t5, t6};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(terms[i], expected[i], 1e-14) << "term " << i;
  EXPECT_NEAR(convergence_constant_B(p), t1 + t2 + t3 + t4 + t5 + t6, 1e-13);
}

TEST(ConvergenceB, MonotoneInAntennasAndSnr) {
  ConvergenceParams p = base_params();
  double prev = kInf;
  for (std::size_t M : {4u, 16u, 64u, 256u, 1024u, 4096u}) {
    p.M = M;
    const double b = convergence_constant_B(p);
    EXPECT_LE(b, prev);
    prev = b;
  }
  p.M = 64;
  prev = kInf;
  for (double snr : {0.1, 1.0, 10.0, 100.0}) {
    p.snr_ul_linear = snr;
    const double b = convergence_constant_B(p);
    EXPECT_LE(b, prev);
    prev = b;
  }
}

TEST(ConvergenceB, ParticipationTermVanishesAtFullParticipation) {
  ConvergenceParams p = base_params();
  p.K = p.N;
  EXPECT_EQ(convergence_constant_B_terms(p)[3], 0.0);
  p.N = p.K = 1;
  p.Hk_sq.assign(1, 1.0);
  EXPECT_EQ(convergence_constant_B_terms(p)[3], 0.0);
}

TEST(ConvergenceB, ValidationErrors) {
  ConvergenceParams p = base_params();
  p.K = 30;
  EXPECT_THROW(convergence_constant_B(p), InvalidArgument);
  p = base_params();
  p.mu = 2.0;
  EXPECT_THROW(convergence_constant_B(p), InvalidArgument);
  p = base_params();
  p.Hk_sq.resize(3);
  EXPECT_THROW(convergence_constant_B(p), InvalidArgument);
}

TEST(ConvergenceBtilde, Values) {
  EXPECT_NEAR(convergence_constant_Btilde(8, 1000000000, 1e15, 2.0), 2.0 / 8.0, 1e-8);
  EXPECT_NEAR(convergence_constant_Btilde(16, 16, 1.0, 3.0), 9.0 / 16.0, 1e-15);
}

TEST(ConvergenceBtilde, FullParticipationUplinkPartRelation) {
  // Without the downlink term, B = H^2/K (1 + 4(K/M + 1/snr)).
  ConvergenceParams p = base_params();
  p.N = p.K = 8;
  p.Gamma = 0.0;
  p.H_sq = 1.5;
  p.Hk_sq.assign(8, 1.5);
  const auto terms = convergence_constant_B_terms(p);
  const double b_no_dl = terms[0] + terms[1] + terms[2] + terms[3] + terms[4];
  const double k = 8.0, m = 256.0, snr = 10.0, h2 = 1.5;
  EXPECT_NEAR(b_no_dl, h2 / k * (1.0 + 4.0 * (k / m + 1.0 / snr)), 1e-14);
  const double bt = convergence_constant_Btilde(8, 256, snr, h2);
  EXPECT_LE(b_no_dl, 4.0 * bt);
  EXPECT_GE(b_no_dl, bt);
}

TEST(ConvergenceRhs, Properties) {
  ConvergenceParams p = base_params();
  p.gamma_shift = 0.0;
  const double B = 3.0;
  EXPECT_NEAR(convergence_bound_rhs(1, p, B), 0.5 * (4.0 * B / 0.25 + 1.0), 1e-13);
  p.gamma_shift = 7.0;
  const double c = convergence_bound_rhs(1, p, B) * (1.0 + 7.0);
  double prev = kInf;
  for (std::size_t t : {1u, 2u, 5u, 50u, 1000u}) {
    const double r = convergence_bound_rhs(t, p, B);
    EXPECT_NEAR(r * (static_cast<double>(t) + 7.0), c, 1e-10 * c);
    EXPECT_LT(r, prev);
    prev = r;
  }
  EXPECT_LT(convergence_bound_rhs(100000000, p, B), 1e-5);
  EXPECT_THROW(convergence_bound_rhs(0, p, B), InvalidArgument);
}

TEST(AggregateErrorLaw, ClosedFormValues) {
  EXPECT_EQ(lemma3_variance_exact(RealMatrix(4, 3), 3, 16, 10.0), 0.0);
  EXPECT_NEAR(lemma3_variance_exact(RealMatrix(1, 1, {1.0}), 1, 1, 1e300), 1.0, 1e-12);
  const RealMatrix x(1, 2, {1.0, 1.0});
  EXPECT_NEAR(lemma3_variance_exact(x, 2, 8, 4.0, NoiseConvention::unscaled), (0.25 + 0.25) * 2.0 / 4.0, 1e-15);
  EXPECT_NEAR(lemma3_variance_exact(x, 2, 8, 4.0, NoiseConvention::scaled), (0.25 + 0.25 / 8.0) * 2.0 / 4.0, 1e-15);
}

TEST(AggregateErrorLaw, MonteCarloOnComplexProjection) {
  const std::size_t M = 64, K = 4, d = 1;
  RngStream rng(4, 0);
  RealMatrix x(d, K);
  double energy = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    x(0, k) = rng.normal();
    energy += x(0, k) * x(0, k);
  }
  // Unit mean-square payload.
  const double scale = std::sqrt(static_cast<double>(K * d) / energy);
  for (std::size_t k = 0; k < K; ++k) x(0, k) *= scale;
  double truth = 0.0;
  for (std::size_t k = 0; k < K; ++k) truth += x(0, k);

  UplinkSchemeConfig cfg;
  cfg.snr_ul_db = 10.0;
  cfg.noise = NoiseConvention::unscaled;
  const ChannelModel model({M, K, ChannelKind::iid_rayleigh, 0.0});
  double s = 0.0;
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    const ChannelRealization r = model.draw(rng);
    const AggregateEstimate e = uplink_aggregate_ro(r, r.sum_channel(), x, cfg, rng.substream(t));
    s += std::norm((e.projection[0] - truth) / static_cast<double>(K));
  }
  const double formula = lemma3_variance_exact(x, K, M, 10.0, NoiseConvention::unscaled);
  EXPECT_NEAR(s / trials, formula, 0.05 * formula);
}

TEST(DownlinkNoiseLaw, ClosedFormValues) {
  EXPECT_EQ(lemma4_variance_exact(8, 8, 256, 16, kInf), 0.0);
  EXPECT_NEAR(lemma4_variance_exact(1, 1, 1000000000, 16, 4.0), 4.0, 1e-6);
  EXPECT_NEAR(lemma4_variance_exact(8, 8, 256, 16, 10.0), 256.0 * 8.0 / (64.0 * 264.0) * 1.6, 1e-15);
}

}  // namespace
}  // namespace otafl
