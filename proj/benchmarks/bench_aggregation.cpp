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

#include <benchmark/benchmark.h>

#include "otafl/channel.hpp"
#include "otafl/phy.hpp"

namespace {

constexpr std::size_t kClients = 8;
constexpr std::size_t kSlots = 16;

struct Fixture {
  otafl::ChannelRealization real;
  otafl::ComplexVector hs;
  otafl::ComplexMatrix y;
  double variance = 0.1;

  explicit Fixture(std::size_t M) {
    otafl::RngStream rng(7, M);
    real = otafl::draw_channel({M, kClients, otafl::ChannelKind::iid_rayleigh, 0.0}, rng);
    hs = real.sum_channel();
    otafl::RealMatrix x(kSlots, kClients);
    for (std::size_t i = 0; i < kSlots; ++i) {
      for (std::size_t k = 0; k < kClients; ++k) x(i, k) = rng.normal();
    }
    const auto noise = otafl::draw_uplink_noise(M, kSlots, variance, rng);
    y = otafl::superimpose(real.h, x, std::vector<double>(kClients, 1.0), noise);
  }
};

void BM_RandomOrthogonalization(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(otafl::project_rows(f.hs, f.y));
}

void BM_Enhanced(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  otafl::RngStream rng(1, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(otafl::estimate_echo_gains(f.real, f.hs, otafl::EstimationMode::perfect(), rng));
    benchmark::DoNotOptimize(otafl::project_rows(f.hs, f.y));
  }
}

void BM_MmseGram(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(otafl::mmse_detect(f.real.h, f.y, f.variance, otafl::MmseForm::gram));
  }
}

void BM_MmseCovariance(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(otafl::mmse_detect(f.real.h, f.y, f.variance, otafl::MmseForm::covariance));
  }
}

void BM_ChannelDraw(benchmark::State& state) {
  const otafl::ChannelModel model({static_cast<std::size_t>(state.range(0)), kClients,
                                   otafl::ChannelKind::iid_rayleigh, 0.0});
  otafl::RngStream rng(3, 3);
  for (auto _ : state) benchmark::DoNotOptimize(model.draw(rng));
}

}  // namespace

BENCHMARK(BM_RandomOrthogonalization)->RangeMultiplier(2)->Range(64, 1024);
BENCHMARK(BM_Enhanced)->RangeMultiplier(2)->Range(64, 1024);
BENCHMARK(BM_MmseGram)->RangeMultiplier(2)->Range(64, 1024);
BENCHMARK(BM_MmseCovariance)->RangeMultiplier(2)->Range(64, 512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ChannelDraw)->RangeMultiplier(4)->Range(64, 1024);

BENCHMARK_MAIN();
