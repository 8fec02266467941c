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

#include "otafl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "otafl/dataset_io.hpp"

namespace otafl {

std::string format_double(double v) {
  if (!std::isfinite(v)) return "unbounded";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "unbounded";
  return std::string(buf, end);
}

void write_csv(std::ostream& out, std::span<const RunRecord> records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.experiment << ',' << r.scheme << ',' << r.M << ',' << r.K << ',' << format_double(r.snr_db) << ','
        << r.metric << ',' << format_double(r.value) << ',' << r.trials << ',' << r.seed << ','
        << r.noise_convention << ',' << r.csi_mode << '\n';
  }
}

void write_csv_file(const std::filesystem::path& path, std::span<const RunRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file " + path.string());
  write_csv(out, records);
  out.flush();
  if (!out) throw ConfigError("failed writing output file " + path.string());
}

std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& f) {
  workers = std::min(resolve_workers(workers), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_index = std::numeric_limits<std::size_t>::max();
  std::exception_ptr failure;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

McStat summarize(std::span<const double> samples) {
  McStat s;
  const std::size_t n = samples.size();
  if (n == 0) return s;
  s.mean = pairwise_sum(samples) / static_cast<double>(n);
  if (!std::isfinite(s.mean)) {
    s.se = std::numeric_limits<double>::infinity();
    return s;
  }
  if (n < 2) return s;
  std::vector<double> dev(n);
  for (std::size_t i = 0; i < n; ++i) dev[i] = (samples[i] - s.mean) * (samples[i] - s.mean);
  const double var = pairwise_sum(dev) / static_cast<double>(n - 1);
  s.se = std::sqrt(var / static_cast<double>(n));
  return s;
}

std::uint64_t CellSpec::stream() const {
  return mix64(M) ^ mix64(0x9E3779B97F4A7C15ULL + K) ^ mix64(std::bit_cast<std::uint64_t>(snr_db) + 0x51);
}

std::string CellSpec::describe() const {
  return "cell M=" + std::to_string(M) + " K=" + std::to_string(K) + " snr_db=" + format_double(snr_db) +
         " channel=" + to_string(channel) + " rho=" + format_double(rho) + " csi=" + estimation.label();
}

const SchemeCellResult& CellResult::at(const std::string& scheme) const {
  for (const auto& s : schemes) {
    if (s.scheme == scheme) return s;
  }
  throw InvalidArgument("cell has no scheme '" + scheme + "'");
}

std::string uplink_label(UplinkScheme s) { return "ul_" + to_string(s); }
std::string downlink_label(DownlinkScheme s) { return "dl_" + to_string(s); }

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct TrialOut {
  std::vector<double> mse;
  std::vector<double> crlb;
  std::vector<double> crlb_trace;
  double signal_power = 0.0;
  double disturbance_power = 0.0;
  double lemma3_mc = 0.0;
  double lemma3_formula = 0.0;
};

double uplink_bound(const RealMatrix& fim, bool trace) {
  try {
    return trace ? crlb_uplink_sum_mse(fim) : crlb_uplink_aggregate(fim);
  } catch (const UnboundedCrlbError&) {
    return kInf;
  }
}

TrialOut run_trial(const CellSpec& spec, const ChannelModel& model, std::size_t trial) {
  const RngStream base = RngStream(spec.seed, spec.stream()).substream(trial);
  RngStream ch_rng = base.substream(1);
  RngStream csi_rng = base.substream(2);
  RngStream pay_rng = base.substream(3);
  const RngStream ul_rng = base.substream(4);
  const RngStream dl_rng = base.substream(5);

  const std::size_t K = spec.K;
  const std::size_t d = spec.slots;
  const ChannelRealization real = model.draw(ch_rng);
  const CsiEstimates csi = estimate_csi(real, spec.estimation, csi_rng);

  RealMatrix x(d, K);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < K; ++k) x(i, k) = pay_rng.normal();
  }
  std::vector<double> w(d);
  for (double& v : w) v = pay_rng.normal();
  std::vector<double> truth(d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < K; ++k) truth[i] += x(i, k);
  }

  UplinkSchemeConfig ucfg;
  ucfg.snr_ul_db = spec.snr_db;
  ucfg.noise = spec.noise;
  ucfg.noiseless = spec.noiseless;
  const double ul_var = ucfg.noise_variance(spec.M);
  const double snr = db_to_linear(spec.snr_db);

  TrialOut out;
  for (UplinkScheme scheme : spec.uplink) {
    ucfg.scheme = scheme;
    AggregateEstimate est;
    if (scheme == UplinkScheme::mmse_full_csi) {
      est = uplink_aggregate_mmse(real, x, ucfg, ul_rng, spec.mmse_form);
    } else {
      est = uplink_aggregate(real, csi, x, ucfg, ul_rng);
    }
    double se = 0.0;
    for (std::size_t i = 0; i < d; ++i) se += (est.value[i] - truth[i]) * (est.value[i] - truth[i]);
    out.mse.push_back(se / static_cast<double>(d));

    if (spec.noiseless || scheme == UplinkScheme::ideal) {
      out.crlb.push_back(0.0);
      out.crlb_trace.push_back(0.0);
    } else {
      const ComplexMatrix h_eff =
          scheme == UplinkScheme::enhanced ? enhanced_effective_channel(real.h, csi.echo_gains) : real.h;
      const RealMatrix fim = fim_uplink(h_eff, 1.0 / ul_var);
      out.crlb.push_back(uplink_bound(fim, false));
      out.crlb_trace.push_back(uplink_bound(fim, true));
    }

    if (scheme == UplinkScheme::random_orthogonalization) {
      double lemma = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const SlotComponents& c = est.components[i];
        out.signal_power += c.signal * c.signal;
        out.disturbance_power += std::norm(c.interference + c.estimation_error + c.noise);
        lemma += std::norm(est.projection[i] - truth[i]);
      }
      out.lemma3_mc = lemma / static_cast<double>(K * K);
      out.lemma3_formula = lemma3_variance_exact(x, K, spec.M, spec.noiseless ? kInf : snr, spec.noise);
    }
  }

  DownlinkSchemeConfig dcfg;
  dcfg.snr_dl_db = spec.snr_db;
  dcfg.noiseless = spec.noiseless;
  const double root_k = std::sqrt(static_cast<double>(K));
  for (DownlinkScheme scheme : spec.downlink) {
    dcfg.scheme = scheme;
    const DownlinkReception rx = downlink_broadcast(real, csi, w, dcfg, dl_rng);
    double se = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < d; ++i) se += (rx.received(k, i) - w[i]) * (rx.received(k, i) - w[i]);
    }
    out.mse.push_back(se / static_cast<double>(d * K));
    double bound = 0.0;
    if (!spec.noiseless && scheme != DownlinkScheme::ideal) {
      ComplexVector precoder = csi.sum_channel;
      if (scheme == DownlinkScheme::enhanced) {
        for (Complex& v : precoder) v /= root_k;
      }
      for (std::size_t k = 0; k < K; ++k) {
        try {
          bound += crlb_downlink(real.column(k), precoder, snr);
        } catch (const UnboundedCrlbError&) {
          bound = kInf;
        }
      }
      bound /= static_cast<double>(K);
    }
    out.crlb.push_back(bound);
    out.crlb_trace.push_back(bound);
  }
  return out;
}

}  // namespace

CellResult run_mse_cell(const CellSpec& spec) {
  if (spec.trials == 0 || spec.slots == 0) throw InvalidArgument("cell: trials and slots must be positive");
  const ChannelModel model({spec.M, spec.K, spec.channel, spec.rho});
  std::vector<TrialOut> trials(spec.trials);
  try {
    parallel_for(spec.trials, spec.workers, [&](std::size_t t) { trials[t] = run_trial(spec, model, t); });
  } catch (const NumericError& e) {
    throw NumericError(spec.describe() + ": " + e.what());
  }

  CellResult result;
  result.spec = spec;
  std::vector<std::string> names;
  for (auto s : spec.uplink) names.push_back(uplink_label(s));
  for (auto s : spec.downlink) names.push_back(downlink_label(s));
  const std::size_t n = spec.trials;
  std::vector<double> a(n), b(n), c(n), g(n), gt(n);
  for (std::size_t j = 0; j < names.size(); ++j) {
    SchemeCellResult r;
    r.scheme = names[j];
    for (std::size_t t = 0; t < n; ++t) {
      a[t] = trials[t].mse[j];
      b[t] = trials[t].crlb[j];
      c[t] = trials[t].crlb_trace[j];
      g[t] = a[t] - b[t];
      gt[t] = a[t] - c[t];
      if (!std::isfinite(b[t]) || !std::isfinite(c[t])) r.unbounded = true;
    }
    r.mse = summarize(a);
    r.crlb = summarize(b);
    r.crlb_trace = summarize(c);
    r.gap = summarize(g);
    r.gap_trace = summarize(gt);
    result.schemes.push_back(r);
  }

  const double snr = db_to_linear(spec.snr_db);
  // Formula evaluated at the per-element SNR of the scaled convention.
  const double snr_scaled = spec.noise == NoiseConvention::scaled ? snr : snr / static_cast<double>(spec.M);
  result.sinr_formula = spec.noiseless ? approx_sinr(spec.M, spec.K, kInf) : approx_sinr(spec.M, spec.K, snr_scaled);
  if (std::find(spec.uplink.begin(), spec.uplink.end(), UplinkScheme::random_orthogonalization) !=
      spec.uplink.end()) {
    for (std::size_t t = 0; t < n; ++t) {
      a[t] = trials[t].signal_power;
      b[t] = trials[t].disturbance_power;
      g[t] = trials[t].lemma3_mc;
      gt[t] = trials[t].lemma3_formula;
    }
    result.sinr_mc = summarize(a).mean / summarize(b).mean;
    result.lemma3_mc = summarize(g);
    result.lemma3_formula = summarize(gt);
  }
  return result;
}

namespace {

RunRecord make_record(const CellSpec& spec, std::string experiment, std::string scheme, std::string metric,
                      double value) {
  RunRecord r;
  r.experiment = std::move(experiment);
  r.scheme = std::move(scheme);
  r.M = spec.M;
  r.K = spec.K;
  r.snr_db = spec.snr_db;
  r.metric = std::move(metric);
  r.value = value;
  r.trials = spec.trials;
  r.seed = spec.seed;
  r.noise_convention = to_string(spec.noise);
  r.csi_mode = spec.estimation.label();
  return r;
}

double to_db(double v) { return v > 0.0 && std::isfinite(v) ? linear_to_db(v) : (v == 0.0 ? -kInf : kInf); }

void append_mse_rows(std::vector<RunRecord>& out, const CellResult& cell, const std::string& experiment,
                     bool with_bounds) {
  for (const auto& s : cell.schemes) {
    out.push_back(make_record(cell.spec, experiment, s.scheme, "mse", s.mse.mean));
    out.push_back(make_record(cell.spec, experiment, s.scheme, "mse_db", to_db(s.mse.mean)));
    if (!with_bounds) continue;
    const double crlb = s.unbounded ? kInf : s.crlb.mean;
    out.push_back(make_record(cell.spec, experiment, s.scheme, "crlb", crlb));
    out.push_back(make_record(cell.spec, experiment, s.scheme, "crlb_db", to_db(crlb)));
  }
}

void append_trace_rows(std::vector<RunRecord>& out, const CellResult& cell, const std::string& experiment) {
  for (const auto& s : cell.schemes) {
    if (s.scheme.rfind("ul_", 0) != 0) continue;
    const double crlb = s.unbounded ? kInf : s.crlb_trace.mean;
    out.push_back(make_record(cell.spec, experiment, s.scheme, "crlb", crlb));
    out.push_back(make_record(cell.spec, experiment, s.scheme, "crlb_db", to_db(crlb)));
  }
}

CellSpec base_spec(const ExperimentConfig& cfg) {
  CellSpec spec;
  spec.noise = cfg.noise_convention;
  spec.slots = cfg.slots;
  spec.trials = cfg.trials;
  spec.seed = cfg.master_seed;
  spec.workers = cfg.workers;
  spec.uplink = cfg.uplink_schemes;
  spec.downlink = cfg.downlink_schemes;
  spec.mmse_form = MmseForm::gram;
  return spec;
}

std::vector<std::size_t> antenna_grid(const ExperimentConfig& cfg, bool full_grid) {
  std::vector<std::size_t> grid = cfg.M;
  if (full_grid) {
    for (auto m : cfg.full_grid_M) {
      if (std::find(grid.begin(), grid.end(), m) == grid.end()) grid.push_back(m);
    }
  }
  return grid;
}

}  // namespace

std::vector<RunRecord> run_mse_sweep(const ExperimentConfig& cfg, bool full_grid) {
  cfg.validate();
  std::vector<RunRecord> out;
  CellSpec spec = base_spec(cfg);
  for (std::size_t M : antenna_grid(cfg, full_grid)) {
    for (std::size_t K : cfg.K) {
      for (double snr : cfg.snr_db) {
        spec.M = M;
        spec.K = K;
        spec.snr_db = snr;
        const CellResult cell = run_mse_cell(spec);
        append_mse_rows(out, cell, "mse_sweep", true);
        append_trace_rows(out, cell, "mse_sweep/crlb_trace");
        if (cell.sinr_mc) {
          const std::string ro = uplink_label(UplinkScheme::random_orthogonalization);
          out.push_back(make_record(spec, "mse_sweep", ro, "sinr_mc", *cell.sinr_mc));
          out.push_back(make_record(spec, "mse_sweep", ro, "sinr_formula", cell.sinr_formula));
        }
      }
    }
  }
  return out;
}

std::vector<RunRecord> run_robustness(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.kind != ExperimentKind::robustness_correlation && cfg.kind != ExperimentKind::robustness_imperfect_csi) {
    throw ConfigError("robustness needs kind robustness_correlation or robustness_imperfect_csi");
  }
  std::vector<RunRecord> out;
  CellSpec spec = base_spec(cfg);
  for (std::size_t M : cfg.M) {
    for (std::size_t K : cfg.K) {
      for (double snr : cfg.snr_db) {
        spec.M = M;
        spec.K = K;
        spec.snr_db = snr;
        spec.channel = ChannelKind::iid_rayleigh;
        spec.rho = 0.0;
        spec.estimation = EstimationMode::perfect();
        const std::string kind = to_string(cfg.kind);
        append_mse_rows(out, run_mse_cell(spec), kind + "/baseline", false);
        if (cfg.kind == ExperimentKind::robustness_correlation) {
          for (double rho : cfg.rho) {
            CellSpec c = spec;
            c.channel = cfg.correlation;
            c.rho = rho;
            append_mse_rows(out, run_mse_cell(c), kind + "/" + to_string(cfg.correlation) + "/rho=" + format_double(rho),
                            false);
          }
        } else {
          for (double pilot : cfg.pilot_snr_db) {
            std::vector<EchoNoise> models{cfg.echo_noise};
            if (cfg.echo_noise != EchoNoise::power_normalized) models.push_back(EchoNoise::power_normalized);
            for (EchoNoise echo : models) {
              CellSpec c = spec;
              c.estimation = EstimationMode::pilot(pilot, echo);
              append_mse_rows(out, run_mse_cell(c), kind + "/pilot=" + format_double(pilot), false);
            }
          }
        }
      }
    }
  }
  return out;
}

TimingResult time_aggregation(std::size_t M, std::size_t K, std::size_t slots, std::size_t trials,
                              double snr_db, std::uint64_t seed, MmseForm form) {
  if (trials == 0) throw InvalidArgument("timing: trials must be positive");
  RngStream rng(seed, mix64(M) ^ mix64(K + 0x7133));
  const ChannelRealization real = draw_channel({M, K, ChannelKind::iid_rayleigh, 0.0}, rng);
  const ComplexVector hs = real.sum_channel();
  RealMatrix x(slots, K);
  for (std::size_t i = 0; i < slots; ++i) {
    for (std::size_t k = 0; k < K; ++k) x(i, k) = rng.normal();
  }
  const double variance = db_to_linear(-snr_db);
  const ComplexMatrix noise = draw_uplink_noise(M, slots, variance, rng);
  const ComplexMatrix y = superimpose(real.h, x, std::vector<double>(K, 1.0), noise);

  using clock = std::chrono::steady_clock;
  volatile double sink = 0.0;
  auto time_it = [&](auto&& kernel) {
    kernel();
    const auto start = clock::now();
    for (std::size_t t = 0; t < trials; ++t) kernel();
    return std::chrono::duration<double>(clock::now() - start).count();
  };

  TimingResult r;
  r.M = M;
  r.K = K;
  r.ro_s = time_it([&] {
    const auto p = project_rows(hs, y);
    double acc = 0.0;
    for (const auto& v : p) acc += v.real();
    sink = sink + acc;
  });
  RngStream unused(seed, 0);
  r.enhanced_s = time_it([&] {
    const auto g = estimate_echo_gains(real, hs, EstimationMode::perfect(), unused);
    const auto p = project_rows(hs, y);
    double acc = 0.0;
    for (const auto& v : p) acc += v.real();
    for (const auto& v : g) acc += 1.0 / v.real();
    sink = sink + acc;
  });
  r.mmse_s = time_it([&] {
    const RealMatrix est = mmse_detect(real.h, y, variance, form);
    sink = sink + est(0, 0);
  });
  r.mmse_gram_s = time_it([&] {
    const RealMatrix est = mmse_detect(real.h, y, variance, MmseForm::gram);
    sink = sink + est(0, 0);
  });
  return r;
}

std::vector<RunRecord> run_timing(const ExperimentConfig& cfg, bool full_grid) {
  cfg.validate();
  std::vector<RunRecord> out;
  CellSpec spec = base_spec(cfg);
  const double snr = cfg.snr_db.front();
  for (std::size_t M : antenna_grid(cfg, full_grid)) {
    for (std::size_t K : cfg.K) {
      spec.M = M;
      spec.K = K;
      spec.snr_db = snr;
      const TimingResult t = time_aggregation(M, K, cfg.slots, cfg.trials, snr, cfg.master_seed, cfg.mmse_form);
      const std::string mmse = uplink_label(UplinkScheme::mmse_full_csi);
      out.push_back(make_record(spec, "timing", uplink_label(UplinkScheme::random_orthogonalization), "wall_time_s", t.ro_s));
      out.push_back(make_record(spec, "timing", uplink_label(UplinkScheme::enhanced), "wall_time_s", t.enhanced_s));
      out.push_back(make_record(spec, "timing", mmse, "wall_time_s", t.mmse_s));
      out.push_back(make_record(spec, "timing/gram", mmse, "wall_time_s", t.mmse_gram_s));
      out.push_back(make_record(spec, "timing", "ro_over_mmse", "time_ratio", t.ratio()));
      out.push_back(make_record(spec, "timing/gram", "ro_over_mmse", "time_ratio", t.ro_s / t.mmse_gram_s));
    }
  }
  return out;
}

std::vector<RunRecord> evaluate_bounds(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<RunRecord> out;
  CellSpec spec = base_spec(cfg);
  spec.trials = 0;
  for (std::size_t M : cfg.M) {
    for (std::size_t K : cfg.K) {
      for (double snr_db : cfg.snr_db) {
        spec.M = M;
        spec.K = K;
        spec.snr_db = snr_db;
        ConvergenceParams p;
        p.N = cfg.N;
        p.K = K;
        p.M = M;
        p.E = cfg.E;
        p.d = cfg.d;
        p.mu = cfg.mu;
        p.L = cfg.L;
        p.Gamma = cfg.Gamma;
        p.H_sq = cfg.H_sq;
        p.Hk_sq = cfg.Hk_sq;
        p.snr_ul_linear = db_to_linear(snr_db);
        p.gamma_shift = cfg.gamma_shift;
        p.delta0 = cfg.delta0;
        double B = 0.0;
        try {
          B = convergence_constant_B(p);
        } catch (const InvalidArgument& e) {
          throw ConfigError(e.what());
        }
        out.push_back(make_record(spec, "bounds_eval", "convergence_bound", "B", B));
        out.push_back(make_record(spec, "bounds_eval", "uplink_constant", "B_tilde",
                                  convergence_constant_Btilde(K, M, p.snr_ul_linear, p.H_sq)));
        for (std::size_t t : cfg.t) {
          if (t == 0) throw ConfigError("t grid must start at 1");
          out.push_back(make_record(spec, "bounds_eval/t=" + std::to_string(t), "convergence_bound", "bound_rhs",
                                    convergence_bound_rhs(t, p, B)));
        }
      }
    }
  }
  return out;
}

namespace {

struct FlData {
  std::vector<ClientDataset> clients;
  std::optional<ClientDataset> test;
};

FlData load_fl_data(const ExperimentConfig& cfg) {
  FlData data;
  RngStream part_rng(cfg.master_seed, 0xDA7B);
  switch (cfg.task) {
    case FlTask::synthetic: {
      SyntheticTaskConfig sc{cfg.dim, cfg.train_samples, cfg.test_samples, cfg.label_noise};
      SyntheticTask task = make_synthetic_classification(sc, RngStream(cfg.master_seed, 0xDA7A));
      data.clients = partition_label_skewed(task.train, cfg.N, part_rng);
      data.test = std::move(task.test);
      break;
    }
    case FlTask::quadratic_iid: {
      const std::size_t per_client = cfg.train_samples / cfg.N;
      if (per_client == 0) throw ConfigError("quadratic_iid: train_samples must be at least N");
      const ClientDataset pool = make_regression_pool(per_client * cfg.N, cfg.dim, cfg.noise_std,
                                                      RngStream(cfg.master_seed, 0xDA7A));
      for (std::size_t k = 0; k < cfg.N; ++k) {
        ClientDataset part;
        part.features = RealMatrix(per_client, cfg.dim);
        for (std::size_t r = 0; r < per_client; ++r) {
          const auto src = pool.features.row(k * per_client + r);
          std::copy(src.begin(), src.end(), part.features.row(r).begin());
          part.target.push_back(pool.target[k * per_client + r]);
        }
        data.clients.push_back(std::move(part));
      }
      break;
    }
    case FlTask::matrix_file: {
      if (cfg.data_path.empty()) throw ConfigError("task matrix_file needs data_path");
      data.clients = partition_label_skewed(read_matrix_file(cfg.data_path), cfg.N, part_rng);
      if (!cfg.test_path.empty()) data.test = read_matrix_file(cfg.test_path);
      break;
    }
    case FlTask::mnist: {
      if (cfg.mnist_images.empty() || cfg.mnist_labels.empty()) {
        throw ConfigError("task mnist needs mnist_images and mnist_labels");
      }
      ClientDataset all = read_mnist_idx(cfg.mnist_images, cfg.mnist_labels);
      if (all.size() <= cfg.test_samples) throw ConfigError("mnist: not enough rows for the test split");
      const std::size_t n_train = all.size() - cfg.test_samples;
      ClientDataset train;
      ClientDataset test;
      train.features = RealMatrix(n_train, all.dim());
      test.features = RealMatrix(cfg.test_samples, all.dim());
      for (std::size_t r = 0; r < all.size(); ++r) {
        ClientDataset& dst = r < n_train ? train : test;
        const std::size_t row = r < n_train ? r : r - n_train;
        std::copy(all.features.row(r).begin(), all.features.row(r).end(), dst.features.row(row).begin());
        dst.target.push_back(all.target[r]);
      }
      data.clients = partition_label_skewed(train, cfg.N, part_rng);
      data.test = std::move(test);
      break;
    }
  }
  return data;
}

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

double FlSuiteResult::mean_final_accuracy(const FlSchemePair& pair, std::size_t M) const {
  std::vector<double> acc;
  for (const auto& r : runs) {
    if (r.pair == pair && r.M == M) acc.push_back(r.state.history.back().test_accuracy);
  }
  if (acc.empty()) throw InvalidArgument("no runs for " + pair.label());
  return summarize(acc).mean;
}

std::vector<double> FlSuiteResult::mean_gap(const FlSchemePair& pair, std::size_t M) const {
  const double f_star = envelope ? envelope->f_star : 0.0;
  std::vector<std::vector<double>> per_round;
  for (const auto& r : runs) {
    if (!(r.pair == pair && r.M == M)) continue;
    if (per_round.empty()) per_round.resize(r.state.history.size());
    for (std::size_t t = 0; t < r.state.history.size(); ++t) {
      per_round[t].push_back(r.state.history[t].train_loss - f_star);
    }
  }
  if (per_round.empty()) throw InvalidArgument("no runs for " + pair.label());
  std::vector<double> out;
  for (const auto& v : per_round) out.push_back(summarize(v).mean);
  return out;
}

FlSuiteResult run_fl_suite(const ExperimentConfig& cfg) {
  cfg.validate();
  const FlData data = load_fl_data(cfg);
  const std::size_t K = cfg.K.front();
  const LossModel loss(cfg.loss, cfg.lambda, cfg.smoothing);

  // iid quadratic clients, full participation and one full-batch local step.
  const bool envelope_task = cfg.task == FlTask::quadratic_iid && cfg.loss == LossKind::quadratic &&
                             K == cfg.N && cfg.local_steps == 1 &&
                             cfg.batch_size >= data.clients.front().size();

  FlConfig base;
  base.total_clients = cfg.N;
  base.participants = K;
  base.local_steps = cfg.local_steps;
  base.batch_size = cfg.batch_size;
  base.rounds = cfg.rounds;
  base.mu = cfg.mu;
  base.gamma_shift = cfg.gamma_shift;
  base.uplink.snr_ul_db = cfg.ul_snr_db;
  base.uplink.noise = cfg.noise_convention;
  base.downlink.snr_dl_db = cfg.dl_snr_db;
  base.power_schedule = cfg.power_schedule;
  base.initial_snr_db = cfg.initial_snr_db;
  base.normalization = cfg.normalization;
  base.eval_every = cfg.eval_every;

  std::optional<EnvelopeInfo> envelope;
  std::vector<double> w_star;
  if (envelope_task) {
    double mu = std::numeric_limits<double>::infinity();
    double L = 0.0;
    double local_optima = 0.0;
    for (const ClientDataset& c : data.clients) {
      const Curvature curv = loss.curvature(c);
      mu = std::min(mu, curv.mu);
      L = std::max(L, curv.L);
      local_optima += loss.value(quadratic_minimizer(loss, c), c) / static_cast<double>(cfg.N);
    }
    w_star = quadratic_minimizer(loss, merge(data.clients));
    EnvelopeInfo env;
    env.f_star = global_loss(loss, data.clients, w_star);
    base.mu = mu;
    base.gamma_shift = std::max(cfg.gamma_shift, std::max(8.0 * L / mu, 1.0) - 1.0);
    env.params.N = cfg.N;
    env.params.K = K;
    env.params.E = 1;
    env.params.d = cfg.dim;
    env.params.mu = mu;
    env.params.L = L;
    env.params.Gamma = std::max(env.f_star - local_optima, 0.0);
    env.params.Hk_sq.assign(cfg.N, 0.0);
    env.params.gamma_shift = base.gamma_shift;
    env.params.delta0 = squared_norm(w_star);
    envelope = std::move(env);
  }

  struct Job {
    FlSchemePair pair;
    std::size_t M;
    std::size_t rep;
  };
  std::vector<Job> jobs;
  for (std::size_t M : cfg.M) {
    for (const auto& pair : cfg.fl_schemes) {
      for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) jobs.push_back({pair, M, rep});
    }
  }

  FlSuiteResult suite;
  suite.runs.resize(jobs.size());
  parallel_for(jobs.size(), cfg.workers, [&](std::size_t j) {
    const Job& job = jobs[j];
    FlConfig fc = base;
    fc.antennas = job.M;
    fc.uplink.scheme = job.pair.uplink;
    fc.downlink.scheme = job.pair.downlink;
    FlRun& run = suite.runs[j];
    run.pair = job.pair;
    run.M = job.M;
    run.repetition = job.rep;
    run.seed = cfg.master_seed + job.rep;
    const ClientDataset* test = data.test ? &*data.test : nullptr;
    RoundObserver observer;
    if (envelope_task) {
      const auto max_client_grad = [&](std::span<const double> w) {
        double m = 0.0;
        for (const ClientDataset& c : data.clients) m = std::max(m, squared_norm(loss.full_gradient(w, c)));
        return m;
      };
      run.max_grad_sq = max_client_grad(std::vector<double>(cfg.dim, 0.0));
      observer = [&, max_client_grad](const FlState& s) {
        run.max_grad_sq = std::max(run.max_grad_sq, max_client_grad(s.w));
      };
    }
    run.state = run_federated_training(fc, loss, data.clients, test, run.seed, std::nullopt, observer);
  });

  if (envelope) {
    double h_sq = 0.0;
    for (const auto& r : suite.runs) h_sq = std::max(h_sq, r.max_grad_sq);
    envelope->params.H_sq = h_sq;
    const double snr = db_to_linear(cfg.ul_snr_db);
    for (std::size_t M : cfg.M) {
      ConvergenceParams p = envelope->params;
      p.M = M;
      p.snr_ul_linear = cfg.noise_convention == NoiseConvention::scaled ? snr * static_cast<double>(M) : snr;
      const double B = convergence_constant_B(p);
      envelope->B[M] = B;
      std::vector<double> rhs;
      for (std::size_t t = 1; t <= cfg.rounds; ++t) rhs.push_back(convergence_bound_rhs(t, p, B));
      envelope->rhs[M] = std::move(rhs);
    }
    suite.envelope = std::move(envelope);
  }
  return suite;
}

std::vector<RunRecord> fl_records(const ExperimentConfig& cfg, const FlSuiteResult& suite) {
  std::vector<RunRecord> out;
  const std::size_t K = cfg.K.front();
  auto record = [&](std::string experiment, std::string scheme, std::size_t M, std::string metric, double value,
                    std::uint64_t seed, std::size_t trials) {
    RunRecord r;
    r.experiment = std::move(experiment);
    r.scheme = std::move(scheme);
    r.M = M;
    r.K = K;
    r.snr_db = cfg.ul_snr_db;
    r.metric = std::move(metric);
    r.value = value;
    r.trials = trials;
    r.seed = seed;
    r.noise_convention = to_string(cfg.noise_convention);
    r.csi_mode = "perfect";
    out.push_back(std::move(r));
  };
  for (const auto& run : suite.runs) {
    for (const auto& log : run.state.history) {
      if (std::isnan(log.train_loss)) continue;
      const std::string id = "fl_run/round=" + std::to_string(log.round) + "/rep=" + std::to_string(run.repetition);
      record(id, run.pair.label(), run.M, "train_loss", log.train_loss, run.seed, 1);
      if (!std::isnan(log.test_accuracy)) record(id, run.pair.label(), run.M, "accuracy", log.test_accuracy, run.seed, 1);
      record(id, run.pair.label(), run.M, "sinr_mc", log.effective_sinr, run.seed, 1);
    }
  }
  if (suite.envelope) {
    for (std::size_t M : cfg.M) {
      record("fl_run/f_star", "optimum", M, "train_loss", suite.envelope->f_star, cfg.master_seed, cfg.repetitions);
      record("fl_run/constant", "convergence_bound", M, "B", suite.envelope->B.at(M), cfg.master_seed, cfg.repetitions);
      const auto& rhs = suite.envelope->rhs.at(M);
      for (std::size_t t = 0; t < rhs.size(); ++t) {
        if ((t + 1) % cfg.eval_every != 0 && t + 1 != rhs.size()) continue;
        record("fl_run/round=" + std::to_string(t + 1), "convergence_bound", M, "bound_rhs", rhs[t], cfg.master_seed,
               cfg.repetitions);
      }
    }
  }
  return out;
}

std::vector<RunRecord> run_fl_experiment(const ExperimentConfig& cfg) { return fl_records(cfg, run_fl_suite(cfg)); }

}  // namespace otafl
