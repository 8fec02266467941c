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

#include "otafl/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace otafl {

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::mse_sweep: return "mse_sweep";
    case ExperimentKind::robustness_correlation: return "robustness_correlation";
    case ExperimentKind::robustness_imperfect_csi: return "robustness_imperfect_csi";
    case ExperimentKind::fl_run: return "fl_run";
    case ExperimentKind::bounds_eval: return "bounds_eval";
    case ExperimentKind::timing: return "timing";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (auto k : {ExperimentKind::mse_sweep, ExperimentKind::robustness_correlation,
                 ExperimentKind::robustness_imperfect_csi, ExperimentKind::fl_run, ExperimentKind::bounds_eval,
                 ExperimentKind::timing}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown experiment kind '" + name + "'");
}

std::string to_string(FlTask task) {
  switch (task) {
    case FlTask::synthetic: return "synthetic";
    case FlTask::quadratic_iid: return "quadratic_iid";
    case FlTask::matrix_file: return "matrix_file";
    case FlTask::mnist: return "mnist";
  }
  return "unknown";
}

namespace {

FlTask parse_task(const std::string& name) {
  for (auto t : {FlTask::synthetic, FlTask::quadratic_iid, FlTask::matrix_file, FlTask::mnist}) {
    if (to_string(t) == name) return t;
  }
  throw ConfigError("unknown task '" + name + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty list element in '" + v + "'");
    out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError("expected a finite number, got '" + s + "'");
  }
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("expected a non-negative integer, got '" + s + "'");
  return v;
}

std::size_t to_size(const std::string& s) { return static_cast<std::size_t>(to_u64(s)); }

template <class T, class F>
std::vector<T> map_list(const std::string& v, F f) {
  std::vector<T> out;
  for (const auto& item : split_list(v)) out.push_back(f(item));
  return out;
}

template <class F>
auto rethrow_as_config(F f, const std::string& v) {
  try {
    return f(v);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"kind", [](auto& c, const auto& v) { c.kind = parse_experiment_kind(v); }},
      {"uplink_schemes",
       [](auto& c, const auto& v) {
         c.uplink_schemes = map_list<UplinkScheme>(v, [](const std::string& s) {
           return rethrow_as_config(parse_uplink_scheme, s);
         });
       }},
      {"downlink_schemes",
       [](auto& c, const auto& v) {
         c.downlink_schemes = map_list<DownlinkScheme>(v, [](const std::string& s) {
           return rethrow_as_config(parse_downlink_scheme, s);
         });
       }},
      {"M", [](auto& c, const auto& v) { c.M = map_list<std::size_t>(v, to_size); }},
      {"full_grid_M", [](auto& c, const auto& v) { c.full_grid_M = map_list<std::size_t>(v, to_size); }},
      {"K", [](auto& c, const auto& v) { c.K = map_list<std::size_t>(v, to_size); }},
      {"snr_db", [](auto& c, const auto& v) { c.snr_db = map_list<double>(v, to_double); }},
      {"trials", [](auto& c, const auto& v) { c.trials = to_size(v); }},
      {"master_seed", [](auto& c, const auto& v) { c.master_seed = to_u64(v); }},
      {"output_path", [](auto& c, const auto& v) { c.output_path = v; }},
      {"workers", [](auto& c, const auto& v) { c.workers = to_size(v); }},
      {"noise_convention",
       [](auto& c, const auto& v) { c.noise_convention = rethrow_as_config(parse_noise_convention, v); }},
      {"slots", [](auto& c, const auto& v) { c.slots = to_size(v); }},
      {"correlation", [](auto& c, const auto& v) { c.correlation = rethrow_as_config(parse_channel_kind, v); }},
      {"rho", [](auto& c, const auto& v) { c.rho = map_list<double>(v, to_double); }},
      {"pilot_snr_db", [](auto& c, const auto& v) { c.pilot_snr_db = map_list<double>(v, to_double); }},
      {"echo_noise", [](auto& c, const auto& v) { c.echo_noise = rethrow_as_config(parse_echo_noise, v); }},
      {"mmse_form",
       [](auto& c, const auto& v) {
         if (v == "gram") {
           c.mmse_form = MmseForm::gram;
         } else if (v == "covariance") {
           c.mmse_form = MmseForm::covariance;
         } else {
           throw ConfigError("unknown mmse_form '" + v + "'");
         }
       }},
      {"task", [](auto& c, const auto& v) { c.task = parse_task(v); }},
      {"fl_schemes", [](auto& c, const auto& v) { c.fl_schemes = map_list<FlSchemePair>(v, parse_scheme_pair); }},
      {"N", [](auto& c, const auto& v) { c.N = to_size(v); }},
      {"rounds", [](auto& c, const auto& v) { c.rounds = to_size(v); }},
      {"local_steps", [](auto& c, const auto& v) { c.local_steps = to_size(v); }},
      {"batch_size", [](auto& c, const auto& v) { c.batch_size = to_size(v); }},
      {"repetitions", [](auto& c, const auto& v) { c.repetitions = to_size(v); }},
      {"eval_every", [](auto& c, const auto& v) { c.eval_every = to_size(v); }},
      {"mu", [](auto& c, const auto& v) { c.mu = to_double(v); }},
      {"gamma_shift", [](auto& c, const auto& v) { c.gamma_shift = to_double(v); }},
      {"loss", [](auto& c, const auto& v) { c.loss = rethrow_as_config(parse_loss_kind, v); }},
      {"lambda", [](auto& c, const auto& v) { c.lambda = to_double(v); }},
      {"smoothing", [](auto& c, const auto& v) { c.smoothing = to_double(v); }},
      {"ul_snr_db", [](auto& c, const auto& v) { c.ul_snr_db = to_double(v); }},
      {"dl_snr_db", [](auto& c, const auto& v) { c.dl_snr_db = to_double(v); }},
      {"power_schedule",
       [](auto& c, const auto& v) { c.power_schedule = rethrow_as_config(parse_power_schedule, v); }},
      {"initial_snr_db", [](auto& c, const auto& v) { c.initial_snr_db = to_double(v); }},
      {"normalization",
       [](auto& c, const auto& v) { c.normalization = rethrow_as_config(parse_payload_normalization, v); }},
      {"dim", [](auto& c, const auto& v) { c.dim = to_size(v); }},
      {"train_samples", [](auto& c, const auto& v) { c.train_samples = to_size(v); }},
      {"test_samples", [](auto& c, const auto& v) { c.test_samples = to_size(v); }},
      {"label_noise", [](auto& c, const auto& v) { c.label_noise = to_double(v); }},
      {"noise_std", [](auto& c, const auto& v) { c.noise_std = to_double(v); }},
      {"data_path", [](auto& c, const auto& v) { c.data_path = v; }},
      {"test_path", [](auto& c, const auto& v) { c.test_path = v; }},
      {"mnist_images", [](auto& c, const auto& v) { c.mnist_images = v; }},
      {"mnist_labels", [](auto& c, const auto& v) { c.mnist_labels = v; }},
      {"E", [](auto& c, const auto& v) { c.E = to_size(v); }},
      {"d", [](auto& c, const auto& v) { c.d = to_size(v); }},
      {"L", [](auto& c, const auto& v) { c.L = to_double(v); }},
      {"Gamma", [](auto& c, const auto& v) { c.Gamma = to_double(v); }},
      {"H_sq", [](auto& c, const auto& v) { c.H_sq = to_double(v); }},
      {"Hk_sq", [](auto& c, const auto& v) { c.Hk_sq = map_list<double>(v, to_double); }},
      {"delta0", [](auto& c, const auto& v) { c.delta0 = to_double(v); }},
      {"t", [](auto& c, const auto& v) { c.t = map_list<std::size_t>(v, to_size); }},
  };
  return table;
}

}  // namespace

std::string FlSchemePair::label() const { return to_string(uplink) + "/" + to_string(downlink); }

FlSchemePair parse_scheme_pair(const std::string& text) {
  const auto slash = text.find('/');
  if (slash == std::string::npos) throw ConfigError("scheme pair '" + text + "' must look like uplink/downlink");
  FlSchemePair p;
  p.uplink = rethrow_as_config(parse_uplink_scheme, trim(text.substr(0, slash)));
  p.downlink = rethrow_as_config(parse_downlink_scheme, trim(text.substr(slash + 1)));
  return p;
}

void ExperimentConfig::validate() const {
  if (M.empty() || K.empty() || snr_db.empty()) throw ConfigError("grids M, K and snr_db must be non-empty");
  if (trials == 0) throw ConfigError("trials must be at least 1");
  if (slots == 0) throw ConfigError("slots must be at least 1");
  for (auto m : M) {
    if (m == 0) throw ConfigError("M must be positive");
  }
  for (auto k : K) {
    if (k == 0) throw ConfigError("K must be positive");
  }
  for (double r : rho) {
    if (!(r >= 0.0 && r < 1.0)) throw ConfigError("rho must lie in [0, 1)");
  }
  if (kind == ExperimentKind::fl_run) {
    if (fl_schemes.empty()) throw ConfigError("fl_schemes must be non-empty");
    if (repetitions == 0 || rounds == 0 || local_steps == 0 || batch_size == 0 || eval_every == 0) {
      throw ConfigError("repetitions, rounds, local_steps, batch_size and eval_every must be positive");
    }
    if (K.front() > N) throw ConfigError("K must not exceed N");
  }
  if (kind == ExperimentKind::bounds_eval && t.empty()) throw ConfigError("t grid must be non-empty");
}

ExperimentConfig parse_config(const std::string& text, ExperimentKind fallback_kind) {
  struct Entry {
    std::size_t line;
    std::string key;
    std::string value;
  };
  std::vector<Entry> entries;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    Entry e{line_no, trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
    if (setters().find(e.key) == setters().end()) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + e.key + "'");
    }
    if (!seen.insert(e.key).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + e.key + "'");
    }
    if (e.value.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty value for '" + e.key + "'");
    entries.push_back(std::move(e));
  }

  ExperimentKind kind = fallback_kind;
  for (const auto& e : entries) {
    if (e.key == "kind") kind = parse_experiment_kind(e.value);
  }
  ExperimentConfig cfg = default_config(kind);
  for (const auto& e : entries) {
    try {
      setters().at(e.key)(cfg, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError("line " + std::to_string(e.line) + " (" + e.key + "): " + err.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentKind fallback_kind) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fallback_kind);
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  switch (kind) {
    case ExperimentKind::mse_sweep: break;
    case ExperimentKind::robustness_correlation:
    case ExperimentKind::robustness_imperfect_csi:
      c.M = {256};
      c.snr_db = {10.0};
      break;
    case ExperimentKind::fl_run:
      c.M = {256};
      c.K = {8};
      c.fl_schemes = {{UplinkScheme::ideal, DownlinkScheme::ideal},
                      {UplinkScheme::random_orthogonalization, DownlinkScheme::ideal},
                      {UplinkScheme::enhanced, DownlinkScheme::enhanced},
                      {UplinkScheme::ideal, DownlinkScheme::random_orthogonalization}};
      break;
    case ExperimentKind::bounds_eval:
      c.M = {16, 64, 256, 1024};
      c.snr_db = {0.0, 10.0, 20.0};
      break;
    case ExperimentKind::timing:
      c.M = {256, 512, 1024};
      c.trials = 10;
      break;
  }
  return c;
}

}  // namespace otafl
