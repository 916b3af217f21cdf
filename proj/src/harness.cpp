// SPDX-License-Identifier: Apache-2.0

#include "irscf/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string_view>

#include "irscf/beamform.hpp"
#include "irscf/errors.hpp"
#include "irscf/parallel.hpp"
#include "irscf/persist.hpp"

namespace irscf {

namespace {

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::size_t as_count(const std::string& variable, double value) {
  if (!(value >= 1.0) || value != std::floor(value) || value > 1e6) {
    throw ConfigError("sweep value for " + variable + " must be a positive integer, got " +
                      format_double(value));
  }
  return static_cast<std::size_t>(value);
}

}  // namespace

bool is_method(const std::string& name) {
  return std::find_if(std::begin(kMethods), std::end(kMethods),
                      [&](const char* m) { return name == m; }) != std::end(kMethods);
}

ExchangeCounts exchange_accounting(const std::string& method, const SystemConfig& cfg) {
  const std::size_t global = 2 * cfg.num_bs * cfg.num_antennas * cfg.num_users;
  if (method == "dml") return {0, 2 * cfg.num_elements};
  if (method == "global_zf_pa" || method == "global_zf") return {global, global};
  if (method == "local_zf" || method == "mrt") return {0, 0};
  throw ConfigError("unknown method '" + method + "'");
}

void ExperimentSpec::validate() const {
  if (methods.empty()) throw ConfigError("experiment.methods must be non-empty");
  for (const auto& m : methods) {
    if (!is_method(m)) throw ConfigError("experiment.methods: unknown method '" + m + "'");
  }
  if (std::find_if(std::begin(kSweepVariables), std::end(kSweepVariables), [&](const char* v) {
        return sweep_variable == v;
      }) == std::end(kSweepVariables)) {
    throw ConfigError("experiment.sweep.variable must be one of M, L, p_max_dbm, K");
  }
  if (sweep_values.empty()) throw ConfigError("experiment.sweep.values must be non-empty");
  if (trials < 1) throw ConfigError("experiment.trials must be at least 1");
}

SystemConfig apply_sweep(const SystemConfig& base, const std::string& variable, double value) {
  SystemConfig cfg = base;
  if (variable == "M") {
    cfg.num_antennas = as_count(variable, value);
  } else if (variable == "L") {
    cfg.num_elements = as_count(variable, value);
  } else if (variable == "K") {
    cfg.num_users = as_count(variable, value);
  } else if (variable == "p_max_dbm") {
    cfg.p_max_dbm = value;
  } else {
    throw ConfigError("unknown sweep variable '" + variable + "'");
  }
  cfg.validate();
  return cfg;
}

Trial make_trial(const SystemConfig& cfg, std::uint64_t seed, std::size_t t) {
  Rng rng = Rng(seed).fork(t);
  Trial trial{sample_realization(cfg, rng), {}};
  trial.v = random_irs_phases(cfg.num_elements, rng);
  return trial;
}

BeamformingSolution solve_method(const std::string& method, const SystemConfig& cfg,
                                 const Trial& trial, const GnnModel* model, const AoOptions& ao) {
  const double p_max = cfg.p_max_watts();
  if (method == "dml") {
    if (model == nullptr) throw ConfigError("dml needs a trained model checkpoint");
    return deploy_forward(*model, trial.real);
  }
  if (method == "global_zf_pa") return ao_solve(trial.real, trial.v, cfg, ao).solution;
  const EffectiveChannels eff(trial.real, trial.v);
  if (method == "global_zf") return global_zf_solution(eff, trial.v, p_max);
  if (method == "local_zf") {
    return equal_power_solution(local_zf_all(eff), cfg.num_bs, cfg.num_users, trial.v, p_max);
  }
  if (method == "mrt") {
    return equal_power_solution(mrt(eff), cfg.num_bs, cfg.num_users, trial.v, p_max);
  }
  throw ConfigError("unknown method '" + method + "'");
}

std::vector<ResultRow> run_experiment(const SystemConfig& base, const ExperimentSpec& spec,
                                      const GnnModel* model) {
  spec.validate();
  std::optional<GnnModel> loaded;
  const bool wants_dml = std::find(spec.methods.begin(), spec.methods.end(), "dml") != spec.methods.end();
  if (wants_dml && model == nullptr) {
    if (spec.checkpoint.empty()) throw ConfigError("method dml requires a checkpoint");
    loaded = load_checkpoint(spec.checkpoint);
    model = &*loaded;
  }

  std::vector<ResultRow> rows;
  for (double value : spec.sweep_values) {
    const SystemConfig cfg = apply_sweep(base, spec.sweep_variable, value);
    // The trained weights are reused across the sweep; only the output power
    // budget follows the scenario.
    std::optional<GnnModel> deployed;
    if (wants_dml) {
      deployed = *model;
      deployed->shape.p_max_dbm = cfg.p_max_dbm;
      ChannelRealization probe = make_trial(cfg, spec.seed, 0).real;
      check_compatible(*deployed, probe);
    }
    std::vector<Trial> trials(spec.trials);
    parallel_for(spec.trials, spec.threads,
                 [&](std::size_t t) { trials[t] = make_trial(cfg, spec.seed, t); });

    for (const std::string& method : spec.methods) {
      ResultRow row;
      row.method = method;
      row.M = cfg.num_antennas;
      row.K = cfg.num_users;
      row.L = cfg.num_elements;
      row.p_max_dbm = cfg.p_max_dbm;
      row.trials = spec.trials;
      row.seed = spec.seed;
      const ExchangeCounts ex = exchange_accounting(method, cfg);
      row.csi_exchange_scalars = ex.csi_scalars;
      row.signaling_exchange_scalars = ex.signaling_scalars;

      if (method == "local_zf" && cfg.num_antennas < cfg.num_users) {
        row.feasible = false;
        rows.push_back(std::move(row));
        continue;
      }

      std::vector<double> rates(spec.trials);
      std::vector<double> millis(spec.trials);
      parallel_for(spec.trials, spec.threads, [&](std::size_t t) {
        const auto start = std::chrono::steady_clock::now();
        const BeamformingSolution sol = solve_method(method, cfg, trials[t], deployed ? &*deployed : nullptr, spec.ao);
        const auto stop = std::chrono::steady_clock::now();
        millis[t] = std::chrono::duration<double, std::milli>(stop - start).count();
        rates[t] = sum_rate(trials[t].real, sol, cfg.noise_watts());
        if (!std::isfinite(rates[t])) {
          throw NumericError(method + ": non-finite sum rate in trial " + std::to_string(t));
        }
      });
      std::tie(row.mean_sum_rate, row.std_sum_rate) = mean_and_std(rates);
      row.mean_time_ms = mean_and_std(millis).first;
      row.sum_rates = std::move(rates);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string to_csv(const std::vector<ResultRow>& rows, bool with_timing) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const ResultRow& r : rows) {
    const std::string na = "infeasible";
    out += r.method + ',' + std::to_string(r.M) + ',' + std::to_string(r.K) + ',' +
           std::to_string(r.L) + ',' + format_double(r.p_max_dbm) + ',';
    out += (r.feasible ? format_double(r.mean_sum_rate) : na) + ',';
    out += (r.feasible ? format_double(r.std_sum_rate) : na) + ',';
    out += (!r.feasible ? na : with_timing ? format_double(r.mean_time_ms) : std::string()) + ',';
    out += std::to_string(r.csi_exchange_scalars) + ',' +
           std::to_string(r.signaling_exchange_scalars) + ',' + std::to_string(r.trials) + ',' +
           std::to_string(r.seed) + '\n';
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

}  // namespace irscf
