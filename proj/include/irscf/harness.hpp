// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "irscf/channel.hpp"
#include "irscf/config.hpp"
#include "irscf/fp_baseline.hpp"
#include "irscf/gnn.hpp"
#include "irscf/rate.hpp"
#include "irscf/trainer.hpp"

namespace irscf {

inline constexpr const char* kMethods[] = {"dml", "global_zf_pa", "global_zf", "local_zf", "mrt"};
inline constexpr const char* kSweepVariables[] = {"M", "L", "p_max_dbm", "K"};

bool is_method(const std::string& name);

struct ExchangeCounts {
  std::size_t csi_scalars = 0;
  std::size_t signaling_scalars = 0;
  bool operator==(const ExchangeCounts&) const = default;
};

/// Real scalars moved over the fronthaul per solve. Throws ConfigError for an
/// unknown method.
ExchangeCounts exchange_accounting(const std::string& method, const SystemConfig& cfg);

struct ExperimentSpec {
  std::vector<std::string> methods{"global_zf_pa", "global_zf", "local_zf", "mrt"};
  std::string sweep_variable = "L";
  std::vector<double> sweep_values{64};
  std::size_t trials = 500;
  std::uint64_t seed = 1;
  std::string checkpoint;  // required when methods contain dml
  std::size_t threads = 0;
  AoOptions ao{};

  void validate() const;
};

/// Scenario at one sweep point; throws ConfigError on a non-integral count.
SystemConfig apply_sweep(const SystemConfig& base, const std::string& variable, double value);

struct ResultRow {
  std::string method;
  std::size_t M = 0;
  std::size_t K = 0;
  std::size_t L = 0;
  double p_max_dbm = 0.0;
  bool feasible = true;
  double mean_sum_rate = 0.0;
  double std_sum_rate = 0.0;
  double mean_time_ms = 0.0;
  std::size_t csi_exchange_scalars = 0;
  std::size_t signaling_exchange_scalars = 0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::vector<double> sum_rates;  // per trial, not written to CSV
};

inline constexpr const char* kCsvHeader =
    "method,M,K,L,p_max_dbm,mean_sum_rate,std_sum_rate,mean_time_ms,csi_exchange_scalars,"
    "signaling_exchange_scalars,trials,seed";

/// The realization and random IRS phases of trial `t`; identical for every
/// method at a sweep point.
struct Trial {
  ChannelRealization real;
  ComplexMatrix v;
};
Trial make_trial(const SystemConfig& cfg, std::uint64_t seed, std::size_t t);

/// One solve. `model` is only read for dml.
BeamformingSolution solve_method(const std::string& method, const SystemConfig& cfg,
                                 const Trial& trial, const GnnModel* model,
                                 const AoOptions& ao = {});

/// Runs every (sweep point, method) pair on paired trials. `model` overrides
/// spec.checkpoint for dml; its weights are reused at every sweep point while
/// the output power budget tracks the point's p_max_dbm.
std::vector<ResultRow> run_experiment(const SystemConfig& base, const ExperimentSpec& spec,
                                      const GnnModel* model = nullptr);

/// Infeasible rows carry "infeasible" in the rate and timing columns.
std::string to_csv(const std::vector<ResultRow>& rows, bool with_timing = true);
void write_text(const std::string& path, const std::string& text);

}  // namespace irscf
