// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "irscf/config.hpp"
#include "irscf/gnn.hpp"
#include "irscf/harness.hpp"
#include "irscf/trainer.hpp"

namespace irscf {

inline constexpr int kCheckpointVersion = 1;

/// Everything a JSON config file can set. Sections: "system", "gnn", "train",
/// "experiment". Missing keys keep their defaults; unknown keys are rejected.
struct RunConfig {
  SystemConfig system;
  std::vector<std::size_t> widths{64, 32};
  std::size_t num_layers = 2;
  std::size_t irs_bs = 0;
  std::optional<double> feature_scale;  // default_feature_scale when empty
  TrainConfig train;
  ExperimentSpec experiment;

  ModelShape model_shape() const;
};

/// Throws ConfigError with the offending key.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& cfg);

/// JSON with a header and named parameter arrays, doubles at 17 significant
/// digits. Identical models give identical bytes.
std::string checkpoint_to_string(const GnnModel& model);
/// Throws LoadError naming the field on malformed, truncated or mismatched input.
GnnModel checkpoint_from_string(const std::string& text);
void save_checkpoint(const GnnModel& model, const std::string& path);
GnnModel load_checkpoint(const std::string& path);

std::string history_to_csv(const std::vector<EpochRecord>& history);
std::string results_to_json(const SystemConfig& base, const ExperimentSpec& spec,
                            const std::vector<ResultRow>& rows);

}  // namespace irscf
