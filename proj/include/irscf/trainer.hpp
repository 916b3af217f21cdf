// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "irscf/channel.hpp"
#include "irscf/config.hpp"
#include "irscf/gnn.hpp"

namespace irscf {

struct TrainConfig {
  std::size_t samples_per_epoch = 60000;
  std::size_t batch_size = 600;
  std::size_t max_epochs = 2000;
  std::size_t patience_epochs = 10;
  double lr0 = 0.01;
  double decay_factor = 0.995;
  std::size_t decay_every_steps = 100;
  std::size_t validation_size = 600;
  std::uint64_t seed = 1;
  /// 0 picks the hardware concurrency. Results do not depend on it.
  std::size_t threads = 0;

  /// lr0 = 0 is accepted so that training can be frozen.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct AdamConstants {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  std::vector<RealTensor> m;
  std::vector<RealTensor> v;
  std::size_t step = 0;
  std::size_t skipped = 0;
  double lr0 = 0.01;
  double lr = 0.01;
  double decay_factor = 0.995;
  std::size_t decay_every_steps = 100;
  AdamConstants adam;

  static OptimizerState for_parameters(std::span<RealTensor* const> params, double lr0,
                                       double decay_factor, std::size_t decay_every_steps);
};

/// One Adam update. A non-finite gradient leaves everything untouched,
/// increments `skipped` and throws NumericError.
void adam_step(OptimizerState& opt, std::span<const RealTensor> grads,
               std::span<RealTensor* const> params);

/// -(1/T) sum_t sum_k R_k in bits.
double loss(const GnnModel& model, std::span<const ChannelRealization> batch, double noise_watts,
            std::size_t threads = 1);

struct LossAndGradients {
  double loss = 0.0;
  std::vector<RealTensor> grads;  // aligned with named_parameters
};

/// Per-sample tapes, gradients summed in sample order.
LossAndGradients loss_and_gradients(const GnnModel& model,
                                    std::span<const ChannelRealization> batch, double noise_watts,
                                    std::size_t threads = 1);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_sum_rate = 0.0;
  double lr = 0.0;
  std::size_t skipped_steps = 0;
};

struct TrainResult {
  GnnModel model;  // best validation loss
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainResult train(const SystemConfig& cfg, const ModelShape& shape, const TrainConfig& train_cfg,
                  const EpochCallback& on_epoch = {});
/// Continues from `initial` instead of a fresh initialization.
TrainResult train(const SystemConfig& cfg, GnnModel initial, const TrainConfig& train_cfg,
                  const EpochCallback& on_epoch = {});

/// Fixed validation realizations for a run with this seed.
std::vector<ChannelRealization> validation_set(const SystemConfig& cfg, const TrainConfig& train_cfg);

struct DeployStats {
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> sum_rates;
};

/// Distributed inference: BS i's network sees only local_csi(real, i).
BeamformingSolution deploy_forward(const GnnModel& model, const ChannelRealization& real);

DeployStats deploy_eval(const GnnModel& model, std::span<const ChannelRealization> trials,
                        double noise_watts, std::size_t threads = 1);
/// Draws the trials from cfg and deploys at cfg's power budget.
DeployStats deploy_eval(const GnnModel& model, const SystemConfig& cfg, std::size_t trials,
                        std::uint64_t seed, std::size_t threads = 1);

struct GradcheckReport {
  std::size_t checked = 0;
  double max_relative_error = 0.0;
  std::string worst_parameter;
};

/// Compares tape gradients of -sum_rate with central differences for every
/// scalar parameter. Relative error is |a - b| / max(|a|, |b|, 1e-6).
GradcheckReport gradcheck(const GnnModel& model, const ChannelRealization& real,
                          double noise_watts, double step = 1e-5);

/// Sample mean and (n - 1) standard deviation; std is 0 for a single value.
std::pair<double, double> mean_and_std(std::span<const double> values);

}  // namespace irscf
