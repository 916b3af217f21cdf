// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "irscf/beamform.hpp"
#include "irscf/channel.hpp"
#include "irscf/config.hpp"
#include "irscf/rate.hpp"

namespace irscf {

/// Auxiliary variables and powers of the alternating optimization. Powers are
/// linear Watts, flat at i * K + k. All objective values are in nats.
struct FpState {
  std::vector<double> alpha;
  std::vector<cdouble> beta;
  std::vector<double> power;
  double objective_nats = 0.0;
};

struct PowerStepOptions {
  double initial_step = 1.0;
  double min_improvement = 1e-8;
  std::size_t max_iterations = 500;
  std::size_t max_halvings = 60;
};

struct AoOptions {
  double relative_tolerance = 1e-6;
  std::size_t max_iterations = 100;
  PowerStepOptions power_step{};
  /// Collect the surrogate after every alpha, beta and power update.
  bool record_substeps = false;
};

/// Power allocation over fixed unit-norm directions and a fixed v. Holds the
/// coupling coefficients c(k, i, k') = h_{i,k}^H w^_{i,k'} so every objective
/// evaluation is O(I K^2).
class PowerAllocation {
 public:
  PowerAllocation(const EffectiveChannels& eff, Directions directions, double noise_watts,
                  double p_max_watts);

  std::size_t num_bs() const noexcept { return num_bs_; }
  std::size_t num_users() const noexcept { return num_users_; }
  double p_max() const noexcept { return p_max_; }
  const Directions& directions() const noexcept { return directions_; }

  /// Equal split p = p_max / K with alpha = beta = 0.
  FpState equal_power_state() const;
  BeamformingSolution solution(std::span<const double> power, const ComplexMatrix& v) const;

  /// Lagrangian-dual plus quadratic-transform objective in nats.
  double surrogate(const FpState& state) const;
  /// Same objective as a function of amplitudes q = sqrt(p).
  double surrogate_in_amplitudes(std::span<const double> alpha, std::span<const cdouble> beta,
                                 std::span<const double> q) const;
  std::vector<double> sinr(std::span<const double> power) const;
  AbTerms ab_terms(std::span<const double> power, std::size_t k) const;

  /// alpha_k = gamma_k at the current powers.
  std::vector<double> update_alpha(const FpState& state) const;
  /// beta_k = sqrt(1 + alpha_k) A_k / B_k.
  std::vector<cdouble> update_beta(const FpState& state) const;
  /// Projected gradient ascent over q with backtracking; returns p = q^2.
  std::vector<double> power_step(const FpState& state, const PowerStepOptions& options = {}) const;

  /// Clamp to q >= 0, then scale each BS onto sum_k q^2 <= p_max if outside.
  void project(std::span<double> q) const;

 private:
  cdouble coupling(std::size_t k, std::size_t i, std::size_t kp) const {
    return coupling_[(k * num_bs_ + i) * num_users_ + kp];
  }
  void amplitude_gradient(std::span<const double> alpha, std::span<const cdouble> beta,
                          std::span<const double> q, std::span<double> grad) const;

  std::size_t num_bs_;
  std::size_t num_users_;
  double noise_;
  double p_max_;
  Directions directions_;
  std::vector<cdouble> coupling_;
};

struct AoResult {
  BeamformingSolution solution;
  double sum_rate_bits = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  FpState state;
  /// Surrogate after each outer iteration (nats).
  std::vector<double> trace;
  /// With record_substeps: surrogate after every alpha, beta and power update.
  std::vector<double> substep_trace;
};

/// Global ZF directions + alternating optimization of (alpha, beta) and the
/// per-BS power split, with v held fixed.
AoResult ao_solve(const ChannelRealization& real, const ComplexMatrix& v, const SystemConfig& cfg,
                  const AoOptions& options = {});

}  // namespace irscf
