// SPDX-License-Identifier: Apache-2.0

#include "irscf/fp_baseline.hpp"

#include <algorithm>
#include <cmath>

#include "irscf/errors.hpp"

namespace irscf {

PowerAllocation::PowerAllocation(const EffectiveChannels& eff, Directions directions,
                                 double noise_watts, double p_max_watts)
    : num_bs_(eff.num_bs()), num_users_(eff.num_users()), noise_(noise_watts),
      p_max_(p_max_watts), directions_(std::move(directions)) {
  if (directions_.size() != num_bs_ * num_users_) {
    throw ShapeError("PowerAllocation: expected I*K directions");
  }
  coupling_.resize(num_users_ * num_bs_ * num_users_);
  for (std::size_t k = 0; k < num_users_; ++k) {
    for (std::size_t i = 0; i < num_bs_; ++i) {
      for (std::size_t kp = 0; kp < num_users_; ++kp) {
        coupling_[(k * num_bs_ + i) * num_users_ + kp] =
            inner(eff.h(i, k), directions_[i * num_users_ + kp]);
      }
    }
  }
}

FpState PowerAllocation::equal_power_state() const {
  FpState state;
  state.alpha.assign(num_users_, 0.0);
  state.beta.assign(num_users_, cdouble{});
  state.power.assign(num_bs_ * num_users_, p_max_ / static_cast<double>(num_users_));
  state.objective_nats = surrogate(state);
  return state;
}

BeamformingSolution PowerAllocation::solution(std::span<const double> power,
                                              const ComplexMatrix& v) const {
  BeamformingSolution sol(num_bs_, num_users_, directions_.front().rows(), v);
  for (std::size_t n = 0; n < power.size(); ++n) {
    sol.w[n] = directions_[n] * cdouble(std::sqrt(std::max(power[n], 0.0)), 0.0);
  }
  return sol;
}

AbTerms PowerAllocation::ab_terms(std::span<const double> power, std::size_t k) const {
  AbTerms out;
  out.b = noise_;
  for (std::size_t kp = 0; kp < num_users_; ++kp) {
    cdouble g = 0.0;
    for (std::size_t i = 0; i < num_bs_; ++i) {
      g += std::sqrt(power[i * num_users_ + kp]) * coupling(k, i, kp);
    }
    if (kp == k) out.a = g;
    out.b += std::norm(g);
  }
  return out;
}

std::vector<double> PowerAllocation::sinr(std::span<const double> power) const {
  std::vector<double> out(num_users_);
  for (std::size_t k = 0; k < num_users_; ++k) {
    const AbTerms ab = ab_terms(power, k);
    const double signal = std::norm(ab.a);
    out[k] = signal / (ab.b - signal);
  }
  return out;
}

double PowerAllocation::surrogate_in_amplitudes(std::span<const double> alpha,
                                                std::span<const cdouble> beta,
                                                std::span<const double> q) const {
  double total = 0.0;
  for (std::size_t k = 0; k < num_users_; ++k) {
    double b = noise_;
    cdouble a = 0.0;
    for (std::size_t kp = 0; kp < num_users_; ++kp) {
      cdouble g = 0.0;
      for (std::size_t i = 0; i < num_bs_; ++i) g += q[i * num_users_ + kp] * coupling(k, i, kp);
      if (kp == k) a = g;
      b += std::norm(g);
    }
    total += std::log1p(alpha[k]) - alpha[k] +
             2.0 * std::sqrt(1.0 + alpha[k]) * (std::conj(beta[k]) * a).real() -
             std::norm(beta[k]) * b;
  }
  return total;
}

double PowerAllocation::surrogate(const FpState& state) const {
  std::vector<double> q(state.power.size());
  for (std::size_t n = 0; n < q.size(); ++n) q[n] = std::sqrt(state.power[n]);
  return surrogate_in_amplitudes(state.alpha, state.beta, q);
}

std::vector<double> PowerAllocation::update_alpha(const FpState& state) const {
  return sinr(state.power);
}

std::vector<cdouble> PowerAllocation::update_beta(const FpState& state) const {
  std::vector<cdouble> beta(num_users_);
  for (std::size_t k = 0; k < num_users_; ++k) {
    const AbTerms ab = ab_terms(state.power, k);
    beta[k] = std::sqrt(1.0 + state.alpha[k]) * ab.a / ab.b;
  }
  return beta;
}

void PowerAllocation::amplitude_gradient(std::span<const double> alpha,
                                         std::span<const cdouble> beta,
                                         std::span<const double> q,
                                         std::span<double> grad) const {
  // g[k][k'] = sum_i q_{i,k'} c(k, i, k')
  std::vector<cdouble> g(num_users_ * num_users_);
  for (std::size_t k = 0; k < num_users_; ++k) {
    for (std::size_t kp = 0; kp < num_users_; ++kp) {
      cdouble acc = 0.0;
      for (std::size_t i = 0; i < num_bs_; ++i) acc += q[i * num_users_ + kp] * coupling(k, i, kp);
      g[k * num_users_ + kp] = acc;
    }
  }
  for (std::size_t i = 0; i < num_bs_; ++i) {
    for (std::size_t kp = 0; kp < num_users_; ++kp) {
      double d = 2.0 * std::sqrt(1.0 + alpha[kp]) *
                 (std::conj(beta[kp]) * coupling(kp, i, kp)).real();
      for (std::size_t k = 0; k < num_users_; ++k) {
        d -= 2.0 * std::norm(beta[k]) *
             (std::conj(g[k * num_users_ + kp]) * coupling(k, i, kp)).real();
      }
      grad[i * num_users_ + kp] = d;
    }
  }
}

void PowerAllocation::project(std::span<double> q) const {
  for (double& x : q) x = std::max(x, 0.0);
  for (std::size_t i = 0; i < num_bs_; ++i) {
    double load = 0.0;
    for (std::size_t k = 0; k < num_users_; ++k) load += q[i * num_users_ + k] * q[i * num_users_ + k];
    if (load > p_max_ && load > 0.0) {
      const double s = std::sqrt(p_max_ / load);
      for (std::size_t k = 0; k < num_users_; ++k) q[i * num_users_ + k] *= s;
    }
  }
}

std::vector<double> PowerAllocation::power_step(const FpState& state,
                                                const PowerStepOptions& options) const {
  const std::size_t n = num_bs_ * num_users_;
  std::vector<double> q(n);
  for (std::size_t j = 0; j < n; ++j) q[j] = std::sqrt(std::max(state.power[j], 0.0));
  const std::vector<double> start = q;
  project(q);
  const bool feasible_start =
      q == start && std::all_of(state.power.begin(), state.power.end(), [](double p) { return p >= 0.0; });
  bool moved = false;

  std::vector<double> grad(n);
  std::vector<double> trial(n);
  double value = surrogate_in_amplitudes(state.alpha, state.beta, q);

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    amplitude_gradient(state.alpha, state.beta, q, grad);
    double step = options.initial_step;
    bool accepted = false;
    double trial_value = value;
    for (std::size_t h = 0; h <= options.max_halvings; ++h, step *= 0.5) {
      for (std::size_t j = 0; j < n; ++j) trial[j] = q[j] + step * grad[j];
      project(trial);
      double linear = 0.0;
      double dist_sq = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double delta = trial[j] - q[j];
        linear += grad[j] * delta;
        dist_sq += delta * delta;
      }
      if (dist_sq == 0.0) break;
      trial_value = surrogate_in_amplitudes(state.alpha, state.beta, trial);
      if (trial_value >= value + linear - dist_sq / (2.0 * step) && trial_value >= value) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    moved = true;
    const double improvement = trial_value - value;
    q.swap(trial);
    value = trial_value;
    if (improvement < options.min_improvement) break;
  }

  // Avoid the sqrt/square round trip when nothing changed.
  if (!moved && feasible_start) return state.power;
  std::vector<double> power(n);
  for (std::size_t j = 0; j < n; ++j) power[j] = q[j] * q[j];
  return power;
}

AoResult ao_solve(const ChannelRealization& real, const ComplexMatrix& v, const SystemConfig& cfg,
                  const AoOptions& options) {
  const EffectiveChannels eff(real, v);
  const PowerAllocation problem(eff, global_zf(eff), cfg.noise_watts(), cfg.p_max_watts());

  AoResult result;
  FpState state = problem.equal_power_state();
  auto record = [&] {
    if (options.record_substeps) result.substep_trace.push_back(problem.surrogate(state));
  };
  record();

  double previous = 0.0;
  for (std::size_t iter = 1; iter <= options.max_iterations; ++iter) {
    state.alpha = problem.update_alpha(state);
    record();
    state.beta = problem.update_beta(state);
    record();
    state.power = problem.power_step(state, options.power_step);
    record();
    state.objective_nats = problem.surrogate(state);
    result.trace.push_back(state.objective_nats);
    result.iterations = iter;
    if (!std::isfinite(state.objective_nats)) throw NumericError("ao_solve: surrogate diverged");
    if (iter > 1 &&
        std::abs(state.objective_nats - previous) <
            options.relative_tolerance * std::max(std::abs(previous), 1e-300)) {
      result.converged = true;
      break;
    }
    previous = state.objective_nats;
  }

  // Realign the auxiliaries with the final powers; the surrogate then equals
  // the sum rate in nats.
  state.alpha = problem.update_alpha(state);
  state.beta = problem.update_beta(state);
  state.objective_nats = problem.surrogate(state);

  result.solution = problem.solution(state.power, v);
  result.sum_rate_bits = sum_rate(eff, result.solution, cfg.noise_watts());
  result.state = std::move(state);
  return result;
}

}  // namespace irscf
