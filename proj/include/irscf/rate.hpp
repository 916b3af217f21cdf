// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "irscf/channel.hpp"
#include "irscf/tape.hpp"
#include "irscf/tensor.hpp"

namespace irscf {

/// Per-BS beamformers w_{i,k} (flat at i * K + k, each M x 1) and the IRS
/// reflection vector v (L x 1).
struct BeamformingSolution {
  std::size_t num_bs = 0;
  std::size_t num_users = 0;
  std::vector<ComplexMatrix> w;
  ComplexMatrix v;

  BeamformingSolution() = default;
  BeamformingSolution(std::size_t bs, std::size_t users, std::size_t antennas, ComplexMatrix v);

  ComplexMatrix& at(std::size_t i, std::size_t k) { return w[i * num_users + k]; }
  const ComplexMatrix& at(std::size_t i, std::size_t k) const { return w[i * num_users + k]; }

  /// sum_k ||w_{i,k}||^2
  double bs_power(std::size_t i) const;
  /// Stacked IM x 1 beamformer of user k.
  ComplexMatrix stacked(std::size_t k) const;
};

/// h_{i,k} as a column vector, from h^H = d^H + f^H diag(v^H) G_i.
ComplexMatrix effective_channel(const ChannelRealization& real, const ComplexMatrix& v,
                                std::size_t i, std::size_t k);

/// Effective channels for one (realization, v) pair. Rebuild when v changes.
class EffectiveChannels {
 public:
  EffectiveChannels(const ChannelRealization& real, const ComplexMatrix& v);

  std::size_t num_bs() const noexcept { return num_bs_; }
  std::size_t num_users() const noexcept { return num_users_; }
  std::size_t num_antennas() const noexcept { return num_antennas_; }

  const ComplexMatrix& h(std::size_t i, std::size_t k) const { return h_[i * num_users_ + k]; }
  /// IM x 1 stack of h_{i,k} over BSs.
  ComplexMatrix stacked(std::size_t k) const;
  /// IM x K matrix [h_1, ..., h_K].
  ComplexMatrix stacked_matrix() const;
  /// M x K matrix [h_{i,1}, ..., h_{i,K}] of one BS.
  ComplexMatrix local_matrix(std::size_t i) const;

  /// h_k^H w_{k'} summed over BSs.
  cdouble gain(const BeamformingSolution& sol, std::size_t k, std::size_t k_prime) const;

 private:
  std::size_t num_bs_;
  std::size_t num_users_;
  std::size_t num_antennas_;
  std::vector<ComplexMatrix> h_;
};

struct SinrRate {
  double sinr = 0.0;
  double rate_bits = 0.0;
};

SinrRate sinr_and_rate(const EffectiveChannels& eff, const BeamformingSolution& sol,
                       std::size_t k, double noise_watts);

double sum_rate(const EffectiveChannels& eff, const BeamformingSolution& sol, double noise_watts);

/// Builds the effective channels from sol.v.
double sum_rate(const ChannelRealization& real, const BeamformingSolution& sol,
                double noise_watts);

/// A_k = h_k^H w_k, B_k = noise + sum_{k'} |h_k^H w_{k'}|^2 (k' = k included).
struct AbTerms {
  cdouble a;
  double b = 0.0;
};

AbTerms a_b_terms(const EffectiveChannels& eff, const BeamformingSolution& sol, std::size_t k,
                  double noise_watts);

/// Beamformers living on a tape: per BS an M x K real/imag pair, and v as a
/// 1 x L real/imag pair.
struct TapeBeamformers {
  std::vector<ad::Var> w_re;
  std::vector<ad::Var> w_im;
  ad::Var v_re;
  ad::Var v_im;
};

/// Differentiable sum rate in bits. Channels enter as constants; gradients
/// flow to w and v.
ad::Var sum_rate_on_tape(ad::Tape& tape, const ChannelRealization& real,
                         const TapeBeamformers& bf, double noise_watts);

/// Reads plain matrices back from a tape.
BeamformingSolution to_solution(const TapeBeamformers& bf);

}  // namespace irscf
