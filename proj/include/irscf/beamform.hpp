// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "irscf/config.hpp"
#include "irscf/rate.hpp"
#include "irscf/tape.hpp"

namespace irscf {

/// Unit-norm beamforming directions, flat at i * K + k, each M x 1.
using Directions = std::vector<ComplexMatrix>;

/// W~ = H (H^H H)^{-1} on the stacked IM x K effective channel.
ComplexMatrix global_zf_matrix(const EffectiveChannels& eff);

/// Global ZF split per BS block and normalized to unit norm, as consumed by
/// power allocation. Nulling is not preserved after the per-block split.
Directions global_zf(const EffectiveChannels& eff);

/// "Global ZF" benchmark: every user gets the same power along its full
/// IM-dimensional ZF column, so interference stays nulled. The common scale
/// puts the most loaded BS exactly at p_max; the others sit below it.
BeamformingSolution global_zf_solution(const EffectiveChannels& eff, const ComplexMatrix& v,
                                       double p_max_watts);

/// ZF on BS i's own M x K block. Throws InfeasibleError when M < K.
Directions local_zf(const EffectiveChannels& eff, std::size_t i);
Directions local_zf_all(const EffectiveChannels& eff);

/// h_{i,k} / ||h_{i,k}||. Throws DegenerateError on a zero channel.
Directions mrt(const EffectiveChannels& eff);

/// w_{i,k} = sqrt(p_max / K) * direction; every BS spends exactly p_max.
BeamformingSolution equal_power_solution(const Directions& directions, std::size_t num_bs,
                                         std::size_t num_users, const ComplexMatrix& v,
                                         double p_max_watts);

/// v_l = exp(j theta_l), theta_l ~ U[0, 2 pi).
ComplexMatrix random_irs_phases(std::size_t elements, Rng& rng);

/// sqrt(p_max) * W'' / ||W''||_F, so Tr(W W^H) = p_max.
ComplexMatrix normalize_bs_power(const ComplexMatrix& raw, double p_max_watts);
std::pair<ad::Var, ad::Var> normalize_bs_power(ad::Var raw_re, ad::Var raw_im, double p_max_watts);

/// v_l = (raw_l + j raw_{l+L}) / |raw_l + j raw_{l+L}| for a length-2L input.
ComplexMatrix normalize_unit_modulus(std::span<const double> raw);
/// Tape version on a 1 x 2L row; returns the 1 x L real/imag rows.
std::pair<ad::Var, ad::Var> normalize_unit_modulus(ad::Var raw);

}  // namespace irscf
