// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "irscf/config.hpp"
#include "irscf/tensor.hpp"

namespace irscf {

/// One draw of every link in the network. Per-(BS, user) quantities are
/// stored flat at index i * K + k.
struct ChannelRealization {
  std::size_t num_bs = 0;
  std::size_t num_users = 0;
  std::vector<ComplexMatrix> direct;     // d_{i,k}, M x 1
  std::vector<ComplexMatrix> bs_irs;     // G_i, L x M
  std::vector<ComplexMatrix> irs_user;   // f_k, L x 1
  std::vector<ComplexMatrix> cascaded;   // C_{i,k} = diag(f_k) G_i, L x M
  std::vector<Vec3> user_positions;

  const ComplexMatrix& d(std::size_t i, std::size_t k) const { return direct[i * num_users + k]; }
  const ComplexMatrix& g(std::size_t i) const { return bs_irs[i]; }
  const ComplexMatrix& f(std::size_t k) const { return irs_user[k]; }
  const ComplexMatrix& c(std::size_t i, std::size_t k) const {
    return cascaded[i * num_users + k];
  }
  std::size_t num_antennas() const { return direct.front().rows(); }
  std::size_t num_elements() const { return bs_irs.front().rows(); }

  /// Reorders users; used to check permutation equivariance.
  ChannelRealization permuted(const std::vector<std::size_t>& order) const;
  /// Keeps the first `count` users.
  ChannelRealization first_users(std::size_t count) const;
};

struct Angles {
  double azimuth = 0.0;
  double elevation = 0.0;
};

/// Large-scale path loss in dB: beta0 - 10 alpha log10(d / d0).
double path_loss_db(double d_m, double alpha, const SystemConfig& cfg);

/// Amplitude factor sqrt(10^(beta / 10)) applied to small-scale fading.
double path_amplitude(double d_m, double alpha, const SystemConfig& cfg);

/// Direction of `to` seen from `from`: azimuth measured from +x in the xy
/// plane, elevation from the xy plane. Both the x-axis BS arrays and the
/// yz-plane IRS use this frame.
Angles angles_between(const Vec3& from, const Vec3& to);

/// Planar IRS response a_z(elevation) (x) a_x(azimuth, elevation), sqrt(L)
/// elements per side.
ComplexMatrix array_response_irs(double azimuth, double elevation, std::size_t elements,
                                 double spacing);

/// Uniform linear array along x.
ComplexMatrix array_response_bs(double azimuth, double elevation, std::size_t antennas,
                                double spacing);

/// diag(f) G: row l of G scaled by f_l.
ComplexMatrix cascade(const ComplexMatrix& g, const ComplexMatrix& f);

ChannelRealization sample_realization(const SystemConfig& cfg, Rng& rng);

}  // namespace irscf
