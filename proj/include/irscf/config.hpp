// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "irscf/tensor.hpp"

namespace irscf {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(const Vec3&) const = default;
};

double distance(const Vec3& a, const Vec3& b) noexcept;

// Users are drawn uniformly in [x_min, x_max] x [y_min, y_max] at height z.
struct UserRegion {
  double x_min = 0.0;
  double x_max = 20.0;
  double y_min = -20.0;
  double y_max = 20.0;
  double z = 0.0;

  bool operator==(const UserRegion&) const = default;
};

/// Scenario scalars and geometry. Powers are kept in dBm here; use the
/// *_watts() accessors for all rate math.
struct SystemConfig {
  std::size_t num_bs = 3;         // I
  std::size_t num_antennas = 4;   // M
  std::size_t num_users = 3;      // K
  std::size_t num_elements = 64;  // L, a perfect square
  double p_max_dbm = 15.0;
  double noise_dbm = -90.0;
  double kappa = 10.0;
  double alpha_bu = 3.75;
  double alpha_bi = 2.2;
  double alpha_iu = 2.2;
  double beta0_db = -30.0;
  double d0_m = 1.0;
  double spacing_irs = 0.5;  // wavelengths
  double spacing_bs = 0.5;   // wavelengths
  std::vector<Vec3> bs_positions = default_bs_positions(3);
  Vec3 irs_position{0.0, 0.0, 10.0};
  UserRegion user_region{};

  double p_max_watts() const noexcept;
  double noise_watts() const noexcept;
  std::size_t irs_side() const noexcept;

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;

  /// The reference three-BS layout; for fewer BSs the first ones are kept.
  static std::vector<Vec3> default_bs_positions(std::size_t count);

  bool operator==(const SystemConfig&) const = default;
};

double dbm_to_watts(double dbm) noexcept;

/// Seedable 64-bit generator (mt19937_64) with the distributions the
/// simulator needs.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::mt19937_64& engine() noexcept { return engine_; }

  /// Independent stream for `index`, seeded by SplitMix64-mixing the base
  /// seed with the index so distinct (seed, index) pairs do not collide.
  Rng fork(std::uint64_t index) const;

  double uniform(double lo, double hi);
  double normal();
  /// CN(0, 1): real and imaginary parts each N(0, 1/2).
  cdouble complex_normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace irscf
