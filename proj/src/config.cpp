// SPDX-License-Identifier: Apache-2.0

#include "irscf/config.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "irscf/errors.hpp"

namespace irscf {

double distance(const Vec3& a, const Vec3& b) noexcept {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                   (a.z - b.z) * (a.z - b.z));
}

double dbm_to_watts(double dbm) noexcept { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double SystemConfig::p_max_watts() const noexcept { return dbm_to_watts(p_max_dbm); }
double SystemConfig::noise_watts() const noexcept { return dbm_to_watts(noise_dbm); }

std::size_t SystemConfig::irs_side() const noexcept {
  auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(num_elements))));
  return side * side == num_elements ? side : 0;
}

std::vector<Vec3> SystemConfig::default_bs_positions(std::size_t count) {
  const double r = 60.0 * std::numbers::sqrt3;
  std::vector<Vec3> all{{120.0, 0.0, 10.0}, {60.0, -r, 10.0}, {60.0, r, 10.0}};
  if (count > all.size()) {
    throw ConfigError("no default position for BS count " + std::to_string(count) +
                      "; set bs_positions explicitly");
  }
  all.resize(count);
  return all;
}

void SystemConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid system config: " + what); };
  if (num_bs < 1) fail("num_bs must be >= 1");
  if (num_antennas < 1) fail("num_antennas must be >= 1");
  if (num_users < 1) fail("num_users must be >= 1");
  if (num_elements < 1 || irs_side() == 0) fail("num_elements must be a perfect square");
  if (!std::isfinite(p_max_dbm)) fail("p_max_dbm must be finite");
  if (!std::isfinite(noise_dbm)) fail("noise_dbm must be finite");
  if (!(kappa >= 0.0)) fail("kappa must be >= 0");
  if (!(alpha_bu > 0.0) || !(alpha_bi > 0.0) || !(alpha_iu > 0.0)) {
    fail("path-loss exponents must be > 0");
  }
  if (!(d0_m > 0.0)) fail("d0_m must be > 0");
  if (!std::isfinite(beta0_db)) fail("beta0_db must be finite");
  if (bs_positions.size() != num_bs) {
    fail("bs_positions has " + std::to_string(bs_positions.size()) + " entries, expected " +
         std::to_string(num_bs));
  }
  if (!(user_region.x_min <= user_region.x_max) || !(user_region.y_min <= user_region.y_max)) {
    fail("user_region bounds are inverted");
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng Rng::fork(std::uint64_t index) const { return Rng(splitmix64(splitmix64(seed_) ^ index)); }

double Rng::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double Rng::normal() { return normal_(engine_); }

cdouble Rng::complex_normal() {
  const double re = normal() * std::numbers::sqrt2 / 2.0;
  const double im = normal() * std::numbers::sqrt2 / 2.0;
  return {re, im};
}

}  // namespace irscf
