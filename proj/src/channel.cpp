// SPDX-License-Identifier: Apache-2.0

#include "irscf/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "irscf/errors.hpp"

namespace irscf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

ComplexMatrix phase_ramp(std::size_t count, double increment) {
  ComplexMatrix out(count, 1);
  for (std::size_t n = 0; n < count; ++n) {
    out.set(n, 0, std::polar(1.0, increment * static_cast<double>(n)));
  }
  return out;
}

ComplexMatrix rayleigh(std::size_t rows, std::size_t cols, Rng& rng) {
  ComplexMatrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out.set(r, c, rng.complex_normal());
  }
  return out;
}

// sqrt(kappa / (1 + kappa)) * los + sqrt(1 / (1 + kappa)) * nlos
ComplexMatrix rician(const ComplexMatrix& los, Rng& rng, double kappa) {
  const ComplexMatrix nlos = rayleigh(los.rows(), los.cols(), rng);
  return los * std::sqrt(kappa / (1.0 + kappa)) + nlos * std::sqrt(1.0 / (1.0 + kappa));
}

}  // namespace

double path_loss_db(double d_m, double alpha, const SystemConfig& cfg) {
  if (!(d_m > 0.0)) throw DomainError("path_loss_db: distance must be positive");
  return cfg.beta0_db - 10.0 * alpha * std::log10(d_m / cfg.d0_m);
}

double path_amplitude(double d_m, double alpha, const SystemConfig& cfg) {
  return std::sqrt(std::pow(10.0, path_loss_db(d_m, alpha, cfg) / 10.0));
}

Angles angles_between(const Vec3& from, const Vec3& to) {
  const double len = distance(from, to);
  if (!(len > 0.0)) throw DomainError("angles_between: coincident points");
  const double ux = (to.x - from.x) / len;
  const double uy = (to.y - from.y) / len;
  const double uz = (to.z - from.z) / len;
  return {std::atan2(uy, ux), std::asin(std::clamp(uz, -1.0, 1.0))};
}

ComplexMatrix array_response_irs(double azimuth, double elevation, std::size_t elements,
                                 double spacing) {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(elements))));
  if (side * side != elements) {
    throw ShapeError("array_response_irs: element count " + std::to_string(elements) +
                     " is not a perfect square");
  }
  const ComplexMatrix vertical = phase_ramp(side, kTwoPi * spacing * std::sin(elevation));
  const ComplexMatrix horizontal =
      phase_ramp(side, kTwoPi * spacing * std::sin(azimuth) * std::cos(elevation));
  return kron(vertical, horizontal);
}

ComplexMatrix array_response_bs(double azimuth, double elevation, std::size_t antennas,
                                double spacing) {
  if (antennas == 0) throw ShapeError("array_response_bs: need at least one antenna");
  return phase_ramp(antennas, kTwoPi * spacing * std::cos(azimuth) * std::cos(elevation));
}

ComplexMatrix cascade(const ComplexMatrix& g, const ComplexMatrix& f) {
  if (f.cols() != 1 || f.rows() != g.rows()) throw ShapeError("cascade: f must be L x 1");
  ComplexMatrix out(g.rows(), g.cols());
  for (std::size_t l = 0; l < g.rows(); ++l) {
    const cdouble fl = f(l, 0);
    for (std::size_t m = 0; m < g.cols(); ++m) out.set(l, m, fl * g(l, m));
  }
  return out;
}

ChannelRealization sample_realization(const SystemConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t n_bs = cfg.num_bs;
  const std::size_t n_users = cfg.num_users;
  const std::size_t m = cfg.num_antennas;
  const std::size_t l = cfg.num_elements;

  ChannelRealization out;
  out.num_bs = n_bs;
  out.num_users = n_users;

  out.user_positions.reserve(n_users);
  for (std::size_t k = 0; k < n_users; ++k) {
    const double x = rng.uniform(cfg.user_region.x_min, cfg.user_region.x_max);
    const double y = rng.uniform(cfg.user_region.y_min, cfg.user_region.y_max);
    out.user_positions.push_back({x, y, cfg.user_region.z});
  }

  out.direct.reserve(n_bs * n_users);
  for (std::size_t i = 0; i < n_bs; ++i) {
    for (std::size_t k = 0; k < n_users; ++k) {
      const double amp =
          path_amplitude(distance(cfg.bs_positions[i], out.user_positions[k]), cfg.alpha_bu, cfg);
      out.direct.push_back(rayleigh(m, 1, rng) * amp);
    }
  }

  out.bs_irs.reserve(n_bs);
  for (std::size_t i = 0; i < n_bs; ++i) {
    const Angles arrival = angles_between(cfg.irs_position, cfg.bs_positions[i]);
    const Angles departure = angles_between(cfg.bs_positions[i], cfg.irs_position);
    const ComplexMatrix los =
        matmul(array_response_irs(arrival.azimuth, arrival.elevation, l, cfg.spacing_irs),
               array_response_bs(departure.azimuth, departure.elevation, m, cfg.spacing_bs)
                   .adjoint());
    const double amp =
        path_amplitude(distance(cfg.bs_positions[i], cfg.irs_position), cfg.alpha_bi, cfg);
    out.bs_irs.push_back(rician(los, rng, cfg.kappa) * amp);
  }

  out.irs_user.reserve(n_users);
  for (std::size_t k = 0; k < n_users; ++k) {
    const Angles arrival = angles_between(cfg.irs_position, out.user_positions[k]);
    const ComplexMatrix los =
        array_response_irs(arrival.azimuth, arrival.elevation, l, cfg.spacing_irs);
    const double amp =
        path_amplitude(distance(cfg.irs_position, out.user_positions[k]), cfg.alpha_iu, cfg);
    out.irs_user.push_back(rician(los, rng, cfg.kappa) * amp);
  }

  out.cascaded.reserve(n_bs * n_users);
  for (std::size_t i = 0; i < n_bs; ++i) {
    for (std::size_t k = 0; k < n_users; ++k) out.cascaded.push_back(cascade(out.g(i), out.f(k)));
  }
  return out;
}

ChannelRealization ChannelRealization::permuted(const std::vector<std::size_t>& order) const {
  if (order.size() != num_users) throw ShapeError("permuted: order length mismatch");
  ChannelRealization out = *this;
  for (std::size_t k = 0; k < num_users; ++k) {
    out.irs_user[k] = irs_user[order[k]];
    out.user_positions[k] = user_positions[order[k]];
    for (std::size_t i = 0; i < num_bs; ++i) {
      out.direct[i * num_users + k] = d(i, order[k]);
      out.cascaded[i * num_users + k] = c(i, order[k]);
    }
  }
  return out;
}

ChannelRealization ChannelRealization::first_users(std::size_t count) const {
  if (count > num_users) throw ShapeError("first_users: count exceeds user count");
  ChannelRealization out;
  out.num_bs = num_bs;
  out.num_users = count;
  out.bs_irs = bs_irs;
  out.irs_user.assign(irs_user.begin(), irs_user.begin() + static_cast<std::ptrdiff_t>(count));
  out.user_positions.assign(user_positions.begin(),
                            user_positions.begin() + static_cast<std::ptrdiff_t>(count));
  for (std::size_t i = 0; i < num_bs; ++i) {
    for (std::size_t k = 0; k < count; ++k) {
      out.direct.push_back(d(i, k));
      out.cascaded.push_back(c(i, k));
    }
  }
  return out;
}

}  // namespace irscf
