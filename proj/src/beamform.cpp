// SPDX-License-Identifier: Apache-2.0

#include "irscf/beamform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "irscf/errors.hpp"

namespace irscf {

namespace {

ComplexMatrix unit(const ComplexMatrix& x, const char* what) {
  const double norm = x.frobenius_norm();
  if (!(norm > 0.0)) throw DegenerateError(std::string(what) + ": zero-norm vector");
  return x * cdouble(1.0 / norm, 0.0);
}

}  // namespace

ComplexMatrix global_zf_matrix(const EffectiveChannels& eff) {
  return hermitian_solve_pinv(eff.stacked_matrix());
}

Directions global_zf(const EffectiveChannels& eff) {
  const ComplexMatrix w = global_zf_matrix(eff);
  const std::size_t m = eff.num_antennas();
  Directions out;
  out.reserve(eff.num_bs() * eff.num_users());
  for (std::size_t i = 0; i < eff.num_bs(); ++i) {
    for (std::size_t k = 0; k < eff.num_users(); ++k) {
      out.push_back(unit(w.block(i * m, k, m, 1), "global_zf"));
    }
  }
  return out;
}

BeamformingSolution global_zf_solution(const EffectiveChannels& eff, const ComplexMatrix& v,
                                       double p_max_watts) {
  const ComplexMatrix w = global_zf_matrix(eff);
  const std::size_t m = eff.num_antennas();
  const std::size_t n_bs = eff.num_bs();
  const std::size_t n_users = eff.num_users();

  std::vector<ComplexMatrix> columns;
  columns.reserve(n_users);
  for (std::size_t k = 0; k < n_users; ++k) columns.push_back(unit(w.column(k), "global_zf"));

  double max_load = 0.0;
  for (std::size_t i = 0; i < n_bs; ++i) {
    double load = 0.0;
    for (std::size_t k = 0; k < n_users; ++k) {
      load += columns[k].block(i * m, 0, m, 1).frobenius_norm_sq();
    }
    max_load = std::max(max_load, load);
  }
  const double amp = std::sqrt(p_max_watts / max_load);

  BeamformingSolution sol(n_bs, n_users, m, v);
  for (std::size_t i = 0; i < n_bs; ++i) {
    for (std::size_t k = 0; k < n_users; ++k) {
      sol.at(i, k) = columns[k].block(i * m, 0, m, 1) * cdouble(amp, 0.0);
    }
  }
  return sol;
}

Directions local_zf(const EffectiveChannels& eff, std::size_t i) {
  if (eff.num_antennas() < eff.num_users()) {
    throw InfeasibleError("local ZF needs M >= K (M = " + std::to_string(eff.num_antennas()) +
                          ", K = " + std::to_string(eff.num_users()) + ")");
  }
  const ComplexMatrix w = hermitian_solve_pinv(eff.local_matrix(i));
  Directions out;
  out.reserve(eff.num_users());
  for (std::size_t k = 0; k < eff.num_users(); ++k) out.push_back(unit(w.column(k), "local_zf"));
  return out;
}

Directions local_zf_all(const EffectiveChannels& eff) {
  Directions out;
  out.reserve(eff.num_bs() * eff.num_users());
  for (std::size_t i = 0; i < eff.num_bs(); ++i) {
    Directions local = local_zf(eff, i);
    std::move(local.begin(), local.end(), std::back_inserter(out));
  }
  return out;
}

Directions mrt(const EffectiveChannels& eff) {
  Directions out;
  out.reserve(eff.num_bs() * eff.num_users());
  for (std::size_t i = 0; i < eff.num_bs(); ++i) {
    for (std::size_t k = 0; k < eff.num_users(); ++k) out.push_back(unit(eff.h(i, k), "mrt"));
  }
  return out;
}

BeamformingSolution equal_power_solution(const Directions& directions, std::size_t num_bs,
                                         std::size_t num_users, const ComplexMatrix& v,
                                         double p_max_watts) {
  if (directions.size() != num_bs * num_users) {
    throw ShapeError("equal_power_solution: expected I*K directions");
  }
  const double amp = std::sqrt(p_max_watts / static_cast<double>(num_users));
  BeamformingSolution sol(num_bs, num_users, directions.front().rows(), v);
  for (std::size_t n = 0; n < directions.size(); ++n) sol.w[n] = directions[n] * cdouble(amp, 0.0);
  return sol;
}

ComplexMatrix random_irs_phases(std::size_t elements, Rng& rng) {
  ComplexMatrix v(elements, 1);
  for (std::size_t l = 0; l < elements; ++l) {
    v.set(l, 0, std::polar(1.0, rng.uniform(0.0, 2.0 * std::numbers::pi)));
  }
  return v;
}

ComplexMatrix normalize_bs_power(const ComplexMatrix& raw, double p_max_watts) {
  const double norm = raw.frobenius_norm();
  if (!(norm > 0.0)) throw DegenerateError("normalize_bs_power: all-zero input");
  return raw * cdouble(std::sqrt(p_max_watts) / norm, 0.0);
}

std::pair<ad::Var, ad::Var> normalize_bs_power(ad::Var raw_re, ad::Var raw_im,
                                               double p_max_watts) {
  const ad::Var norm = ad::sqrt(ad::sum(ad::sq_mag(raw_re, raw_im)));
  if (!(norm.value()[0] > 0.0)) throw DegenerateError("normalize_bs_power: all-zero input");
  const double amp = std::sqrt(p_max_watts);
  return {ad::scale(ad::div_scalar(raw_re, norm), amp),
          ad::scale(ad::div_scalar(raw_im, norm), amp)};
}

ComplexMatrix normalize_unit_modulus(std::span<const double> raw) {
  if (raw.size() % 2 != 0) throw ShapeError("normalize_unit_modulus: odd input length");
  const std::size_t l = raw.size() / 2;
  ComplexMatrix v(l, 1);
  for (std::size_t e = 0; e < l; ++e) {
    const double mag = std::sqrt(raw[e] * raw[e] + raw[e + l] * raw[e + l]);
    if (!(mag > 0.0)) {
      throw DegenerateError("normalize_unit_modulus: zero pair at element " + std::to_string(e));
    }
    v.set(e, 0, {raw[e] / mag, raw[e + l] / mag});
  }
  return v;
}

std::pair<ad::Var, ad::Var> normalize_unit_modulus(ad::Var raw) {
  if (raw.rows() != 1 || raw.cols() % 2 != 0) {
    throw ShapeError("normalize_unit_modulus: expected a 1 x 2L row");
  }
  const std::size_t l = raw.cols() / 2;
  const ad::Var re = ad::slice_cols(raw, 0, l);
  const ad::Var im = ad::slice_cols(raw, l, 2 * l);
  const ad::Var mag = ad::sqrt(ad::sq_mag(re, im));
  for (std::size_t e = 0; e < l; ++e) {
    if (!(mag.value()[e] > 0.0)) {
      throw DegenerateError("normalize_unit_modulus: zero pair at element " + std::to_string(e));
    }
  }
  return {ad::div(re, mag), ad::div(im, mag)};
}

}  // namespace irscf
