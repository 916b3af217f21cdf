// SPDX-License-Identifier: Apache-2.0

#include "irscf/rate.hpp"

#include <cmath>

#include "irscf/errors.hpp"

namespace irscf {

BeamformingSolution::BeamformingSolution(std::size_t bs, std::size_t users, std::size_t antennas,
                                         ComplexMatrix v_in)
    : num_bs(bs), num_users(users), w(bs * users, ComplexMatrix(antennas, 1)),
      v(std::move(v_in)) {}

double BeamformingSolution::bs_power(std::size_t i) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < num_users; ++k) acc += at(i, k).frobenius_norm_sq();
  return acc;
}

ComplexMatrix BeamformingSolution::stacked(std::size_t k) const {
  const std::size_t m = w.front().rows();
  ComplexMatrix out(num_bs * m, 1);
  for (std::size_t i = 0; i < num_bs; ++i) {
    for (std::size_t a = 0; a < m; ++a) out.set(i * m + a, 0, at(i, k)(a, 0));
  }
  return out;
}

ComplexMatrix effective_channel(const ChannelRealization& real, const ComplexMatrix& v,
                                std::size_t i, std::size_t k) {
  const ComplexMatrix& g = real.g(i);
  const ComplexMatrix& f = real.f(k);
  if (v.rows() != g.rows() || v.cols() != 1) throw ShapeError("effective_channel: v must be L x 1");
  // Row form: h^H[m] = conj(d[m]) + sum_l conj(f_l) conj(v_l) G[l, m].
  const ComplexMatrix& d = real.d(i, k);
  ComplexMatrix h(g.cols(), 1);
  for (std::size_t m = 0; m < g.cols(); ++m) {
    cdouble row = std::conj(d(m, 0));
    for (std::size_t l = 0; l < g.rows(); ++l) {
      row += std::conj(f(l, 0)) * std::conj(v(l, 0)) * g(l, m);
    }
    h.set(m, 0, std::conj(row));
  }
  return h;
}

EffectiveChannels::EffectiveChannels(const ChannelRealization& real, const ComplexMatrix& v)
    : num_bs_(real.num_bs), num_users_(real.num_users), num_antennas_(real.num_antennas()) {
  h_.reserve(num_bs_ * num_users_);
  for (std::size_t i = 0; i < num_bs_; ++i) {
    for (std::size_t k = 0; k < num_users_; ++k) h_.push_back(effective_channel(real, v, i, k));
  }
}

ComplexMatrix EffectiveChannels::stacked(std::size_t k) const {
  ComplexMatrix out(num_bs_ * num_antennas_, 1);
  for (std::size_t i = 0; i < num_bs_; ++i) {
    for (std::size_t m = 0; m < num_antennas_; ++m) out.set(i * num_antennas_ + m, 0, h(i, k)(m, 0));
  }
  return out;
}

ComplexMatrix EffectiveChannels::stacked_matrix() const {
  ComplexMatrix out(num_bs_ * num_antennas_, num_users_);
  for (std::size_t k = 0; k < num_users_; ++k) out.set_column(k, stacked(k));
  return out;
}

ComplexMatrix EffectiveChannels::local_matrix(std::size_t i) const {
  ComplexMatrix out(num_antennas_, num_users_);
  for (std::size_t k = 0; k < num_users_; ++k) out.set_column(k, h(i, k));
  return out;
}

cdouble EffectiveChannels::gain(const BeamformingSolution& sol, std::size_t k,
                                std::size_t k_prime) const {
  cdouble acc = 0.0;
  for (std::size_t i = 0; i < num_bs_; ++i) acc += inner(h(i, k), sol.at(i, k_prime));
  return acc;
}

SinrRate sinr_and_rate(const EffectiveChannels& eff, const BeamformingSolution& sol,
                       std::size_t k, double noise_watts) {
  double interference = 0.0;
  double signal = 0.0;
  for (std::size_t kp = 0; kp < eff.num_users(); ++kp) {
    const double p = std::norm(eff.gain(sol, k, kp));
    if (kp == k) {
      signal = p;
    } else {
      interference += p;
    }
  }
  const double sinr = signal / (interference + noise_watts);
  return {sinr, std::log2(1.0 + sinr)};
}

double sum_rate(const EffectiveChannels& eff, const BeamformingSolution& sol, double noise_watts) {
  double acc = 0.0;
  for (std::size_t k = 0; k < eff.num_users(); ++k) {
    acc += sinr_and_rate(eff, sol, k, noise_watts).rate_bits;
  }
  return acc;
}

double sum_rate(const ChannelRealization& real, const BeamformingSolution& sol,
                double noise_watts) {
  return sum_rate(EffectiveChannels(real, sol.v), sol, noise_watts);
}

AbTerms a_b_terms(const EffectiveChannels& eff, const BeamformingSolution& sol, std::size_t k,
                  double noise_watts) {
  AbTerms out;
  out.a = eff.gain(sol, k, k);
  out.b = noise_watts;
  for (std::size_t kp = 0; kp < eff.num_users(); ++kp) out.b += std::norm(eff.gain(sol, k, kp));
  return out;
}

ad::Var sum_rate_on_tape(ad::Tape& tape, const ChannelRealization& real,
                         const TapeBeamformers& bf, double noise_watts) {
  const std::size_t n_bs = real.num_bs;
  const std::size_t n_users = real.num_users;
  const std::size_t m = real.num_antennas();
  const std::size_t l = real.num_elements();

  RealTensor eye = RealTensor::matrix(n_users, n_users);
  for (std::size_t k = 0; k < n_users; ++k) eye(k, k) = 1.0;
  const ad::Var eye_var = tape.constant(std::move(eye));

  ad::Var z_re;
  ad::Var z_im;
  for (std::size_t i = 0; i < n_bs; ++i) {
    // Rows of H_i are h_{i,k}^H = conj(d)^T + v^H B_{i,k} with
    // B_{i,k}[l, m] = conj(f_{k,l}) G_i[l, m]; the B blocks are laid side by
    // side so one matmul covers all users.
    RealTensor d_re = RealTensor::matrix(n_users, m);
    RealTensor d_im = RealTensor::matrix(n_users, m);
    RealTensor b_re = RealTensor::matrix(l, n_users * m);
    RealTensor b_im = RealTensor::matrix(l, n_users * m);
    for (std::size_t k = 0; k < n_users; ++k) {
      const ComplexMatrix& d = real.d(i, k);
      for (std::size_t a = 0; a < m; ++a) {
        d_re(k, a) = d(a, 0).real();
        d_im(k, a) = -d(a, 0).imag();
      }
      const ComplexMatrix& f = real.f(k);
      const ComplexMatrix& g = real.g(i);
      for (std::size_t e = 0; e < l; ++e) {
        const cdouble fc = std::conj(f(e, 0));
        for (std::size_t a = 0; a < m; ++a) {
          const cdouble b = fc * g(e, a);
          b_re(e, k * m + a) = b.real();
          b_im(e, k * m + a) = b.imag();
        }
      }
    }
    const ad::Var br = tape.constant(std::move(b_re));
    const ad::Var bi = tape.constant(std::move(b_im));
    // (vr - j vi)(Br + j Bi) = (vr Br + vi Bi) + j (vr Bi - vi Br)
    const ad::Var refl_re = ad::add(ad::matmul(bf.v_re, br), ad::matmul(bf.v_im, bi));
    const ad::Var refl_im = ad::sub(ad::matmul(bf.v_re, bi), ad::matmul(bf.v_im, br));
    const ad::Var h_re = ad::add(tape.constant(std::move(d_re)), ad::reshape(refl_re, n_users, m));
    const ad::Var h_im = ad::add(tape.constant(std::move(d_im)), ad::reshape(refl_im, n_users, m));

    // Z[k, k'] = h_{i,k}^H w_{i,k'}
    const ad::Var zr = ad::sub(ad::matmul(h_re, bf.w_re[i]), ad::matmul(h_im, bf.w_im[i]));
    const ad::Var zi = ad::add(ad::matmul(h_re, bf.w_im[i]), ad::matmul(h_im, bf.w_re[i]));
    if (i == 0) {
      z_re = zr;
      z_im = zi;
    } else {
      z_re = ad::add(z_re, zr);
      z_im = ad::add(z_im, zi);
    }
  }

  const ad::Var power = ad::sq_mag(z_re, z_im);
  const ad::Var total = ad::row_sum(power);
  const ad::Var signal = ad::row_sum(ad::mul(power, eye_var));
  const ad::Var denom = ad::add_scalar(ad::sub(total, signal), noise_watts);
  const ad::Var sinr = ad::div(signal, denom);
  return ad::sum(ad::log2(ad::add_scalar(sinr, 1.0)));
}

BeamformingSolution to_solution(const TapeBeamformers& bf) {
  const std::size_t n_bs = bf.w_re.size();
  const std::size_t m = bf.w_re.front().rows();
  const std::size_t n_users = bf.w_re.front().cols();
  const std::size_t l = bf.v_re.cols();
  ComplexMatrix v(l, 1);
  for (std::size_t e = 0; e < l; ++e) v.set(e, 0, {bf.v_re.value()[e], bf.v_im.value()[e]});
  BeamformingSolution sol(n_bs, n_users, m, std::move(v));
  for (std::size_t i = 0; i < n_bs; ++i) {
    const RealTensor& re = bf.w_re[i].value();
    const RealTensor& im = bf.w_im[i].value();
    for (std::size_t k = 0; k < n_users; ++k) {
      for (std::size_t a = 0; a < m; ++a) sol.at(i, k).set(a, 0, {re(a, k), im(a, k)});
    }
  }
  return sol;
}

}  // namespace irscf
