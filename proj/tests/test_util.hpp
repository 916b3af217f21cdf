// SPDX-License-Identifier: Apache-2.0
// Shared helpers for the unit tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "irscf/channel.hpp"
#include "irscf/config.hpp"
#include "irscf/tape.hpp"
#include "irscf/tensor.hpp"

namespace irscf::testing {

inline RealTensor random_tensor(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0,
                                double hi = 1.0) {
  RealTensor t = RealTensor::matrix(rows, cols);
  for (double& x : t.data()) x = rng.uniform(lo, hi);
  return t;
}

inline ComplexMatrix random_complex(Rng& rng, std::size_t rows, std::size_t cols) {
  ComplexMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m.set(r, c, rng.complex_normal());
  }
  return m;
}

inline double rel_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

using TapeFn = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

// Largest relative error between tape gradients of fn and central differences.
inline double tape_gradcheck(const std::vector<RealTensor>& inputs, const TapeFn& fn,
                             double step = 1e-5) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& x : inputs) vars.push_back(tape.parameter(x));
  tape.backward(fn(tape, vars));

  auto evaluate = [&](const std::vector<RealTensor>& xs) {
    ad::Tape t;
    std::vector<ad::Var> vs;
    for (const auto& x : xs) vs.push_back(t.constant(x));
    return fn(t, vs).value()[0];
  };
  double worst = 0.0;
  std::vector<RealTensor> probe = inputs;
  for (std::size_t n = 0; n < inputs.size(); ++n) {
    for (std::size_t j = 0; j < inputs[n].size(); ++j) {
      const double saved = probe[n][j];
      probe[n][j] = saved + step;
      const double up = evaluate(probe);
      probe[n][j] = saved - step;
      const double down = evaluate(probe);
      probe[n][j] = saved;
      worst = std::max(worst, rel_error(vars[n].grad()[j], (up - down) / (2 * step)));
    }
  }
  return worst;
}

inline SystemConfig small_config(std::size_t bs, std::size_t m, std::size_t k, std::size_t l) {
  SystemConfig cfg;
  cfg.num_bs = bs;
  cfg.bs_positions = SystemConfig::default_bs_positions(bs);
  cfg.num_antennas = m;
  cfg.num_users = k;
  cfg.num_elements = l;
  return cfg;
}

}  // namespace irscf::testing
