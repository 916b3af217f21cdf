// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion. Every tolerance below is
// fixed here and reported alongside the measured value.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "irscf/beamform.hpp"
#include "irscf/fp_baseline.hpp"
#include "irscf/gnn.hpp"
#include "irscf/harness.hpp"
#include "irscf/persist.hpp"
#include "irscf/trainer.hpp"

using namespace irscf;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances.
constexpr double kGradTol = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr double kGradSeconds = 60.0;
constexpr double kConstraintTol = 1e-9;
constexpr double kNullingTol = 1e-8;
constexpr double kTraceTol = 1e-9;
constexpr double kIdentityTol = 1e-6;
constexpr double kGridTol = 1e-4;
constexpr double kStationaryTol = 1e-6;
constexpr double kStationaryStep = 1e-6;
constexpr double kPermutationTol = 1e-12;
constexpr double kLossRatio = 0.8;
constexpr double kTrainMinutes = 30.0;

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("%s criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

SystemConfig scenario(std::size_t bs, std::size_t m, std::size_t k, std::size_t l,
                      double p_dbm = 15.0) {
  SystemConfig cfg;
  cfg.num_bs = bs;
  cfg.bs_positions = SystemConfig::default_bs_positions(bs);
  cfg.num_antennas = m;
  cfg.num_users = k;
  cfg.num_elements = l;
  cfg.p_max_dbm = p_dbm;
  cfg.validate();
  return cfg;
}

ChannelRealization draw(const SystemConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  return sample_realization(cfg, rng);
}

GnnModel model_for(const SystemConfig& cfg, std::vector<std::size_t> widths, std::uint64_t seed) {
  Rng rng(seed);
  return init_model(model_shape_for(cfg, std::move(widths)), rng);
}

// Worst violation of the power and unit-modulus constraints.
double constraint_gap(const BeamformingSolution& sol, double p_max) {
  double worst = 0.0;
  for (std::size_t i = 0; i < sol.num_bs; ++i) worst = std::max(worst, std::abs(sol.bs_power(i) - p_max));
  for (std::size_t l = 0; l < sol.v.rows(); ++l) {
    worst = std::max(worst, std::abs(std::abs(sol.v(l, 0)) - 1.0));
  }
  return worst;
}

double permutation_gap(const GnnModel& model, const ChannelRealization& real, Rng& rng) {
  std::vector<std::size_t> order(real.num_users);
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::shuffle(order.begin(), order.end(), rng.engine());
  const BeamformingSolution base = forward(model, real);
  const BeamformingSolution perm = forward(model, real.permuted(order));
  double worst = (perm.v - base.v).max_abs();
  for (std::size_t i = 0; i < real.num_bs; ++i) {
    for (std::size_t k = 0; k < order.size(); ++k) {
      worst = std::max(worst, (perm.at(i, k) - base.at(i, order[k])).max_abs());
    }
  }
  return worst;
}

// Unit-scale direct-only network (noise 1, p_max 1) for the FP checks.
ChannelRealization synthetic(std::uint64_t seed, std::size_t bs, std::size_t m, std::size_t k) {
  Rng rng(seed);
  ChannelRealization r;
  r.num_bs = bs;
  r.num_users = k;
  for (std::size_t i = 0; i < bs; ++i) {
    r.bs_irs.push_back(ComplexMatrix(1, m));
    for (std::size_t u = 0; u < k; ++u) {
      ComplexMatrix d(m, 1);
      for (std::size_t a = 0; a < m; ++a) d.set(a, 0, rng.complex_normal());
      r.direct.push_back(d);
      r.cascaded.push_back(ComplexMatrix(1, m));
    }
  }
  for (std::size_t u = 0; u < k; ++u) r.irs_user.push_back(ComplexMatrix(1, 1));
  r.user_positions.resize(k);
  return r;
}

const ComplexMatrix kOne = ComplexMatrix::from(1, 1, {1.0});

// Polar grid over each BS's quarter disk of amplitudes, refined by zooming.
double grid_maximum(const PowerAllocation& pa, const FpState& s) {
  const double rmax = std::sqrt(pa.p_max());
  const double half_pi = std::numbers::pi / 2;
  const double full[4] = {rmax, half_pi, rmax, half_pi};
  double lo[4] = {0, 0, 0, 0};
  double hi[4] = {rmax, half_pi, rmax, half_pi};
  double best = -1e300;
  double arg[4] = {0, 0, 0, 0};
  int points = 41;
  for (int round = 0; round < 6; ++round) {
    double step[4];
    for (int d = 0; d < 4; ++d) step[d] = (hi[d] - lo[d]) / (points - 1);
    for (int a = 0; a < points; ++a)
      for (int b = 0; b < points; ++b)
        for (int c = 0; c < points; ++c)
          for (int e = 0; e < points; ++e) {
            const double x[4] = {lo[0] + a * step[0], lo[1] + b * step[1], lo[2] + c * step[2],
                                 lo[3] + e * step[3]};
            const double q[4] = {x[0] * std::cos(x[1]), x[0] * std::sin(x[1]),
                                 x[2] * std::cos(x[3]), x[2] * std::sin(x[3])};
            const double f = pa.surrogate_in_amplitudes(s.alpha, s.beta, q);
            if (f > best) {
              best = f;
              std::copy(x, x + 4, arg);
            }
          }
    for (int d = 0; d < 4; ++d) {
      lo[d] = std::max(0.0, arg[d] - 2 * step[d]);
      hi[d] = std::min(full[d], arg[d] + 2 * step[d]);
    }
    points = 15;
  }
  return best;
}

double pooled_se(const ResultRow& a, const ResultRow& b) {
  return std::sqrt((a.std_sum_rate * a.std_sum_rate + b.std_sum_rate * b.std_sum_rate) /
                   static_cast<double>(a.trials));
}

void criterion1() {
  const auto t0 = Clock::now();
  const SystemConfig cfg = scenario(2, 2, 2, 4);
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const GnnModel model = model_for(cfg, {8, 8}, seed);
    const GradcheckReport r = gradcheck(model, draw(cfg, 100 + seed), cfg.noise_watts(), kGradStep);
    worst = std::max(worst, r.max_relative_error);
    checked += r.checked;
  }
  const double secs = seconds_since(t0);
  report(1, worst < kGradTol && secs < kGradSeconds, "end-to-end gradient vs central differences",
         fmt("max rel err %.2e", worst) + " over " + std::to_string(checked) +
             " parameters, tol 1e-4, " + fmt("%.1f s", secs));
}

void criterion2() {
  const SystemConfig cfg = scenario(3, 2, 3, 9);
  double worst = 0.0;
  for (std::uint64_t m = 0; m < 100; ++m) {
    const GnnModel model = model_for(cfg, {16, 8}, 5000 + m);
    for (std::uint64_t t = 0; t < 100; ++t) {
      worst = std::max(worst, constraint_gap(forward(model, draw(cfg, m * 1000 + t)), cfg.p_max_watts()));
    }
  }
  report(2, worst <= kConstraintTol, "power and unit-modulus constraints on 10^4 forward passes",
         fmt("max violation %.2e", worst) + ", tol 1e-9");
}

void criterion3() {
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    const std::size_t k = 2 + t % 5;  // IM = 6 >= K
    const SystemConfig cfg = scenario(3, 2, k, 16);
    Rng rng(t);
    const ChannelRealization real = sample_realization(cfg, rng);
    const ComplexMatrix v = random_irs_phases(16, rng);
    const EffectiveChannels eff(real, v);
    const BeamformingSolution sol = global_zf_solution(eff, v, cfg.p_max_watts());
    for (std::size_t a = 0; a < k; ++a) {
      const ComplexMatrix h = eff.stacked(a);
      for (std::size_t b = 0; b < k; ++b) {
        if (a == b) continue;
        const ComplexMatrix w = sol.stacked(b);
        worst = std::max(worst, std::abs(inner(h, w)) / (h.frobenius_norm() * w.frobenius_norm()));
      }
    }
  }
  report(3, worst < kNullingTol, "global ZF nulling on 10^3 realizations",
         fmt("max normalized leakage %.2e", worst) + ", tol 1e-8");
}

void criterion4() {
  const SystemConfig cfg = scenario(3, 8, 3, 16);
  double worst_drop = 0.0, worst_identity = 0.0;
  std::size_t converged = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const Trial trial = make_trial(cfg, 4000, t);
    const AoResult res = ao_solve(trial.real, trial.v, cfg);
    for (std::size_t n = 1; n < res.trace.size(); ++n) {
      worst_drop = std::max(worst_drop, res.trace[n - 1] - res.trace[n]);
    }
    if (res.converged) {
      ++converged;
      const double bits = res.trace.back() / std::numbers::ln2;
      worst_identity = std::max(worst_identity, std::abs(bits - res.sum_rate_bits) / res.sum_rate_bits);
    }
  }
  double worst_grid = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ChannelRealization r = synthetic(700 + seed, 2, 2, 2);
    const EffectiveChannels eff(r, kOne);
    const PowerAllocation pa(eff, global_zf(eff), 1.0, 1.0);
    FpState s = pa.equal_power_state();
    s.alpha = pa.update_alpha(s);
    s.beta = pa.update_beta(s);
    const std::vector<double> p = pa.power_step(s);
    std::vector<double> q(p.size());
    for (std::size_t n = 0; n < p.size(); ++n) q[n] = std::sqrt(p[n]);
    worst_grid = std::max(worst_grid, std::abs(pa.surrogate_in_amplitudes(s.alpha, s.beta, q) -
                                               grid_maximum(pa, s)));
  }
  const bool pass = worst_drop <= kTraceTol && converged == 100 && worst_identity < kIdentityTol &&
                    worst_grid < kGridTol;
  report(4, pass, "AO trace monotone, rate identity, power step vs grid oracle",
         fmt("max trace drop %.2e (tol 1e-9)", worst_drop) + ", " + std::to_string(converged) +
             "/100 converged, " + fmt("max identity rel err %.2e (tol 1e-6)", worst_identity) + ", " +
             fmt("max grid gap %.2e (tol 1e-4)", worst_grid));
}

void criterion5() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ChannelRealization r = synthetic(seed, 2 + seed % 2, 3, 3);
    const EffectiveChannels eff(r, kOne);
    const PowerAllocation pa(eff, global_zf(eff), 1.0, 1.0);
    Rng rng(seed + 31);
    FpState s = pa.equal_power_state();
    for (double& p : s.power) p = rng.uniform(0.0, 1.0 / 3.0);
    s.alpha = pa.update_alpha(s);
    s.beta = pa.update_beta(s);
    const double h = kStationaryStep;
    for (std::size_t k = 0; k < 3; ++k) {
      FpState up = s, down = s;
      up.alpha[k] += h;
      down.alpha[k] -= h;
      worst = std::max(worst, std::abs(pa.surrogate(up) - pa.surrogate(down)) / (2 * h));
      for (cdouble dir : {cdouble(1, 0), cdouble(0, 1)}) {
        up = s;
        down = s;
        up.beta[k] += h * dir;
        down.beta[k] -= h * dir;
        worst = std::max(worst, std::abs(pa.surrogate(up) - pa.surrogate(down)) / (2 * h));
      }
    }
  }
  report(5, worst < kStationaryTol, "closed-form alpha/beta are stationary",
         fmt("max |partial| %.2e", worst) + ", tol 1e-6");
}

double permutation_sweep(const SystemConfig& cfg, std::size_t count, std::uint64_t seed0) {
  double worst = 0.0;
  for (std::uint64_t t = 0; t < count; ++t) {
    const GnnModel model = model_for(cfg, {16, 8}, seed0 + t);
    Rng rng(seed0 + 7919 * (t + 1));
    const ChannelRealization real = sample_realization(cfg, rng);
    worst = std::max(worst, permutation_gap(model, real, rng));
  }
  return worst;
}

void criterion6() {
  const double worst = permutation_sweep(scenario(3, 2, 4, 4), 100, 60000);
  report(6, worst <= kPermutationTol, "permutation equivariance on 100 triples",
         fmt("max deviation %.2e", worst) + ", tol 1e-12");
}

void criterion7() {
  const SystemConfig base = scenario(3, 2, 5, 4);
  const GnnModel model = model_for(base, {16, 8}, 77);
  const std::size_t params = parameter_count(model);
  double worst_constraint = 0.0, worst_perm = 0.0;
  bool ran = true;
  for (std::size_t k = 2; k <= 8; ++k) {
    SystemConfig cfg = base;
    cfg.num_users = k;
    for (std::uint64_t t = 0; t < 20; ++t) {
      Rng rng(k * 1000 + t);
      const ChannelRealization real = sample_realization(cfg, rng);
      try {
        const BeamformingSolution sol = forward(model, real);
        ran = ran && sol.num_users == k;
        worst_constraint = std::max(worst_constraint, constraint_gap(sol, cfg.p_max_watts()));
        worst_perm = std::max(worst_perm, permutation_gap(model, real, rng));
      } catch (const std::exception&) {
        ran = false;
      }
    }
  }
  const bool pass = ran && parameter_count(model) == params && worst_constraint <= kConstraintTol &&
                    worst_perm <= kPermutationTol;
  report(7, pass, "K = 5 model runs for K = 2..8",
         fmt("constraint violation %.2e", worst_constraint) + fmt(", permutation deviation %.2e", worst_perm));
}

void criterion8() {
  const auto t0 = Clock::now();
  // L = 9: the closest perfect square to the requested 8.
  const SystemConfig cfg = scenario(3, 2, 2, 9);
  TrainConfig tc;
  tc.samples_per_epoch = 200;
  tc.batch_size = 20;
  tc.max_epochs = 30;
  tc.patience_epochs = 30;
  tc.validation_size = 600;
  tc.seed = 2024;
  const TrainResult res = train(cfg, model_shape_for(cfg, {64, 32}), tc);
  const double minutes = seconds_since(t0) / 60.0;

  const auto& h = res.history;
  const double initial = h.front().train_loss;
  const double final_loss = h.back().train_loss;
  // Least-squares slope of the training loss over epochs.
  double mx = 0, my = 0;
  for (const auto& r : h) {
    mx += static_cast<double>(r.epoch);
    my += r.train_loss;
  }
  mx /= static_cast<double>(h.size());
  my /= static_cast<double>(h.size());
  double sxy = 0, sxx = 0;
  for (const auto& r : h) {
    sxy += (static_cast<double>(r.epoch) - mx) * (r.train_loss - my);
    sxx += (static_cast<double>(r.epoch) - mx) * (static_cast<double>(r.epoch) - mx);
  }
  const double slope = sxy / sxx;
  const bool trend = h.size() == 30 && final_loss < kLossRatio * initial && final_loss < initial && slope < 0;

  // Held-out paired trials: same realizations, MRT uses the trial's random phases.
  double dml = 0.0, mrt_rate = 0.0;
  for (std::size_t t = 0; t < 200; ++t) {
    const Trial trial = make_trial(cfg, 0xD15EA5E, t);
    dml += sum_rate(trial.real, deploy_forward(res.model, trial.real), cfg.noise_watts());
    mrt_rate += sum_rate(trial.real, solve_method("mrt", cfg, trial, nullptr), cfg.noise_watts());
  }
  dml /= 200;
  mrt_rate /= 200;
  const bool pass = trend && dml > mrt_rate && minutes < kTrainMinutes;
  report(8, pass, "desk-scale training learns and beats MRT",
         fmt("train loss %.4f", initial) + fmt(" -> %.4f", final_loss) + fmt(", slope %.4f/epoch", slope) +
             fmt(", DML %.4f", dml) + fmt(" vs MRT %.4f bit/s/Hz", mrt_rate) +
             fmt(", %.2f min", minutes));
}

void criterion9() {
  ExperimentSpec spec;
  spec.methods = {"global_zf_pa", "global_zf", "local_zf", "mrt"};
  spec.sweep_variable = "p_max_dbm";
  spec.sweep_values = {15};
  spec.trials = 500;
  spec.seed = 9009;
  const auto rows = run_experiment(scenario(3, 8, 3, 16), spec);
  std::string detail;
  bool pass = rows.size() == 4;
  for (std::size_t n = 0; n + 1 < rows.size(); ++n) {
    const double gap = rows[n].mean_sum_rate - rows[n + 1].mean_sum_rate;
    const double se = pooled_se(rows[n], rows[n + 1]);
    pass = pass && gap > 0 && gap >= se;
    detail += rows[n].method + fmt(" %.3f", rows[n].mean_sum_rate) + fmt(" (gap %.3f", gap) +
              fmt(", SE %.3f) > ", se);
  }
  detail += rows.back().method + fmt(" %.3f", rows.back().mean_sum_rate);
  report(9, pass, "benchmark ordering", detail);
}

void criterion10() {
  auto trend = [](const char* variable, std::vector<double> values, std::string& detail) {
    ExperimentSpec spec;
    spec.methods = {"global_zf_pa"};
    spec.sweep_variable = variable;
    spec.sweep_values = std::move(values);
    spec.trials = 500;
    spec.seed = 1010;
    const auto rows = run_experiment(scenario(3, 8, 3, 16), spec);
    bool ok = true;
    detail += std::string(variable) + ":";
    for (std::size_t n = 0; n < rows.size(); ++n) {
      detail += fmt(" %.3f", rows[n].mean_sum_rate);
      if (n > 0) ok = ok && rows[n].mean_sum_rate >= rows[n - 1].mean_sum_rate - pooled_se(rows[n], rows[n - 1]);
    }
    detail += "; ";
    return ok;
  };
  std::string detail;
  const bool l_ok = trend("L", {16, 36, 64}, detail);
  const bool p_ok = trend("p_max_dbm", {5, 15, 25}, detail);
  report(10, l_ok && p_ok, "global ZF + PA non-decreasing in L and P_max", detail + "slack one pooled SE");
}

void criterion11() {
  bool pass = true;
  std::size_t cases = 0;
  for (std::size_t bs = 1; bs <= 3; ++bs)
    for (std::size_t m = 1; m <= 12; ++m)
      for (std::size_t k = 1; k <= 8; ++k)
        for (std::size_t side = 1; side <= 12; ++side) {
          const SystemConfig cfg = scenario(bs, m, k, side * side);
          const std::size_t l = side * side;
          const std::size_t global = 2 * bs * m * k;
          pass = pass && exchange_accounting("dml", cfg) == ExchangeCounts{0, 2 * l};
          pass = pass && exchange_accounting("global_zf_pa", cfg) == ExchangeCounts{global, global};
          pass = pass && exchange_accounting("global_zf", cfg) == ExchangeCounts{global, global};
          pass = pass && exchange_accounting("local_zf", cfg) == ExchangeCounts{0, 0};
          pass = pass && exchange_accounting("mrt", cfg) == ExchangeCounts{0, 0};
          ++cases;
        }
  // The published configuration: I = 3, M = 8, K = 3, L = 100.
  const SystemConfig table = scenario(3, 8, 3, 100);
  pass = pass && exchange_accounting("dml", table) == ExchangeCounts{0, 200};
  pass = pass && exchange_accounting("global_zf", table) == ExchangeCounts{144, 144};
  report(11, pass, "exchange accounting", std::to_string(cases) + " (I, M, K, L) combinations x 5 methods");
}

void criterion12() {
  ExperimentSpec spec;
  spec.methods = {"global_zf_pa", "global_zf", "local_zf", "mrt"};
  spec.sweep_variable = "M";
  spec.sweep_values = {2, 4};
  spec.trials = 20;
  spec.seed = 1212;
  const SystemConfig cfg = scenario(3, 4, 3, 16);
  const std::string csv1 = to_csv(run_experiment(cfg, spec), false);
  const std::string csv2 = to_csv(run_experiment(cfg, spec), false);

  const SystemConfig small = scenario(2, 2, 2, 4);
  TrainConfig tc;
  tc.samples_per_epoch = 20;
  tc.batch_size = 10;
  tc.max_epochs = 3;
  tc.validation_size = 10;
  tc.seed = 12;
  const std::string ck1 = checkpoint_to_string(train(small, model_shape_for(small, {8, 8}), tc).model);
  tc.threads = 2;  // thread count must not matter
  const std::string ck2 = checkpoint_to_string(train(small, model_shape_for(small, {8, 8}), tc).model);
  report(12, csv1 == csv2 && ck1 == ck2, "byte-identical CSV and checkpoints for identical seeds",
         std::to_string(csv1.size()) + " CSV bytes, " + std::to_string(ck1.size()) + " checkpoint bytes");
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria = {
      criterion1, criterion2, criterion3, criterion4,  criterion5,  criterion6,
      criterion7, criterion8, criterion9, criterion10, criterion11, criterion12};
  for (std::size_t n = 0; n < criteria.size(); ++n) {
    try {
      criteria[n]();
    } catch (const std::exception& e) {
      report(static_cast<int>(n + 1), false, "raised an exception", e.what());
    }
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
