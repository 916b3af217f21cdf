// SPDX-License-Identifier: Apache-2.0

#include "irscf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "irscf/errors.hpp"
#include "irscf/parallel.hpp"
#include "irscf/rate.hpp"

namespace irscf {

namespace {

// Stream tags for the run's RNG forks.
constexpr std::uint64_t kInitStream = 0x494e4954ULL;
constexpr std::uint64_t kValidationStream = 0x56414c49ULL;
constexpr std::uint64_t kEpochStream = 0x45504f43ULL << 20;

std::vector<ChannelRealization> draw(const SystemConfig& cfg, Rng rng, std::size_t count) {
  std::vector<ChannelRealization> out;
  out.reserve(count);
  for (std::size_t t = 0; t < count; ++t) out.push_back(sample_realization(cfg, rng));
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("train: ") + what);
  };
  require(samples_per_epoch > 0, "samples_per_epoch must be positive");
  require(batch_size > 0, "batch_size must be positive");
  require(samples_per_epoch % batch_size == 0, "batch_size must divide samples_per_epoch");
  require(max_epochs > 0, "max_epochs must be positive");
  require(patience_epochs > 0, "patience_epochs must be positive");
  require(std::isfinite(lr0) && lr0 >= 0.0, "lr0 must be finite and non-negative");
  require(std::isfinite(decay_factor) && decay_factor > 0.0 && decay_factor <= 1.0,
          "decay_factor must be in (0, 1]");
  require(decay_every_steps > 0, "decay_every_steps must be positive");
  require(validation_size > 0, "validation_size must be positive");
}

OptimizerState OptimizerState::for_parameters(std::span<RealTensor* const> params, double lr0,
                                              double decay_factor, std::size_t decay_every_steps) {
  OptimizerState opt;
  for (const RealTensor* p : params) {
    opt.m.emplace_back(p->shape(), 0.0);
    opt.v.emplace_back(p->shape(), 0.0);
  }
  opt.lr0 = lr0;
  opt.lr = lr0;
  opt.decay_factor = decay_factor;
  opt.decay_every_steps = decay_every_steps;
  return opt;
}

void adam_step(OptimizerState& opt, std::span<const RealTensor> grads,
               std::span<RealTensor* const> params) {
  if (grads.size() != params.size() || opt.m.size() != params.size()) {
    throw ShapeError("adam_step: parameter count mismatch");
  }
  for (std::size_t n = 0; n < params.size(); ++n) {
    if (!grads[n].same_shape(*params[n]) || !opt.m[n].same_shape(*params[n])) {
      throw ShapeError("adam_step: shape mismatch at parameter " + std::to_string(n));
    }
  }
  for (std::size_t n = 0; n < grads.size(); ++n) {
    if (!grads[n].all_finite()) {
      ++opt.skipped;
      throw NumericError("adam_step: non-finite gradient at parameter " + std::to_string(n));
    }
  }

  const AdamConstants& c = opt.adam;
  const std::size_t t = opt.step + 1;
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  for (std::size_t n = 0; n < params.size(); ++n) {
    auto p = params[n]->data();
    auto g = grads[n].data();
    auto m = opt.m[n].data();
    auto v = opt.v[n].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p[j] -= opt.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
  opt.step = t;
  opt.lr = opt.lr0 * std::pow(opt.decay_factor, static_cast<double>(t / opt.decay_every_steps));
}

double loss(const GnnModel& model, std::span<const ChannelRealization> batch, double noise_watts,
            std::size_t threads) {
  if (batch.empty()) throw ShapeError("loss: empty batch");
  std::vector<double> rates(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t t) {
    rates[t] = sum_rate(batch[t], forward(model, batch[t]), noise_watts);
  });
  double total = 0.0;
  for (double r : rates) total += r;
  return -total / static_cast<double>(batch.size());
}

LossAndGradients loss_and_gradients(const GnnModel& model,
                                    std::span<const ChannelRealization> batch, double noise_watts,
                                    std::size_t threads) {
  if (batch.empty()) throw ShapeError("loss_and_gradients: empty batch");
  const double weight = -1.0 / static_cast<double>(batch.size());
  std::vector<double> rates(batch.size());
  std::vector<std::vector<RealTensor>> per_sample(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t t) {
    ad::Tape tape;
    ParamBinder bind(tape, true);
    const TapeBeamformers bf = forward_on_tape(model, batch[t], tape, bind);
    const ad::Var rate = sum_rate_on_tape(tape, batch[t], bf, noise_watts);
    rates[t] = rate.value()[0];
    tape.backward(ad::scale(rate, weight));
    per_sample[t] = bind.gradients(model);
  });

  LossAndGradients out;
  out.grads = std::move(per_sample.front());
  double total = rates.front();
  for (std::size_t t = 1; t < batch.size(); ++t) {
    total += rates[t];
    for (std::size_t n = 0; n < out.grads.size(); ++n) {
      auto acc = out.grads[n].data();
      auto add = per_sample[t][n].data();
      for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += add[j];
    }
  }
  out.loss = weight * total;
  return out;
}

std::vector<ChannelRealization> validation_set(const SystemConfig& cfg,
                                               const TrainConfig& train_cfg) {
  return draw(cfg, Rng(train_cfg.seed).fork(kValidationStream), train_cfg.validation_size);
}

TrainResult train(const SystemConfig& cfg, const ModelShape& shape, const TrainConfig& train_cfg,
                  const EpochCallback& on_epoch) {
  Rng init_rng = Rng(train_cfg.seed).fork(kInitStream);
  return train(cfg, init_model(shape, init_rng), train_cfg, on_epoch);
}

TrainResult train(const SystemConfig& cfg, GnnModel initial, const TrainConfig& train_cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  train_cfg.validate();
  if (initial.shape.num_bs != cfg.num_bs || initial.shape.num_antennas != cfg.num_antennas ||
      initial.shape.num_elements != cfg.num_elements) {
    throw ConfigError("train: model dimensions do not match the system config");
  }

  const double noise = cfg.noise_watts();
  const std::size_t threads = train_cfg.threads;
  const std::vector<ChannelRealization> validation = validation_set(cfg, train_cfg);
  const Rng base(train_cfg.seed);

  TrainResult result;
  GnnModel model = std::move(initial);
  std::vector<RealTensor*> params = mutable_parameters(model);
  OptimizerState opt = OptimizerState::for_parameters(params, train_cfg.lr0, train_cfg.decay_factor,
                                                      train_cfg.decay_every_steps);

  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  result.model = model;

  for (std::size_t epoch = 1; epoch <= train_cfg.max_epochs; ++epoch) {
    const std::vector<ChannelRealization> samples =
        draw(cfg, base.fork(kEpochStream + epoch), train_cfg.samples_per_epoch);
    const std::span<const ChannelRealization> all(samples);

    double train_total = 0.0;
    const std::size_t batches = train_cfg.samples_per_epoch / train_cfg.batch_size;
    for (std::size_t b = 0; b < batches; ++b) {
      const auto batch = all.subspan(b * train_cfg.batch_size, train_cfg.batch_size);
      LossAndGradients lg = loss_and_gradients(model, batch, noise, threads);
      train_total += lg.loss;
      try {
        adam_step(opt, lg.grads, params);
      } catch (const NumericError&) {
        // Counted in opt.skipped; the batch contributes its loss only.
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_total / static_cast<double>(batches);
    rec.val_loss = loss(model, validation, noise, threads);
    rec.val_sum_rate = -rec.val_loss;
    rec.lr = opt.lr;
    rec.skipped_steps = opt.skipped;
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      since_best = 0;
      result.model = model;
      result.best_epoch = epoch;
    } else if (++since_best >= train_cfg.patience_epochs) {
      result.stopped_early = epoch < train_cfg.max_epochs;
      break;
    }
  }
  return result;
}

BeamformingSolution deploy_forward(const GnnModel& model, const ChannelRealization& real) {
  check_compatible(model, real);
  const std::size_t m = model.shape.num_antennas;
  const std::size_t l = model.shape.num_elements;
  BeamformingSolution sol(real.num_bs, real.num_users, m, ComplexMatrix(l, 1));
  bool have_v = false;
  for (std::size_t i = 0; i < model.bs.size(); ++i) {
    // Each network runs on its own tape and sees only BS i's channel blocks.
    const LocalCsi csi = local_csi(real, i);
    if (csi.bs_index != i) throw ShapeError("deploy_forward: CSI routed to the wrong BS");
    ad::Tape tape;
    ParamBinder bind(tape, false);
    const BsOutput out = run_bs_network(model.bs[i], model.shape, csi, tape, bind);
    const RealTensor& re = out.w_re.value();
    const RealTensor& im = out.w_im.value();
    for (std::size_t k = 0; k < real.num_users; ++k) {
      for (std::size_t a = 0; a < m; ++a) sol.at(i, k).set(a, 0, {re(a, k), im(a, k)});
    }
    if (out.v) {
      for (std::size_t e = 0; e < l; ++e) {
        sol.v.set(e, 0, {out.v->first.value()[e], out.v->second.value()[e]});
      }
      have_v = true;
    }
  }
  if (!have_v) throw ConfigError("deploy_forward: no BS network owns the IRS head");
  return sol;
}

DeployStats deploy_eval(const GnnModel& model, std::span<const ChannelRealization> trials,
                        double noise_watts, std::size_t threads) {
  if (trials.empty()) throw ConfigError("deploy_eval: need at least one trial");
  DeployStats stats;
  stats.sum_rates.resize(trials.size());
  parallel_for(trials.size(), threads, [&](std::size_t t) {
    stats.sum_rates[t] = sum_rate(trials[t], deploy_forward(model, trials[t]), noise_watts);
  });
  std::tie(stats.mean, stats.std) = mean_and_std(stats.sum_rates);
  return stats;
}

DeployStats deploy_eval(const GnnModel& model, const SystemConfig& cfg, std::size_t trials,
                        std::uint64_t seed, std::size_t threads) {
  std::vector<ChannelRealization> reals;
  reals.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = Rng(seed).fork(t);
    reals.push_back(sample_realization(cfg, rng));
  }
  GnnModel deployed = model;
  deployed.shape.p_max_dbm = cfg.p_max_dbm;
  return deploy_eval(deployed, reals, cfg.noise_watts(), threads);
}

GradcheckReport gradcheck(const GnnModel& model, const ChannelRealization& real,
                          double noise_watts, double step) {
  const ChannelRealization batch[] = {real};
  const LossAndGradients analytic = loss_and_gradients(model, batch, noise_watts);
  GnnModel probe = model;
  const auto names = named_parameters(probe);
  std::vector<RealTensor*> params = mutable_parameters(probe);
  GradcheckReport report;
  for (std::size_t n = 0; n < params.size(); ++n) {
    RealTensor& p = *params[n];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double saved = p[j];
      p[j] = saved + step;
      const double up = loss(probe, batch, noise_watts);
      p[j] = saved - step;
      const double down = loss(probe, batch, noise_watts);
      p[j] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic.grads[n][j];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      ++report.checked;
      if (rel > report.max_relative_error || !std::isfinite(rel)) {
        report.max_relative_error = std::isfinite(rel) ? rel : std::numeric_limits<double>::infinity();
        report.worst_parameter = names[n].first + "[" + std::to_string(j) + "]";
      }
    }
  }
  return report;
}

std::pair<double, double> mean_and_std(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : values) mean += x;
  mean /= static_cast<double>(values.size());
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : values) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

}  // namespace irscf
