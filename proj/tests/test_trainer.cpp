// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>

#include "irscf/errors.hpp"
#include "irscf/trainer.hpp"
#include "test_util.hpp"

using namespace irscf;
using namespace irscf::testing;

namespace {

std::vector<ChannelRealization> draw_batch(const SystemConfig& cfg, std::uint64_t seed, std::size_t n) {
  std::vector<ChannelRealization> out;
  for (std::size_t t = 0; t < n; ++t) {
    Rng rng = Rng(seed).fork(t);
    out.push_back(sample_realization(cfg, rng));
  }
  return out;
}

GnnModel tiny_model(const SystemConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  return init_model(model_shape_for(cfg, {8, 8}), rng);
}

}  // namespace

TEST_CASE("loss") {
  const SystemConfig cfg = small_config(2, 2, 2, 4);
  const GnnModel model = tiny_model(cfg, 1);
  const double noise = cfg.noise_watts();

  SUBCASE("vanishing channels give zero loss") {
    // Exactly zero CSI would leave the zero-bias heads with nothing to
    // normalize, so shrink the channels instead.
    ChannelRealization r = draw_batch(cfg, 1, 1)[0];
    for (auto* group : {&r.direct, &r.bs_irs, &r.irs_user}) {
      for (auto& m : *group) m *= 1e-9;
    }
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t k = 0; k < 2; ++k) r.cascaded[i * 2 + k] = cascade(r.g(i), r.f(k));
    }
    const std::vector<ChannelRealization> batch{r};
    CHECK(std::abs(loss(model, batch, noise)) < 1e-10);
  }
  SUBCASE("duplicating the batch keeps the mean") {
    const auto one = draw_batch(cfg, 2, 1);
    const std::vector<ChannelRealization> two{one[0], one[0]};
    CHECK(std::abs(loss(model, two, noise) - loss(model, one, noise)) < 1e-15);
  }
  SUBCASE("equals minus the mean of independent sum rates") {
    const auto batch = draw_batch(cfg, 3, 16);
    double acc = 0.0;
    for (const auto& r : batch) acc += sum_rate(r, forward(model, r), noise);
    CHECK(std::abs(loss(model, batch, noise) + acc / 16.0) < 1e-10);
    const LossAndGradients lg = loss_and_gradients(model, batch, noise);
    CHECK(std::abs(lg.loss - loss(model, batch, noise)) < 1e-12);
  }
  SUBCASE("gradients do not depend on the thread count") {
    const auto batch = draw_batch(cfg, 4, 7);
    const LossAndGradients a = loss_and_gradients(model, batch, noise, 1);
    const LossAndGradients b = loss_and_gradients(model, batch, noise, 3);
    CHECK(a.loss == b.loss);
    CHECK(a.grads == b.grads);
  }
  CHECK_THROWS_AS(loss(model, std::vector<ChannelRealization>{}, noise), ShapeError);
}

TEST_CASE("adam step") {
  RealTensor p = RealTensor::matrix(1, 3, {0.5, -1.0, 2.0});
  std::vector<RealTensor*> params{&p};
  OptimizerState opt = OptimizerState::for_parameters(params, 0.01, 0.995, 100);

  SUBCASE("zero gradient leaves parameters unchanged") {
    const std::vector<RealTensor> g{RealTensor::matrix(1, 3)};
    const RealTensor before = p;
    adam_step(opt, g, params);
    CHECK(p == before);
  }
  SUBCASE("first step from zero moments") {
    const std::vector<RealTensor> g{RealTensor::matrix(1, 3, {0.3, -2.0, 1e-3})};
    const RealTensor before = p;
    adam_step(opt, g, params);
    for (std::size_t j = 0; j < 3; ++j) {
      // Bias-corrected moments equal g and g^2 after one step.
      const double expected = before[j] - 0.01 * g[0][j] / (std::abs(g[0][j]) + 1e-8);
      CHECK(std::abs(p[j] - expected) < 1e-12);
    }
    CHECK(opt.step == 1);
  }
  SUBCASE("learning rate decays every 100 steps") {
    const std::vector<RealTensor> g{RealTensor::matrix(1, 3, {1.0, 1.0, 1.0})};
    for (int n = 0; n < 99; ++n) adam_step(opt, g, params);
    CHECK(opt.lr == 0.01);
    adam_step(opt, g, params);
    CHECK(opt.lr == doctest::Approx(0.01 * 0.995).epsilon(1e-15));
    for (int n = 0; n < 100; ++n) adam_step(opt, g, params);
    CHECK(opt.lr == doctest::Approx(0.01 * 0.995 * 0.995).epsilon(1e-15));
  }
  SUBCASE("non-finite gradients are skipped and counted") {
    const std::vector<RealTensor> g{
        RealTensor::matrix(1, 3, {1.0, std::numeric_limits<double>::quiet_NaN(), 0.0})};
    const RealTensor before = p;
    CHECK_THROWS_AS(adam_step(opt, g, params), NumericError);
    CHECK(p == before);
    CHECK(opt.skipped == 1);
    CHECK(opt.step == 0);
  }
  SUBCASE("shape mismatch") {
    const std::vector<RealTensor> g{RealTensor::matrix(1, 2)};
    CHECK_THROWS_AS(adam_step(opt, g, params), ShapeError);
  }
}

TEST_CASE("train config validation") {
  TrainConfig t;
  CHECK_NOTHROW(t.validate());
  t.batch_size = 7;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t = TrainConfig{};
  t.lr0 = 0.0;
  CHECK_NOTHROW(t.validate());
  t.patience_epochs = 0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
}

TEST_CASE("training loop") {
  const SystemConfig cfg = small_config(2, 2, 2, 4);
  const ModelShape shape = model_shape_for(cfg, {8, 8});
  TrainConfig tc;
  tc.samples_per_epoch = 20;
  tc.batch_size = 10;
  tc.max_epochs = 4;
  tc.patience_epochs = 10;
  tc.validation_size = 20;
  tc.seed = 3;

  SUBCASE("frozen learning rate stops after two epochs with patience one") {
    TrainConfig frozen = tc;
    frozen.lr0 = 0.0;
    frozen.patience_epochs = 1;
    const TrainResult res = train(cfg, shape, frozen);
    CHECK(res.history.size() == 2);
    CHECK(res.stopped_early);
    CHECK(res.best_epoch == 1);
    CHECK(res.history[0].val_loss == res.history[1].val_loss);
  }
  SUBCASE("same seed, same history and model") {
    const TrainResult a = train(cfg, shape, tc);
    const TrainResult b = train(cfg, shape, tc);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t n = 0; n < a.history.size(); ++n) {
      CHECK(a.history[n].train_loss == b.history[n].train_loss);
      CHECK(a.history[n].val_loss == b.history[n].val_loss);
      CHECK(a.history[n].lr == b.history[n].lr);
    }
    const auto pa = named_parameters(a.model);
    const auto pb = named_parameters(b.model);
    for (std::size_t n = 0; n < pa.size(); ++n) CHECK(*pa[n].second == *pb[n].second);
    CHECK(a.history.size() <= tc.max_epochs);
  }
  SUBCASE("returns the best validation model") {
    const TrainResult res = train(cfg, shape, tc);
    double best = 1e300;
    std::size_t best_epoch = 0;
    for (const EpochRecord& r : res.history) {
      CHECK(r.val_sum_rate == -r.val_loss);
      if (r.val_loss < best) {
        best = r.val_loss;
        best_epoch = r.epoch;
      }
    }
    CHECK(res.best_epoch == best_epoch);
    const auto val = validation_set(cfg, tc);
    CHECK(loss(res.model, val, cfg.noise_watts()) == best);
  }
  SUBCASE("validation set is fixed by the seed") {
    const auto a = validation_set(cfg, tc);
    const auto b = validation_set(cfg, tc);
    CHECK(a.size() == 20);
    CHECK(a[5].direct == b[5].direct);
  }
}

TEST_CASE("distributed deployment") {
  const SystemConfig cfg = small_config(3, 2, 2, 4);
  const GnnModel model = tiny_model(cfg, 5);
  const auto trials = draw_batch(cfg, 9, 10);
  for (const auto& r : trials) {
    const BeamformingSolution central = forward(model, r);
    const BeamformingSolution local = deploy_forward(model, r);
    for (std::size_t n = 0; n < central.w.size(); ++n) CHECK((central.w[n] - local.w[n]).max_abs() <= 1e-12);
    CHECK((central.v - local.v).max_abs() <= 1e-12);
  }
  const DeployStats one = deploy_eval(model, std::span(trials).first(1), cfg.noise_watts());
  CHECK(one.std == 0.0);
  const DeployStats all = deploy_eval(model, trials, cfg.noise_watts(), 2);
  double acc = 0.0;
  for (const auto& r : trials) acc += sum_rate(r, forward(model, r), cfg.noise_watts());
  CHECK(std::abs(all.mean - acc / 10) < 1e-12);
}

TEST_CASE("mean and sample standard deviation") {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  const auto [m, s] = mean_and_std(x);
  CHECK(m == 2.5);
  CHECK(s == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
  const std::vector<double> one{7.0};
  CHECK(mean_and_std(one) == std::pair{7.0, 0.0});
}
