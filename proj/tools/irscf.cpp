// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: train, eval, sweep, baseline, gradcheck.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "irscf/beamform.hpp"
#include "irscf/errors.hpp"
#include "irscf/fp_baseline.hpp"
#include "irscf/harness.hpp"
#include "irscf/persist.hpp"
#include "irscf/trainer.hpp"

namespace fs = std::filesystem;
using namespace irscf;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string checkpoint;
  std::optional<std::size_t> trials;
  bool trace = false;
};

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("SIM_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long long value = std::strtoull(raw, &end, 10);
  if (*end != '\0') throw ConfigError(std::string("SIM_SEED is not an integer: ") + raw);
  return value;
}

RunConfig resolve(const Options& opt) {
  RunConfig cfg = opt.config.empty() ? RunConfig{} : load_config(opt.config);
  std::optional<std::uint64_t> seed = opt.seed ? opt.seed : env_seed();
  if (seed) {
    cfg.train.seed = *seed;
    cfg.experiment.seed = *seed;
  }
  if (opt.trials) cfg.experiment.trials = *opt.trials;
  if (!opt.checkpoint.empty()) cfg.experiment.checkpoint = opt.checkpoint;
  fs::create_directories(opt.out);
  return cfg;
}

std::string out_path(const Options& opt, const char* name) {
  return (fs::path(opt.out) / name).string();
}

int cmd_train(const Options& opt) {
  const RunConfig cfg = resolve(opt);
  const TrainResult res = train(cfg.system, cfg.model_shape(), cfg.train, [&](const EpochRecord& r) {
    if (opt.trace) {
      std::printf("epoch %zu train_loss %.6f val_loss %.6f val_sum_rate %.6f lr %.6g\n", r.epoch,
                  r.train_loss, r.val_loss, r.val_sum_rate, r.lr);
      std::fflush(stdout);
    }
  });
  const std::string ckpt = opt.checkpoint.empty() ? out_path(opt, "checkpoint.json") : opt.checkpoint;
  save_checkpoint(res.model, ckpt);
  write_text(out_path(opt, "history.csv"), history_to_csv(res.history));
  std::printf("trained %zu epochs, best epoch %zu (val sum rate %.6f), checkpoint %s\n",
              res.history.size(), res.best_epoch, res.history[res.best_epoch - 1].val_sum_rate,
              ckpt.c_str());
  return 0;
}

int cmd_eval(const Options& opt) {
  RunConfig cfg = resolve(opt);
  if (cfg.experiment.checkpoint.empty()) throw ConfigError("eval needs --checkpoint");
  const GnnModel model = load_checkpoint(cfg.experiment.checkpoint);
  const DeployStats stats =
      deploy_eval(model, cfg.system, cfg.experiment.trials, cfg.experiment.seed, cfg.experiment.threads);
  std::printf("dml mean_sum_rate %.6f std_sum_rate %.6f trials %zu\n", stats.mean, stats.std,
              cfg.experiment.trials);
  return 0;
}

int run_rows(const Options& opt, const RunConfig& cfg, const ExperimentSpec& spec, const char* stem) {
  const std::vector<ResultRow> rows = run_experiment(cfg.system, spec);
  const std::string csv = to_csv(rows);
  write_text(out_path(opt, (std::string(stem) + ".csv").c_str()), csv);
  write_text(out_path(opt, (std::string(stem) + ".json").c_str()), results_to_json(cfg.system, spec, rows));
  std::cout << csv;
  return 0;
}

int cmd_sweep(const Options& opt) {
  const RunConfig cfg = resolve(opt);
  return run_rows(opt, cfg, cfg.experiment, "sweep");
}

int cmd_baseline(const Options& opt) {
  const RunConfig cfg = resolve(opt);
  if (opt.trace) {
    // AO surrogate trace on the first trial.
    const Trial trial = make_trial(cfg.system, cfg.experiment.seed, 0);
    const AoResult ao = ao_solve(trial.real, trial.v, cfg.system, cfg.experiment.ao);
    for (std::size_t n = 0; n < ao.trace.size(); ++n) {
      std::printf("ao iteration %zu surrogate_nats %.12g\n", n, ao.trace[n]);
    }
    std::printf("ao converged %d after %zu iterations, sum rate %.9g bit/s/Hz\n", ao.converged,
                ao.iterations, ao.sum_rate_bits);
  }
  ExperimentSpec spec = cfg.experiment;
  spec.methods = {"global_zf_pa", "global_zf", "local_zf", "mrt"};
  spec.sweep_variable = "p_max_dbm";
  spec.sweep_values = {cfg.system.p_max_dbm};
  return run_rows(opt, cfg, spec, "baseline");
}

int cmd_gradcheck(const Options& opt) {
  RunConfig cfg = resolve(opt);
  if (opt.config.empty()) {
    cfg.system.num_bs = 2;
    cfg.system.bs_positions = SystemConfig::default_bs_positions(2);
    cfg.system.num_antennas = 2;
    cfg.system.num_users = 2;
    cfg.system.num_elements = 4;
    cfg.widths = {8, 8};
  }
  Rng rng(cfg.train.seed);
  const GnnModel model = init_model(cfg.model_shape(), rng);
  const ChannelRealization real = sample_realization(cfg.system, rng);
  const GradcheckReport report = gradcheck(model, real, cfg.system.noise_watts());
  std::printf("gradcheck parameters %zu max_relative_error %.3e worst %s\n", report.checked,
              report.max_relative_error, report.worst_parameter.c_str());
  return report.max_relative_error < 1e-4 ? 0 : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IRS-enhanced cell-free MIMO beamforming simulator"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;
  std::size_t trials = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON config file");
    sub->add_option("--seed", seed, "RNG seed (overrides SIM_SEED and the config)");
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--checkpoint", opt.checkpoint, "model checkpoint path");
    sub->add_option("--trials", trials, "Monte-Carlo trials")->check(CLI::PositiveNumber);
    sub->add_flag("--trace", opt.trace, "print per-iteration progress");
  };
  CLI::App* train_cmd = app.add_subcommand("train", "train the distributed GNN");
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint in deployment mode");
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a parameter sweep");
  CLI::App* base_cmd = app.add_subcommand("baseline", "evaluate the non-learned benchmarks");
  CLI::App* grad_cmd = app.add_subcommand("gradcheck", "check GNN gradients by finite differences");
  for (CLI::App* sub : {train_cmd, eval_cmd, sweep_cmd, base_cmd, grad_cmd}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  for (CLI::App* sub : app.get_subcommands()) {
    if (sub->count("--seed") > 0) opt.seed = seed;
    if (sub->count("--trials") > 0) opt.trials = trials;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(opt);
    if (eval_cmd->parsed()) return cmd_eval(opt);
    if (sweep_cmd->parsed()) return cmd_sweep(opt);
    if (base_cmd->parsed()) return cmd_baseline(opt);
    if (grad_cmd->parsed()) return cmd_gradcheck(opt);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const LoadError& e) {
    std::fprintf(stderr, "load error: %s\n", e.what());
    return kExitConfig;
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kExitNumeric;
  } catch (const SingularError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kExitNumeric;
  } catch (const DegenerateError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kExitNumeric;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  }
  return 0;
}
