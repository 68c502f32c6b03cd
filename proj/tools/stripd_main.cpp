#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "stripd/bench.hpp"
#include "stripd/errors.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStepSize = 3;
constexpr int kExitDivergence = 4;

std::string g12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

stripd::StepValidation validate_any(const stripd::RunConfig& cfg) {
  using namespace stripd;
  if (cfg.mode == RunMode::Distributed) {
    DistributedProblem dp = build_distributed(cfg);
    StackedEquivalent se = stack_problem(dp);
    SolverConfig scfg{se.sigma, se.gamma};
    return validate_step_sizes(se.problem, scfg);
  }
  BuiltCentralized built = build_centralized(cfg);
  if (cfg.mode == RunMode::Block) {
    BlockPartition bp = build_partition(cfg);
    validate_block_structure(built.problem, built.solver, bp);
  }
  return validate_step_sizes(built.problem, built.solver);
}

int do_validate(const std::string& path) {
  stripd::RunConfig cfg = stripd::load_config(path);
  stripd::StepValidation val = validate_any(cfg);
  std::cout << "step margin: " << g12(val.margin) << "\n";
  std::cout << "lambda_min(2U - S): " << g12(val.lambda_min_2u_minus_s) << "\n";
  if (val.ok) {
    std::cout << "step-size condition satisfied\n";
    return kExitOk;
  }
  std::cout << "step-size condition violated\n";
  return kExitStepSize;
}

void report_run(const stripd::BenchmarkOutput& out, const std::string& dir) {
  std::cout << "wrote " << dir << "/trace.csv and " << dir << "/meta.json ("
            << out.trials << " trials, " << out.iterations << " iterations)\n";
  for (const std::string& name : out.metric_names) {
    std::cout << "final mean " << name << ": " << g12(out.final_mean(name)) << "\n";
  }
}

int do_run(stripd::RunConfig cfg, const std::optional<std::uint64_t>& seed,
           const std::optional<std::int64_t>& iters,
           const std::optional<std::int64_t>& trials,
           const std::optional<std::string>& out_dir) {
  if (seed) cfg.master_seed = *seed;
  if (iters) cfg.solver.max_iters = *iters;
  if (trials) cfg.trials = *trials;
  if (out_dir) cfg.output_dir = *out_dir;
  stripd::BenchmarkOutput out = stripd::run_benchmark(cfg);
  stripd::write_outputs(out, cfg.output_dir);
  report_run(out, cfg.output_dir);
  return kExitOk;
}

int do_oracle(const std::optional<std::string>& config_path, bool builtin) {
  stripd::DispatchInstance inst;
  if (builtin) {
    inst = stripd::builtin_dispatch_instance();
  } else if (config_path) {
    stripd::RunConfig cfg = stripd::load_config(*config_path);
    if (!cfg.dispatch) throw stripd::ConfigError("config has no dispatch section");
    inst = *cfg.dispatch;
  } else {
    throw stripd::ConfigError("oracle dispatch needs a config or --paper-instance");
  }
  stripd::DispatchReference ref = stripd::dispatch_reference(inst);
  if (inst.generators() <= 6) {
    stripd::DispatchReference cross = stripd::dispatch_reference_enumerated(inst);
    double dev = 0.0;
    for (std::size_t i = 0; i < ref.x_star.size(); ++i) {
      const double d = std::fabs(ref.x_star[i] - cross.x_star[i]);
      dev = d > dev ? d : dev;
    }
    if (dev > 1e-8) {
      throw stripd::Error("dispatch reference cross-check deviates by " + g12(dev));
    }
  }
  std::cout << "x_star = [";
  for (std::size_t i = 0; i < ref.x_star.size(); ++i) {
    if (i) std::cout << ", ";
    std::cout << g12(ref.x_star[i]);
  }
  std::cout << "]\n";
  std::cout << "lambda_star = " << g12(ref.lambda_star) << "\n";
  std::cout << "cost_star = " << g12(ref.cost_star) << "\n";
  double sum = 0.0;
  for (double v : ref.x_star) sum += v;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12f", sum);
  std::cout << "sum(x_star) = " << buf << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic triangularly preconditioned primal-dual solver"};
  app.require_subcommand(1);

  std::string validate_path;
  CLI::App* validate_cmd =
      app.add_subcommand("validate", "check the step-size condition of a configuration");
  validate_cmd->add_option("config", validate_path, "configuration file")->required();

  std::string run_path;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::int64_t> run_iters, run_trials;
  std::optional<std::string> run_out;
  CLI::App* run_cmd = app.add_subcommand("run", "run the configured benchmark");
  run_cmd->add_option("config", run_path, "configuration file")->required();
  run_cmd->add_option("--seed", run_seed, "master seed override");
  run_cmd->add_option("--iters", run_iters, "iteration count override");
  run_cmd->add_option("--trials", run_trials, "trial count override");
  run_cmd->add_option("--out", run_out, "output directory override");

  CLI::App* bench_cmd = app.add_subcommand("bench", "built-in benchmarks");
  bench_cmd->require_subcommand(1);
  std::optional<std::string> bench_config;
  std::optional<std::uint64_t> bench_seed;
  std::optional<std::int64_t> bench_iters, bench_trials;
  std::optional<std::string> bench_out;
  bool bench_builtin = false;
  CLI::App* bench_dispatch =
      bench_cmd->add_subcommand("dispatch", "economic dispatch benchmark");
  auto* bench_config_opt =
      bench_dispatch->add_option("--config", bench_config, "configuration file");
  bench_dispatch->add_option("--trials", bench_trials, "trial count override");
  bench_dispatch->add_option("--seed", bench_seed, "master seed override");
  bench_dispatch->add_option("--iters", bench_iters, "iteration count override");
  bench_dispatch->add_option("--out", bench_out, "output directory override");
  bench_dispatch
      ->add_flag("--paper-instance,--builtin-instance", bench_builtin,
                 "use the built-in five-generator instance")
      ->excludes(bench_config_opt);

  CLI::App* oracle_cmd = app.add_subcommand("oracle", "reference solutions");
  oracle_cmd->require_subcommand(1);
  std::optional<std::string> oracle_config;
  bool oracle_builtin = false;
  CLI::App* oracle_dispatch =
      oracle_cmd->add_subcommand("dispatch", "dispatch reference solution");
  oracle_dispatch->add_option("config", oracle_config, "configuration file");
  oracle_dispatch->add_flag("--paper-instance,--builtin-instance", oracle_builtin,
                            "use the built-in five-generator instance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (validate_cmd->parsed()) return do_validate(validate_path);
    if (run_cmd->parsed()) {
      return do_run(stripd::load_config(run_path), run_seed, run_iters, run_trials,
                    run_out);
    }
    if (bench_dispatch->parsed()) {
      stripd::RunConfig cfg;
      if (bench_config) {
        cfg = stripd::load_config(*bench_config);
        if (!cfg.dispatch) throw stripd::ConfigError("config has no dispatch section");
      } else if (bench_builtin) {
        cfg = stripd::default_dispatch_config();
      } else {
        throw stripd::ConfigError("bench dispatch needs --config or --paper-instance");
      }
      return do_run(std::move(cfg), bench_seed, bench_iters, bench_trials, bench_out);
    }
    if (oracle_dispatch->parsed()) return do_oracle(oracle_config, oracle_builtin);
    throw stripd::ConfigError("no subcommand selected");
  } catch (const stripd::StepSizeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStepSize;
  } catch (const stripd::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const stripd::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const stripd::DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const stripd::InvalidInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const stripd::NotSpdError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
