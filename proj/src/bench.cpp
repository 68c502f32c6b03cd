#include "stripd/bench.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>
#include <utility>

#include "json.hpp"
#include "stripd/block.hpp"
#include "stripd/errors.hpp"

namespace stripd {

using json = nlohmann::ordered_json;

namespace {

int worker_count(std::int64_t trials) {
  long w = 0;
  if (const char* env = std::getenv("STRIPD_WORKERS"); env && *env) {
    char* end = nullptr;
    w = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || w < 1) w = 0;
  }
  if (w < 1) {
    const unsigned hc = std::thread::hardware_concurrency();
    w = hc ? static_cast<long>(hc) : 1;
  }
  if (w > trials) w = trials;
  return static_cast<int>(w);
}

std::string g17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json spd_to_json(const SpdOperator& s) {
  if (s.layout() == SpdOperator::Layout::Scalar) return s.diag_at(0);
  if (s.layout() == SpdOperator::Layout::Diagonal) {
    json a = json::array();
    for (int i = 0; i < s.dim(); ++i) a.push_back(s.diag_at(i));
    return a;
  }
  Matrix m = s.materialize();
  json rows = json::array();
  for (int r = 0; r < m.rows; ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols; ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

struct Failure {
  int kind = 0;  // 0 none, 1 divergence, 2 other
  std::int64_t iteration = 0;
  std::string message;
};

// Runs `body(t)` for t in [0, trials) across the worker pool and rethrows the
// lowest-trial failure deterministically.
template <class Body>
void run_trials(std::int64_t trials, const Body& body) {
  std::vector<Failure> failures(static_cast<std::size_t>(trials));
  std::atomic<std::int64_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::int64_t t = next.fetch_add(1);
      if (t >= trials) return;
      try {
        body(t);
      } catch (const DivergenceError& e) {
        failures[static_cast<std::size_t>(t)] = {1, e.iteration(), e.what()};
      } catch (const std::exception& e) {
        failures[static_cast<std::size_t>(t)] = {2, 0, e.what()};
      }
    }
  };
  const int workers = worker_count(trials);
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  for (std::int64_t t = 0; t < trials; ++t) {
    const Failure& f = failures[static_cast<std::size_t>(t)];
    if (f.kind == 1) {
      throw DivergenceError("trial " + std::to_string(t) + " diverged at iteration " +
                                std::to_string(f.iteration),
                            f.iteration);
    }
    if (f.kind == 2) throw Error("trial " + std::to_string(t) + " failed: " + f.message);
  }
}

void aggregate_rows(BenchmarkOutput& out, const std::vector<std::vector<double>>& values,
                    const std::vector<std::int64_t>& grid) {
  const std::size_t nm = out.metric_names.size();
  const std::int64_t trials = out.trials;
  out.rows.reserve(grid.size() * nm);
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    for (std::size_t mi = 0; mi < nm; ++mi) {
      const std::size_t at = gi * nm + mi;
      double mn = values[0][at], mx = values[0][at], sum = 0.0;
      for (std::int64_t t = 0; t < trials; ++t) {
        const double v = values[static_cast<std::size_t>(t)][at];
        mn = v < mn ? v : mn;
        mx = v > mx ? v : mx;
        sum += v;
      }
      out.rows.push_back(
          {grid[gi], static_cast<int>(mi), mn, sum / static_cast<double>(trials), mx});
    }
  }
}

void render_csv(BenchmarkOutput& out) {
  std::string csv = "iter,metric,min,mean,max\n";
  for (const AggregateRow& r : out.rows) {
    csv += std::to_string(r.iter);
    csv += ',';
    csv += out.metric_names[static_cast<std::size_t>(r.metric)];
    csv += ',';
    csv += g17(r.min);
    csv += ',';
    csv += g17(r.mean);
    csv += ',';
    csv += g17(r.max);
    csv += '\n';
  }
  out.trace_csv = std::move(csv);
}

void render_meta(BenchmarkOutput& out, const RunConfig& cfg, const json& resolved) {
  json meta;
  meta["config"] = json::parse(serialize_config(cfg));
  meta["resolved"] = resolved;
  if (out.reference) {
    json ref;
    ref["x_star"] = out.reference->x_star;
    ref["lambda_star"] = out.reference->lambda_star;
    ref["cost_star"] = out.reference->cost_star;
    meta["reference"] = std::move(ref);
  } else {
    meta["reference"] = nullptr;
  }
  meta["step_margin"] = out.step_margin;
  meta["lambda_min_2u_minus_s"] = out.lambda_min_2u_minus_s;
  meta["metrics"] = out.metric_names;
  out.meta_json = meta.dump(2) + "\n";
}

BenchmarkOutput run_central(const RunConfig& cfg) {
  BuiltCentralized built = build_centralized(cfg);
  const CompositeProblem& problem = built.problem;
  const DispatchInstance& inst = *built.instance;
  const DispatchReference& ref = *built.reference;

  std::optional<BlockPartition> bp;
  if (cfg.mode == RunMode::Block) {
    bp = build_partition(cfg);
    validate_block_structure(problem, built.solver, *bp);
  }

  const StepValidation val = validate_step_sizes(problem, built.solver);
  if (!val.ok) {
    throw StepSizeError("step-size condition violated, margin " + g17(val.margin));
  }

  const std::int64_t iters = built.solver.max_iters;
  const std::int64_t every = built.solver.record_every;
  std::vector<std::int64_t> grid;
  for (std::int64_t k = 0; k <= iters; ++k) {
    if (k % every == 0 || k == iters) grid.push_back(k);
  }

  BenchmarkOutput out;
  out.metric_names = {"dist_to_solution", "cost_gap", "constraint_violation"};
  out.reference = ref;
  out.trials = cfg.trials;
  out.iterations = iters;
  out.step_margin = val.margin;
  out.lambda_min_2u_minus_s = val.lambda_min_2u_minus_s;

  const int q_dim = problem.l.rows();
  const int p_dim = problem.l.cols();
  std::vector<std::vector<double>> values(
      static_cast<std::size_t>(cfg.trials),
      std::vector<double>(grid.size() * out.metric_names.size()));

  run_trials(cfg.trials, [&](std::int64_t t) {
    SolverConfig scfg = built.solver;
    scfg.trial = static_cast<std::uint64_t>(t);
    const std::uint64_t trial_key = derive_trial_key(cfg.master_seed, scfg.trial);
    PrimalDualState z{Vec(static_cast<std::size_t>(q_dim), 0.0),
                      Vec(static_cast<std::size_t>(p_dim), 0.0)};
    std::vector<double>& slot = values[static_cast<std::size_t>(t)];
    std::size_t gi = 0;
    for (std::int64_t k = 0; k <= iters; ++k) {
      if (k % every == 0 || k == iters) {
        slot[gi * 3 + 0] = nrm2(sub(z.x, ref.x_star));
        slot[gi * 3 + 1] = std::fabs(dispatch_cost(inst, z.x) - ref.cost_star);
        slot[gi * 3 + 2] = dispatch_violation(inst, z.x);
        ++gi;
      }
      if (k == iters) break;
      if (bp) {
        z = block_step(problem, scfg, *bp, z, static_cast<std::uint64_t>(k), trial_key)
                .next;
      } else {
        z = stripd_step(problem, scfg, z, static_cast<std::uint64_t>(k), trial_key).next;
      }
      if (!all_finite(z.y) || !all_finite(z.x)) {
        throw DivergenceError("non-finite iterate", k + 1);
      }
    }
  });

  aggregate_rows(out, values, grid);
  render_csv(out);

  json resolved;
  resolved["iterations"] = iters;
  resolved["trials"] = cfg.trials;
  resolved["master_seed"] = cfg.master_seed;
  resolved["sigma"] = spd_to_json(built.solver.sigma);
  resolved["gamma"] = spd_to_json(built.solver.gamma);
  resolved["sigma0"] = problem.smooth.sigma0;
  resolved["sigma1"] = problem.smooth.sigma1;
  resolved["q_std"] = built.q_std;
  resolved["schedule"] = json::parse(serialize_config(cfg))["oracle"]["schedule"];
  resolved["defaults_applied"] = built.defaults_applied;
  render_meta(out, cfg, resolved);
  return out;
}

BenchmarkOutput run_distributed_bench(const RunConfig& cfg) {
  DistributedProblem dp = build_distributed(cfg);
  StackedEquivalent se = stack_problem(dp);

  SolverConfig stacked_cfg{se.sigma, se.gamma};
  const StepValidation val = validate_step_sizes(se.problem, stacked_cfg);
  if (!val.ok) {
    throw StepSizeError("step-size condition violated for the stacked system, margin " +
                        g17(val.margin));
  }

  const std::int64_t iters = cfg.solver.max_iters;
  const std::int64_t every = cfg.solver.record_every;
  std::vector<std::int64_t> grid;
  for (std::int64_t k = 0; k < iters; ++k) {
    if (k % every == 0 || k == iters - 1) grid.push_back(k);
  }

  BenchmarkOutput out;
  out.metric_names = {"edge_violation", "step_movement"};
  out.trials = cfg.trials;
  out.iterations = iters;
  out.step_margin = val.margin;
  out.lambda_min_2u_minus_s = val.lambda_min_2u_minus_s;

  std::vector<std::vector<double>> values(
      static_cast<std::size_t>(cfg.trials),
      std::vector<double>(grid.size() * out.metric_names.size()));

  run_trials(cfg.trials, [&](std::int64_t t) {
    DistributedTrace trace =
        distributed_solve(dp, zero_states(dp), iters, cfg.master_seed, every,
                          static_cast<std::uint64_t>(t));
    std::vector<double>& slot = values[static_cast<std::size_t>(t)];
    if (trace.records.size() != grid.size()) {
      throw Error("distributed trace grid mismatch");
    }
    for (std::size_t gi = 0; gi < trace.records.size(); ++gi) {
      slot[gi * 2 + 0] = trace.records[gi].edge_violation;
      slot[gi * 2 + 1] = trace.records[gi].step_movement;
    }
  });

  aggregate_rows(out, values, grid);
  render_csv(out);

  json resolved;
  resolved["iterations"] = iters;
  resolved["trials"] = cfg.trials;
  resolved["master_seed"] = cfg.master_seed;
  resolved["sigma"] = spd_to_json(se.sigma);
  resolved["gamma"] = spd_to_json(se.gamma);
  resolved["schedule"] = json::parse(serialize_config(cfg))["oracle"]["schedule"];
  resolved["defaults_applied"] = json::array();
  render_meta(out, cfg, resolved);
  return out;
}

}  // namespace

double BenchmarkOutput::final_mean(const std::string& metric) const {
  for (std::size_t mi = 0; mi < metric_names.size(); ++mi) {
    if (metric_names[mi] != metric) continue;
    for (std::size_t r = rows.size(); r-- > 0;) {
      if (rows[r].metric == static_cast<int>(mi)) return rows[r].mean;
    }
  }
  throw InvalidInputError("no such metric: " + metric);
}

double BenchmarkOutput::first_mean(const std::string& metric) const {
  for (std::size_t mi = 0; mi < metric_names.size(); ++mi) {
    if (metric_names[mi] != metric) continue;
    for (const AggregateRow& r : rows) {
      if (r.metric == static_cast<int>(mi)) return r.mean;
    }
  }
  throw InvalidInputError("no such metric: " + metric);
}

BenchmarkOutput run_benchmark(const RunConfig& cfg) {
  if (cfg.mode == RunMode::Distributed) return run_distributed_bench(cfg);
  return run_central(cfg);
}

void write_outputs(const BenchmarkOutput& out, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir + ": " + ec.message());
  {
    std::ofstream f(fs::path(dir) / "trace.csv", std::ios::binary);
    if (!f) throw Error("cannot write trace.csv under " + dir);
    f << out.trace_csv;
  }
  {
    std::ofstream f(fs::path(dir) / "meta.json", std::ios::binary);
    if (!f) throw Error("cannot write meta.json under " + dir);
    f << out.meta_json;
  }
}

}  // namespace stripd
