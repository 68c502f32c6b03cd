#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "stripd/bench.hpp"
#include "stripd/errors.hpp"

using namespace stripd;

namespace {

DispatchInstance random_feasible_instance(DrawStream& rng, int m) {
  DispatchInstance inst;
  const auto mm = static_cast<std::size_t>(m);
  inst.q_mean.resize(mm);
  inst.p.resize(mm);
  inst.lo.resize(mm);
  inst.hi.resize(mm);
  inst.demand.resize(mm);
  double sum_lo = 0.0, sum_hi = 0.0;
  for (std::size_t i = 0; i < mm; ++i) {
    inst.q_mean[i] = 0.01 + 0.19 * rng.uniform();
    inst.p[i] = 0.5 + 4.5 * rng.uniform();
    inst.lo[i] = 10.0 * rng.uniform();
    inst.hi[i] = inst.lo[i] + 1.0 + 29.0 * rng.uniform();
    sum_lo += inst.lo[i];
    sum_hi += inst.hi[i];
  }
  const double target = sum_lo + (0.15 + 0.7 * rng.uniform()) * (sum_hi - sum_lo);
  for (std::size_t i = 0; i < mm; ++i) inst.demand[i] = target / m;
  return inst;
}

}  // namespace

TEST_CASE("the built-in five-generator instance solves to the frozen optimum") {
  DispatchReference ref = dispatch_reference(builtin_dispatch_instance());
  const Vec want = {32.813590023015408, 25.506121309787801, 23.137880592032843,
                    20.542408075164008, 18.0};
  REQUIRE(ref.x_star.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(std::fabs(ref.x_star[i] - want[i]) < 1e-9);
  }
  CHECK(std::fabs(ref.lambda_star - 7.3889549243268968) < 1e-9);
  CHECK(std::fabs(ref.cost_star - 591.93658706790075) < 1e-8);
  double sum = 0.0;
  for (double v : ref.x_star) sum += v;
  CHECK(std::fabs(sum - 120.0) < 1e-10);
  CHECK(ref.x_star[4] == 18.0);  // pinned at its upper bound
}

TEST_CASE("bisection agrees with active-set enumeration everywhere") {
  DrawStream rng(88, StreamPurpose::Generic, 0, 0, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 1 + static_cast<int>(rng.uniform() * 6.0) % 6;
    DispatchInstance inst = random_feasible_instance(rng, m);
    DispatchReference bis = dispatch_reference(inst);
    DispatchReference enu = dispatch_reference_enumerated(inst);
    CHECK(max_abs_diff(bis.x_star, enu.x_star) < 1e-8);
    CHECK(std::fabs(bis.cost_star - enu.cost_star) <
          1e-8 * std::max(1.0, std::fabs(enu.cost_star)));
  }
}

TEST_CASE("degenerate instances still resolve") {
  // single generator pinned on both sides
  DispatchInstance tight;
  tight.q_mean = {0.1};
  tight.p = {1.0};
  tight.lo = {5.0};
  tight.hi = {5.0};
  tight.demand = {5.0};
  DispatchReference r1 = dispatch_reference(tight);
  CHECK(r1.x_star == Vec{5.0});
  CHECK(r1.cost_star == doctest::Approx(7.5).epsilon(1e-12));

  // a free generator with zero curvature acts as a pure step
  DispatchInstance linear;
  linear.q_mean = {0.0, 0.1};
  linear.p = {1.0, 2.0};
  linear.lo = {0.0, 0.0};
  linear.hi = {10.0, 10.0};
  linear.demand = {6.0, 6.0};
  DispatchReference r2 = dispatch_reference(linear);
  DispatchReference r2e = dispatch_reference_enumerated(linear);
  CHECK(std::fabs(r2.x_star[0] - 10.0) < 1e-6);
  CHECK(std::fabs(r2.x_star[1] - 2.0) < 1e-6);
  CHECK(max_abs_diff(r2.x_star, r2e.x_star) < 1e-6);

  // demand beyond aggregate capacity
  DispatchInstance over = tight;
  over.demand = {6.0};
  CHECK_THROWS_AS(dispatch_reference(over), ConfigError);
  CHECK_THROWS_AS(dispatch_reference_enumerated(over), ConfigError);
}

TEST_CASE("the composite build matches the instance geometry") {
  DispatchInstance inst = builtin_dispatch_instance();
  Vec q_std = scaled(inst.q_mean, 0.1);
  CompositeProblem p = build_dispatch(inst, q_std, BatchSchedule::polynomial(1.0, 1.2));

  CHECK(p.smooth.model.beta_f() == doctest::Approx(0.21).epsilon(1e-15));
  CHECK(p.l.rows() == 1);
  CHECK(p.l.cols() == 5);
  for (int c = 0; c < 5; ++c) CHECK(p.l.entries()(0, c) == 1.0);
  CHECK(p.l.op_norm() == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
  CHECK(p.h.dim() == 1);
  CHECK(p.smooth.sigma0 > 0.0);
  // anchored at the optimum, so the deviation bound is tight there
  CHECK(max_abs_diff(p.smooth.reference_point,
                     dispatch_reference(inst).x_star) < 1e-12);

  CompositeProblem lit =
      build_dispatch(inst, q_std, BatchSchedule::polynomial(1.0, 1.2), true);
  CHECK(lit.l.rows() == 5);
  for (int i = 0; i < 5; ++i) {
    for (int c = 0; c < 5; ++c) {
      CHECK(lit.l.entries()(i, c) == (i == c ? 1.0 : 0.0));
    }
  }
  CHECK(lit.h.dim() == 5);
  CHECK(fn_value(lit.h, inst.demand) == 0.0);

  DispatchInstance outside = inst;
  outside.demand[4] = 2.0;  // below that generator's floor
  CHECK_THROWS_AS(
      build_dispatch(outside, q_std, BatchSchedule::polynomial(1.0, 1.2), true),
      ConfigError);
}

TEST_CASE("configs round-trip through their canonical form") {
  RunConfig cfg = default_dispatch_config();
  std::string s1 = serialize_config(cfg);
  RunConfig re = parse_config(s1);
  CHECK(serialize_config(re) == s1);
  CHECK(re.trials == 100);
  CHECK(re.master_seed == 7);
  CHECK(re.solver.max_iters == 2000);
  CHECK(re.oracle.schedule.kind == "polynomial");
  REQUIRE(re.dispatch.has_value());
  CHECK(re.dispatch->q_mean == builtin_dispatch_instance().q_mean);

  // every optional populated
  RunConfig full = default_dispatch_config();
  full.mode = RunMode::Block;
  full.literal_coupling = true;
  full.trials = 3;
  full.master_seed = 99;
  full.output_dir = "elsewhere";
  full.solver.sigma.present = true;
  full.solver.sigma.is_scalar = false;
  full.solver.sigma.diagonal = {0.25, 0.5, 0.125, 0.75, 0.3};
  full.solver.gamma.present = true;
  full.solver.gamma.scalar = 0.4;
  full.solver.max_iters = 123;
  full.solver.stop_residual = 1e-7;
  full.solver.record_every = 5;
  full.solver.safety = 0.8;
  full.solver.dual_in_x_update = "plain";
  full.oracle.q_std = Vec{0.0, 0.0, 0.0, 0.0, 0.0};
  full.oracle.q_std_ratio = 0.25;
  full.oracle.sigma0 = 1.5;
  full.oracle.sigma1 = 1e-6;
  full.oracle.schedule.kind = "geometric";
  full.oracle.schedule.n0 = 2.0;
  full.oracle.schedule.ratio = 1.5;
  BlockSection bs;
  bs.blocks.push_back({0, 1, 0, 2});
  bs.blocks.push_back({1, 5, 2, 5});
  bs.probs = {0.5, 0.5};
  bs.single_block = false;
  full.block = bs;
  std::string f1 = serialize_config(full);
  RunConfig fre = parse_config(f1);
  CHECK(serialize_config(fre) == f1);
  CHECK(fre.solver.sigma.diagonal == full.solver.sigma.diagonal);
  CHECK(fre.solver.dual_in_x_update == "plain");
  CHECK(fre.oracle.sigma0.value() == 1.5);
  REQUIRE(fre.block.has_value());
  CHECK(fre.block->blocks.size() == 2);
  CHECK(fre.block->blocks[1].dual_end == 5);

  // distributed section with a mix of explicit and defaulted agent fields
  RunConfig dist;
  dist.mode = RunMode::Distributed;
  DistributedSection ds;
  ds.num_agents = 2;
  EdgeSpec e;
  e.i = 1;
  e.j = 0;
  e.a_ij = Matrix(1, 1);
  e.a_ij(0, 0) = 1.0;
  e.a_ji = Matrix(1, 1);
  e.a_ji(0, 0) = -1.0;
  e.b = {0.0};
  e.tau = 0.4;
  ds.edges.push_back(e);
  AgentSpec plain_agent;
  plain_agent.q_mean = {0.5};
  plain_agent.q_std = {0.0};
  plain_agent.p = {-1.0};
  ds.agents.push_back(plain_agent);
  AgentSpec rich_agent;
  rich_agent.q_mean = {0.5};
  rich_agent.q_std = {0.0};
  rich_agent.p = {-3.0};
  rich_agent.lo = Vec{-10.0};
  rich_agent.hi = Vec{10.0};
  rich_agent.sigma = 0.4;
  rich_agent.gamma = 0.4;
  Matrix l11(1, 1);
  l11(0, 0) = 1.0;
  rich_agent.l = l11;
  rich_agent.h_kind = "point";
  rich_agent.h_point = {0.5};
  ds.agents.push_back(rich_agent);
  dist.distributed = ds;
  dist.dispatch.reset();
  std::string d1 = serialize_config(dist);
  RunConfig dre = parse_config(d1);
  CHECK(serialize_config(dre) == d1);
  REQUIRE(dre.distributed.has_value());
  CHECK(dre.distributed->agents[1].h_kind == "point");
  CHECK(dre.distributed->agents[0].sigma.has_value() == false);
}

TEST_CASE("malformed configs are rejected with config errors") {
  CHECK_THROWS_AS(parse_config("not json"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"surprise\": 1}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"solver\": {\"sgima\": 0.4}}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"mode\": \"federated\"}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"trials\": 0}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"solver\": {\"record_every\": 0}}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"solver\": {\"safety\": 1.0}}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"solver\": {\"dual_in_x_update\": \"both\"}}"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_config("{\"oracle\": {\"schedule\": {\"kind\": \"fibonacci\"}}}"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config("{\"oracle\": {\"schedule\": {\"kind\": \"polynomial\", "
                   "\"n0\": 1.0, \"exponent\": 1.2, \"ratio\": 2.0}}}"),
      ConfigError);

  // defaults hold for an empty document
  RunConfig empty = parse_config("{}");
  CHECK(empty.trials == 100);
  CHECK(!empty.dispatch.has_value());
  CHECK_THROWS_AS(build_centralized(empty), ConfigError);
}

TEST_CASE("the resolver fills defaults and reports which") {
  RunConfig cfg = default_dispatch_config();
  BuiltCentralized built = build_centralized(cfg);
  CHECK(built.defaults_applied ==
        std::vector<std::string>{"q_std", "sigma", "gamma"});
  CHECK(built.q_std == scaled(builtin_dispatch_instance().q_mean, 0.1));
  CHECK(built.solver.sigma.dim() == 1);
  CHECK(built.solver.gamma.dim() == 5);
  StepValidation v = validate_step_sizes(built.problem, built.solver);
  CHECK(v.ok);

  RunConfig pinned = cfg;
  pinned.oracle.q_std = Vec(5, 0.0);
  pinned.oracle.sigma0 = 3.25;
  pinned.solver.sigma.present = true;
  pinned.solver.sigma.scalar = 0.25;
  BuiltCentralized b2 = build_centralized(pinned);
  CHECK(b2.defaults_applied == std::vector<std::string>{"gamma"});
  CHECK(b2.problem.smooth.model.deterministic());
  CHECK(b2.problem.smooth.sigma0 == 3.25);

  RunConfig short_std = cfg;
  short_std.oracle.q_std = Vec{0.1, 0.1};
  CHECK_THROWS_AS(build_centralized(short_std), ConfigError);
}

TEST_CASE("benchmark aggregates keep trial statistics ordered") {
  RunConfig cfg = default_dispatch_config();
  cfg.trials = 4;
  cfg.solver.max_iters = 60;
  cfg.solver.record_every = 20;
  BenchmarkOutput out = run_benchmark(cfg);

  CHECK(out.metric_names ==
        std::vector<std::string>{"dist_to_solution", "cost_gap",
                                 "constraint_violation"});
  REQUIRE(out.rows.size() == 4 * 3);  // grid 0,20,40,60
  for (const AggregateRow& r : out.rows) {
    CHECK(r.min <= r.mean);
    CHECK(r.mean <= r.max);
  }
  CHECK(out.rows.front().iter == 0);
  CHECK(out.rows.back().iter == 60);
  CHECK(out.final_mean("dist_to_solution") < out.first_mean("dist_to_solution"));
  CHECK(out.trace_csv.rfind("iter,metric,min,mean,max\n", 0) == 0);
  CHECK_THROWS_AS(out.final_mean("nope"), InvalidInputError);

  // one trial collapses the spread entirely
  RunConfig solo = cfg;
  solo.trials = 1;
  BenchmarkOutput one = run_benchmark(solo);
  for (const AggregateRow& r : one.rows) {
    CHECK(r.min == r.mean);
    CHECK(r.mean == r.max);
  }

  // meta echoes the exact canonical config
  using njson = nlohmann::ordered_json;
  njson meta = njson::parse(out.meta_json);
  CHECK(meta["config"] == njson::parse(serialize_config(cfg)));
  CHECK(meta["resolved"]["trials"] == 4);
  CHECK(meta["reference"]["lambda_star"].get<double>() ==
        doctest::Approx(7.3889549243268968).epsilon(1e-12));
  CHECK(meta.contains("step_margin"));
}

TEST_CASE("worker count never alters rendered output") {
  RunConfig cfg = default_dispatch_config();
  cfg.trials = 6;
  cfg.solver.max_iters = 40;
  cfg.solver.record_every = 10;

  setenv("STRIPD_WORKERS", "1", 1);
  BenchmarkOutput serial = run_benchmark(cfg);
  setenv("STRIPD_WORKERS", "3", 1);
  BenchmarkOutput threaded = run_benchmark(cfg);
  unsetenv("STRIPD_WORKERS");

  CHECK(serial.trace_csv == threaded.trace_csv);
  CHECK(serial.meta_json == threaded.meta_json);
}

TEST_CASE("block mode benchmarks need a separable reading") {
  RunConfig cfg = default_dispatch_config();
  cfg.mode = RunMode::Block;
  cfg.literal_coupling = true;  // identity coupling separates per generator
  cfg.trials = 2;
  cfg.solver.max_iters = 400;
  cfg.solver.record_every = 100;
  BlockSection bs;
  for (std::int64_t i = 0; i < 5; ++i) bs.blocks.push_back({i, i + 1, i, i + 1});
  bs.probs = Vec(5, 0.5);
  cfg.block = bs;

  BenchmarkOutput out = run_benchmark(cfg);
  CHECK(out.final_mean("dist_to_solution") < out.first_mean("dist_to_solution"));
  CHECK(out.reference->x_star == builtin_dispatch_instance().demand);

  // the aggregate coupling row spans all generators: not block separable
  RunConfig bad = cfg;
  bad.literal_coupling = false;
  CHECK_THROWS_AS(run_benchmark(bad), InvalidInputError);
}

TEST_CASE("distributed benchmarks aggregate edge metrics") {
  RunConfig cfg;
  cfg.mode = RunMode::Distributed;
  cfg.trials = 3;
  cfg.solver.max_iters = 50;
  cfg.solver.record_every = 10;
  DistributedSection ds;
  ds.num_agents = 2;
  EdgeSpec e;
  e.i = 1;  // deliberately reversed; the builder must canonicalize
  e.j = 0;
  e.a_ij = Matrix(1, 1);
  e.a_ij(0, 0) = 1.0;
  e.a_ji = Matrix(1, 1);
  e.a_ji(0, 0) = -1.0;
  e.b = {0.0};
  e.tau = 0.4;
  ds.edges.push_back(e);
  for (double pull : {-1.0, -3.0}) {
    AgentSpec a;
    a.q_mean = {0.5};
    a.q_std = {0.0};
    a.p = {pull};
    a.sigma = 0.4;
    a.gamma = 0.4;
    ds.agents.push_back(a);
  }
  cfg.distributed = ds;
  cfg.dispatch.reset();

  BenchmarkOutput out = run_benchmark(cfg);
  CHECK(out.metric_names ==
        std::vector<std::string>{"edge_violation", "step_movement"});
  // grid 0,10,20,30,40,49
  REQUIRE(out.rows.size() == 6 * 2);
  CHECK(out.rows.back().iter == 49);
  CHECK(out.final_mean("edge_violation") < out.first_mean("edge_violation"));

  setenv("STRIPD_WORKERS", "1", 1);
  BenchmarkOutput serial = run_benchmark(cfg);
  setenv("STRIPD_WORKERS", "4", 1);
  BenchmarkOutput threaded = run_benchmark(cfg);
  unsetenv("STRIPD_WORKERS");
  CHECK(serial.trace_csv == threaded.trace_csv);
  CHECK(serial.meta_json == threaded.meta_json);
}

TEST_CASE("unsafe explicit steps are refused before any trial runs") {
  RunConfig cfg = default_dispatch_config();
  cfg.trials = 1;
  cfg.solver.sigma.present = true;
  cfg.solver.sigma.scalar = 10.0;
  cfg.solver.gamma.present = true;
  cfg.solver.gamma.scalar = 10.0;
  CHECK_THROWS_AS(run_benchmark(cfg), StepSizeError);
}

TEST_CASE("outputs land on disk exactly as rendered") {
  RunConfig cfg = default_dispatch_config();
  cfg.trials = 1;
  cfg.solver.max_iters = 10;
  cfg.solver.record_every = 5;
  BenchmarkOutput out = run_benchmark(cfg);

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "stripd_bench_check";
  fs::remove_all(dir);
  write_outputs(out, dir.string());

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::string s((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
    return s;
  };
  CHECK(slurp(dir / "trace.csv") == out.trace_csv);
  CHECK(slurp(dir / "meta.json") == out.meta_json);
  fs::remove_all(dir);
}
