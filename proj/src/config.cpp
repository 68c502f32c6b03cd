#include "stripd/config.hpp"

#include <fstream>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "stripd/errors.hpp"

namespace stripd {

using json = nlohmann::ordered_json;

namespace {

void expect_keys(const json& j, const char* where,
                 std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (item.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("unknown key \"" + item.key() + "\" in " + where);
    }
  }
}

json vec_to_json(const Vec& v) { return json(v); }

Vec vec_from_json(const json& j, const char* where) {
  if (!j.is_array()) throw ConfigError(std::string(where) + " must be an array");
  Vec v;
  v.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_number()) throw ConfigError(std::string(where) + " entries must be numbers");
    v.push_back(e.get<double>());
  }
  return v;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows; ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols; ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const char* where) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(std::string(where) + " must be a non-empty array of rows");
  }
  const int rows = static_cast<int>(j.size());
  if (!j[0].is_array()) throw ConfigError(std::string(where) + " rows must be arrays");
  const int cols = static_cast<int>(j[0].size());
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!j[static_cast<std::size_t>(r)].is_array() ||
        static_cast<int>(j[static_cast<std::size_t>(r)].size()) != cols) {
      throw ConfigError(std::string(where) + " rows must have equal length");
    }
    for (int c = 0; c < cols; ++c) {
      m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

json step_to_json(const StepSpec& s) {
  if (!s.present) return nullptr;
  if (s.is_scalar) return s.scalar;
  return vec_to_json(s.diagonal);
}

StepSpec step_from_json(const json& j, const char* where) {
  StepSpec s;
  if (j.is_null()) return s;
  s.present = true;
  if (j.is_number()) {
    s.is_scalar = true;
    s.scalar = j.get<double>();
    return s;
  }
  if (j.is_array()) {
    s.is_scalar = false;
    s.diagonal = vec_from_json(j, where);
    return s;
  }
  throw ConfigError(std::string(where) + " must be null, a number or an array");
}

json schedule_to_json(const ScheduleSpec& s) {
  json j;
  j["kind"] = s.kind;
  if (s.kind == "polynomial") {
    j["n0"] = s.n0;
    j["exponent"] = s.exponent;
  } else if (s.kind == "geometric") {
    j["n0"] = s.n0;
    j["ratio"] = s.ratio;
  } else if (s.kind == "constant") {
    j["n"] = s.n;
    j["accept_nonvanishing_variance"] = s.accept_nonvanishing_variance;
  } else {
    throw ConfigError("unknown schedule kind: " + s.kind);
  }
  return j;
}

ScheduleSpec schedule_from_json(const json& j) {
  ScheduleSpec s;
  if (!j.is_object() || !j.contains("kind")) {
    throw ConfigError("oracle.schedule must be an object with a kind");
  }
  s.kind = j.at("kind").get<std::string>();
  if (s.kind == "polynomial") {
    expect_keys(j, "oracle.schedule", {"kind", "n0", "exponent"});
    s.n0 = j.at("n0").get<double>();
    s.exponent = j.at("exponent").get<double>();
  } else if (s.kind == "geometric") {
    expect_keys(j, "oracle.schedule", {"kind", "n0", "ratio"});
    s.n0 = j.at("n0").get<double>();
    s.ratio = j.at("ratio").get<double>();
  } else if (s.kind == "constant") {
    expect_keys(j, "oracle.schedule", {"kind", "n", "accept_nonvanishing_variance"});
    s.n = j.at("n").get<std::int64_t>();
    s.accept_nonvanishing_variance =
        j.value("accept_nonvanishing_variance", false);
  } else {
    throw ConfigError("unknown schedule kind: " + s.kind);
  }
  return s;
}

json dispatch_to_json(const DispatchInstance& d) {
  json j;
  j["q_mean"] = vec_to_json(d.q_mean);
  j["p"] = vec_to_json(d.p);
  j["lo"] = vec_to_json(d.lo);
  j["hi"] = vec_to_json(d.hi);
  j["demand"] = vec_to_json(d.demand);
  return j;
}

DispatchInstance dispatch_from_json(const json& j) {
  expect_keys(j, "dispatch", {"q_mean", "p", "lo", "hi", "demand"});
  DispatchInstance d;
  d.q_mean = vec_from_json(j.at("q_mean"), "dispatch.q_mean");
  d.p = vec_from_json(j.at("p"), "dispatch.p");
  d.lo = vec_from_json(j.at("lo"), "dispatch.lo");
  d.hi = vec_from_json(j.at("hi"), "dispatch.hi");
  d.demand = vec_from_json(j.at("demand"), "dispatch.demand");
  return d;
}

json block_to_json(const BlockSection& b) {
  json j;
  json blocks = json::array();
  for (const auto& r : b.blocks) {
    json one;
    one["dual"] = json::array({r.dual_begin, r.dual_end});
    one["primal"] = json::array({r.primal_begin, r.primal_end});
    blocks.push_back(std::move(one));
  }
  j["blocks"] = std::move(blocks);
  j["probs"] = vec_to_json(b.probs);
  j["single_block"] = b.single_block;
  return j;
}

BlockSection block_from_json(const json& j) {
  expect_keys(j, "block", {"blocks", "probs", "single_block"});
  BlockSection b;
  for (const auto& one : j.at("blocks")) {
    expect_keys(one, "block.blocks[]", {"dual", "primal"});
    const auto& d = one.at("dual");
    const auto& p = one.at("primal");
    if (!d.is_array() || d.size() != 2 || !p.is_array() || p.size() != 2) {
      throw ConfigError("block ranges must be [begin, end] pairs");
    }
    BlockRangeSpec r;
    r.dual_begin = d[0].get<std::int64_t>();
    r.dual_end = d[1].get<std::int64_t>();
    r.primal_begin = p[0].get<std::int64_t>();
    r.primal_end = p[1].get<std::int64_t>();
    b.blocks.push_back(r);
  }
  b.probs = vec_from_json(j.at("probs"), "block.probs");
  b.single_block = j.value("single_block", false);
  return b;
}

json agent_to_json(const AgentSpec& a) {
  json j;
  j["q_mean"] = vec_to_json(a.q_mean);
  j["q_std"] = vec_to_json(a.q_std);
  j["p"] = vec_to_json(a.p);
  j["lo"] = a.lo ? vec_to_json(*a.lo) : json(nullptr);
  j["hi"] = a.hi ? vec_to_json(*a.hi) : json(nullptr);
  j["sigma"] = a.sigma ? json(*a.sigma) : json(nullptr);
  j["gamma"] = a.gamma ? json(*a.gamma) : json(nullptr);
  j["l"] = a.l ? matrix_to_json(*a.l) : json(nullptr);
  j["h_kind"] = a.h_kind;
  j["h_point"] = vec_to_json(a.h_point);
  j["h_target"] = a.h_target;
  return j;
}

AgentSpec agent_from_json(const json& j) {
  expect_keys(j, "distributed.agents[]",
              {"q_mean", "q_std", "p", "lo", "hi", "sigma", "gamma", "l", "h_kind",
               "h_point", "h_target"});
  AgentSpec a;
  a.q_mean = vec_from_json(j.at("q_mean"), "agent.q_mean");
  a.q_std = vec_from_json(j.at("q_std"), "agent.q_std");
  a.p = vec_from_json(j.at("p"), "agent.p");
  if (j.contains("lo") && !j.at("lo").is_null())
    a.lo = vec_from_json(j.at("lo"), "agent.lo");
  if (j.contains("hi") && !j.at("hi").is_null())
    a.hi = vec_from_json(j.at("hi"), "agent.hi");
  if (j.contains("sigma") && !j.at("sigma").is_null())
    a.sigma = j.at("sigma").get<double>();
  if (j.contains("gamma") && !j.at("gamma").is_null())
    a.gamma = j.at("gamma").get<double>();
  if (j.contains("l") && !j.at("l").is_null())
    a.l = matrix_from_json(j.at("l"), "agent.l");
  a.h_kind = j.value("h_kind", std::string("zero"));
  if (j.contains("h_point")) a.h_point = vec_from_json(j.at("h_point"), "agent.h_point");
  a.h_target = j.value("h_target", 0.0);
  return a;
}

json distributed_to_json(const DistributedSection& d) {
  json j;
  j["num_agents"] = d.num_agents;
  json edges = json::array();
  for (const auto& e : d.edges) {
    json one;
    one["i"] = e.i;
    one["j"] = e.j;
    one["a_ij"] = matrix_to_json(e.a_ij);
    one["a_ji"] = matrix_to_json(e.a_ji);
    one["b"] = vec_to_json(e.b);
    one["tau"] = e.tau;
    edges.push_back(std::move(one));
  }
  j["edges"] = std::move(edges);
  json agents = json::array();
  for (const auto& a : d.agents) agents.push_back(agent_to_json(a));
  j["agents"] = std::move(agents);
  return j;
}

DistributedSection distributed_from_json(const json& j) {
  expect_keys(j, "distributed", {"num_agents", "edges", "agents"});
  DistributedSection d;
  d.num_agents = j.at("num_agents").get<int>();
  for (const auto& one : j.at("edges")) {
    expect_keys(one, "distributed.edges[]", {"i", "j", "a_ij", "a_ji", "b", "tau"});
    EdgeSpec e;
    e.i = one.at("i").get<int>();
    e.j = one.at("j").get<int>();
    e.a_ij = matrix_from_json(one.at("a_ij"), "edge.a_ij");
    e.a_ji = matrix_from_json(one.at("a_ji"), "edge.a_ji");
    e.b = vec_from_json(one.at("b"), "edge.b");
    e.tau = one.value("tau", 0.5);
    d.edges.push_back(std::move(e));
  }
  for (const auto& one : j.at("agents")) d.agents.push_back(agent_from_json(one));
  return d;
}

std::string mode_to_string(RunMode m) {
  switch (m) {
    case RunMode::Centralized: return "centralized";
    case RunMode::Distributed: return "distributed";
    case RunMode::Block: return "block";
  }
  throw ConfigError("invalid run mode");
}

RunMode mode_from_string(const std::string& s) {
  if (s == "centralized") return RunMode::Centralized;
  if (s == "distributed") return RunMode::Distributed;
  if (s == "block") return RunMode::Block;
  throw ConfigError("unknown mode: " + s);
}

}  // namespace

BatchSchedule ScheduleSpec::make() const {
  if (kind == "polynomial") return BatchSchedule::polynomial(n0, exponent);
  if (kind == "geometric") return BatchSchedule::geometric(n0, ratio);
  if (kind == "constant") return BatchSchedule::constant(n, accept_nonvanishing_variance);
  throw ConfigError("unknown schedule kind: " + kind);
}

SpdOperator StepSpec::make(int dim) const {
  if (!present) throw ConfigError("step size missing and no default resolved");
  if (is_scalar) {
    if (!(scalar > 0.0)) throw ConfigError("step sizes must be positive");
    return SpdOperator::scalar_multiple(dim, scalar);
  }
  if (static_cast<int>(diagonal.size()) != dim) {
    throw ConfigError("step diagonal length does not match the problem dimension");
  }
  for (double v : diagonal) {
    if (!(v > 0.0)) throw ConfigError("step sizes must be positive");
  }
  return SpdOperator::diagonal(diagonal);
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    expect_keys(j, "config",
                {"mode", "dispatch", "literal_coupling", "block", "distributed",
                 "solver", "oracle", "trials", "master_seed", "output_dir"});
    RunConfig cfg;
    cfg.mode = mode_from_string(j.value("mode", std::string("centralized")));
    if (j.contains("dispatch") && !j.at("dispatch").is_null()) {
      cfg.dispatch = dispatch_from_json(j.at("dispatch"));
    }
    cfg.literal_coupling = j.value("literal_coupling", false);
    if (j.contains("block") && !j.at("block").is_null()) {
      cfg.block = block_from_json(j.at("block"));
    }
    if (j.contains("distributed") && !j.at("distributed").is_null()) {
      cfg.distributed = distributed_from_json(j.at("distributed"));
    }
    if (j.contains("solver")) {
      const json& s = j.at("solver");
      expect_keys(s, "solver",
                  {"sigma", "gamma", "max_iters", "stop_residual", "record_every",
                   "safety", "dual_in_x_update"});
      cfg.solver.sigma = step_from_json(s.value("sigma", json(nullptr)), "solver.sigma");
      cfg.solver.gamma = step_from_json(s.value("gamma", json(nullptr)), "solver.gamma");
      cfg.solver.max_iters = s.value("max_iters", std::int64_t{2000});
      cfg.solver.stop_residual = s.value("stop_residual", 0.0);
      cfg.solver.record_every = s.value("record_every", std::int64_t{1});
      cfg.solver.safety = s.value("safety", 0.9);
      cfg.solver.dual_in_x_update =
          s.value("dual_in_x_update", std::string("averaged"));
    }
    if (j.contains("oracle")) {
      const json& o = j.at("oracle");
      expect_keys(o, "oracle", {"q_std_ratio", "q_std", "schedule", "sigma0", "sigma1"});
      cfg.oracle.q_std_ratio = o.value("q_std_ratio", 0.1);
      if (o.contains("q_std") && !o.at("q_std").is_null()) {
        cfg.oracle.q_std = vec_from_json(o.at("q_std"), "oracle.q_std");
      }
      if (o.contains("schedule")) cfg.oracle.schedule = schedule_from_json(o.at("schedule"));
      if (o.contains("sigma0") && !o.at("sigma0").is_null()) {
        cfg.oracle.sigma0 = o.at("sigma0").get<double>();
      }
      if (o.contains("sigma1") && !o.at("sigma1").is_null()) {
        cfg.oracle.sigma1 = o.at("sigma1").get<double>();
      }
    }
    cfg.trials = j.value("trials", std::int64_t{100});
    cfg.master_seed = j.value("master_seed", std::uint64_t{7});
    cfg.output_dir = j.value("output_dir", std::string("out"));

    if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
    if (cfg.solver.max_iters < 0) throw ConfigError("max_iters must be >= 0");
    if (cfg.solver.record_every < 1) throw ConfigError("record_every must be >= 1");
    if (!(cfg.solver.safety > 0.0 && cfg.solver.safety < 1.0)) {
      throw ConfigError("safety must lie in (0, 1)");
    }
    if (cfg.solver.dual_in_x_update != "averaged" &&
        cfg.solver.dual_in_x_update != "plain") {
      throw ConfigError("dual_in_x_update must be \"averaged\" or \"plain\"");
    }
    if (!(cfg.oracle.q_std_ratio >= 0.0)) throw ConfigError("q_std_ratio must be >= 0");
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& cfg) {
  json j;
  j["mode"] = mode_to_string(cfg.mode);
  j["dispatch"] = cfg.dispatch ? dispatch_to_json(*cfg.dispatch) : json(nullptr);
  j["literal_coupling"] = cfg.literal_coupling;
  j["block"] = cfg.block ? block_to_json(*cfg.block) : json(nullptr);
  j["distributed"] =
      cfg.distributed ? distributed_to_json(*cfg.distributed) : json(nullptr);
  json s;
  s["sigma"] = step_to_json(cfg.solver.sigma);
  s["gamma"] = step_to_json(cfg.solver.gamma);
  s["max_iters"] = cfg.solver.max_iters;
  s["stop_residual"] = cfg.solver.stop_residual;
  s["record_every"] = cfg.solver.record_every;
  s["safety"] = cfg.solver.safety;
  s["dual_in_x_update"] = cfg.solver.dual_in_x_update;
  j["solver"] = std::move(s);
  json o;
  o["q_std_ratio"] = cfg.oracle.q_std_ratio;
  o["q_std"] = cfg.oracle.q_std ? vec_to_json(*cfg.oracle.q_std) : json(nullptr);
  o["schedule"] = schedule_to_json(cfg.oracle.schedule);
  o["sigma0"] = cfg.oracle.sigma0 ? json(*cfg.oracle.sigma0) : json(nullptr);
  o["sigma1"] = cfg.oracle.sigma1 ? json(*cfg.oracle.sigma1) : json(nullptr);
  j["oracle"] = std::move(o);
  j["trials"] = cfg.trials;
  j["master_seed"] = cfg.master_seed;
  j["output_dir"] = cfg.output_dir;
  return j.dump(2) + "\n";
}

RunConfig default_dispatch_config() {
  RunConfig cfg;
  cfg.dispatch = builtin_dispatch_instance();
  return cfg;
}

BuiltCentralized build_centralized(const RunConfig& cfg) {
  if (!cfg.dispatch) {
    throw ConfigError("centralized and block runs need a dispatch section");
  }
  const DispatchInstance& inst = *cfg.dispatch;
  validate_instance(inst);
  const int m = inst.generators();

  std::vector<std::string> defaults_applied;
  Vec q_std;
  if (cfg.oracle.q_std) {
    q_std = *cfg.oracle.q_std;
    if (static_cast<int>(q_std.size()) != m) {
      throw ConfigError("oracle.q_std length does not match the instance");
    }
  } else {
    q_std = scaled(inst.q_mean, cfg.oracle.q_std_ratio);
    defaults_applied.push_back("q_std");
  }

  CompositeProblem problem =
      build_dispatch(inst, q_std, cfg.oracle.schedule.make(), cfg.literal_coupling);
  if (cfg.oracle.sigma0) problem.smooth.sigma0 = *cfg.oracle.sigma0;
  if (cfg.oracle.sigma1) problem.smooth.sigma1 = *cfg.oracle.sigma1;

  DispatchReference ref = dispatch_reference(inst);
  if (cfg.literal_coupling) {
    ref.x_star = inst.demand;
    ref.cost_star = dispatch_cost(inst, inst.demand);
  }

  const int q_dim = problem.l.rows();
  const int p_dim = problem.l.cols();
  DefaultSteps ds = default_step_sizes(problem.smooth.model.beta_f(),
                                       operator_norm(problem.l), cfg.solver.safety);
  SpdOperator sigma = cfg.solver.sigma.present
                          ? cfg.solver.sigma.make(q_dim)
                          : SpdOperator::scalar_multiple(q_dim, ds.sigma);
  if (!cfg.solver.sigma.present) defaults_applied.push_back("sigma");
  SpdOperator gamma = cfg.solver.gamma.present
                          ? cfg.solver.gamma.make(p_dim)
                          : SpdOperator::scalar_multiple(p_dim, ds.gamma);
  if (!cfg.solver.gamma.present) defaults_applied.push_back("gamma");

  SolverConfig scfg{std::move(sigma), std::move(gamma)};
  scfg.max_iters = cfg.solver.max_iters;
  scfg.seed = cfg.master_seed;
  scfg.stop_residual = cfg.solver.stop_residual;
  scfg.record_every = cfg.solver.record_every;
  scfg.dual_in_x_update = cfg.solver.dual_in_x_update == "plain"
                              ? DualVariant::Plain
                              : DualVariant::Averaged;

  return BuiltCentralized{std::move(problem), std::move(scfg), inst, std::move(ref),
                          std::move(q_std), std::move(defaults_applied)};
}

BlockPartition build_partition(const RunConfig& cfg) {
  if (!cfg.block) throw ConfigError("block mode needs a block section");
  BlockPartition bp;
  for (const auto& r : cfg.block->blocks) {
    BlockPartition::Block b;
    b.dual = IndexRange{static_cast<int>(r.dual_begin), static_cast<int>(r.dual_end)};
    b.primal =
        IndexRange{static_cast<int>(r.primal_begin), static_cast<int>(r.primal_end)};
    bp.blocks.push_back(b);
  }
  bp.probs = cfg.block->probs;
  bp.single_block = cfg.block->single_block;
  return bp;
}

DistributedProblem build_distributed(const RunConfig& cfg) {
  if (!cfg.distributed) throw ConfigError("distributed mode needs a distributed section");
  const DistributedSection& d = *cfg.distributed;

  std::vector<std::pair<int, int>> edges;
  edges.reserve(d.edges.size());
  for (const auto& e : d.edges) edges.emplace_back(e.i, e.j);
  Graph graph(d.num_agents, edges);

  std::vector<EdgeConstraint> constraints;
  constraints.reserve(d.edges.size());
  for (const auto& e : d.edges) {
    // The first block always acts on the smaller endpoint, matching the
    // canonical edge orientation.
    const bool flipped = e.i > e.j;
    EdgeConstraint c{flipped ? e.a_ji : e.a_ij, flipped ? e.a_ij : e.a_ji, e.b, e.tau};
    constraints.push_back(std::move(c));
  }

  BatchSchedule schedule = cfg.oracle.schedule.make();
  std::vector<AgentProblem> agents;
  agents.reserve(d.agents.size());
  for (const auto& a : d.agents) {
    const int p_dim = static_cast<int>(a.q_mean.size());
    auto model = SmoothModel::random_coefficient_quadratic(a.q_mean, a.q_std, a.p);

    ProximableFunction g = [&] {
      if (a.lo.has_value() != a.hi.has_value()) {
        throw ConfigError("agent bounds need both lo and hi");
      }
      if (a.lo) return ProximableFunction::box(*a.lo, *a.hi);
      return ProximableFunction::zero(p_dim);
    }();

    LinearMap l = a.l ? LinearMap(*a.l) : LinearMap(Matrix(1, p_dim));
    if (a.l && a.l->cols != p_dim) {
      throw ConfigError("agent coupling map width does not match its dimension");
    }
    ProximableFunction h = [&]() -> ProximableFunction {
      if (a.h_kind == "zero") return ProximableFunction::zero(l.rows());
      if (!a.l) throw ConfigError("agent h needs an explicit l map");
      if (a.h_kind == "point") {
        if (static_cast<int>(a.h_point.size()) != l.rows()) {
          throw ConfigError("agent h_point length does not match l");
        }
        return ProximableFunction::point(a.h_point);
      }
      if (a.h_kind == "sum_constraint") {
        return ProximableFunction::sum_constraint(l.rows(), a.h_target);
      }
      throw ConfigError("unknown agent h_kind: " + a.h_kind);
    }();

    DefaultSteps ds =
        default_step_sizes(model.beta_f(), operator_norm(l), cfg.solver.safety);
    const double sigma = a.sigma.value_or(ds.sigma);
    const double gamma = a.gamma.value_or(ds.gamma);

    OracleConfig oracle(std::move(model), schedule, Vec(static_cast<std::size_t>(p_dim), 0.0));
    if (cfg.oracle.sigma0) oracle.sigma0 = *cfg.oracle.sigma0;
    if (cfg.oracle.sigma1) oracle.sigma1 = *cfg.oracle.sigma1;
    agents.push_back(AgentProblem{std::move(oracle), std::move(g), std::move(h),
                                  std::move(l), sigma, gamma});
  }

  return DistributedProblem(std::move(graph), std::move(constraints), std::move(agents));
}

}  // namespace stripd
