#include "stripd/distributed.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stripd/errors.hpp"

namespace stripd {

Graph::Graph(int num_agents, std::vector<std::pair<int, int>> edges)
    : num_agents_(num_agents) {
  if (num_agents_ < 1) throw InvalidInputError("Graph: needs at least one agent");
  edges_.reserve(edges.size());
  for (auto [i, j] : edges) {
    if (i == j) throw InvalidInputError("Graph: self-loops are not allowed");
    if (i < 0 || j < 0 || i >= num_agents_ || j >= num_agents_)
      throw InvalidInputError("Graph: edge endpoint out of range");
    edges_.emplace_back(std::min(i, j), std::max(i, j));
  }
  for (std::size_t a = 0; a < edges_.size(); ++a)
    for (std::size_t b = a + 1; b < edges_.size(); ++b)
      if (edges_[a] == edges_[b]) throw InvalidInputError("Graph: duplicate edge");

  incident_.resize(static_cast<std::size_t>(num_agents_));
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    incident_[static_cast<std::size_t>(edges_[e].first)].push_back(static_cast<int>(e));
    incident_[static_cast<std::size_t>(edges_[e].second)].push_back(static_cast<int>(e));
  }

  // BFS connectivity; a disconnected graph cannot reach consensus.
  std::vector<char> seen(static_cast<std::size_t>(num_agents_), 0);
  std::vector<int> queue{0};
  seen[0] = 1;
  while (!queue.empty()) {
    int a = queue.back();
    queue.pop_back();
    for (int e : incident_[static_cast<std::size_t>(a)]) {
      int other = edges_[static_cast<std::size_t>(e)].first == a
                      ? edges_[static_cast<std::size_t>(e)].second
                      : edges_[static_cast<std::size_t>(e)].first;
      if (!seen[static_cast<std::size_t>(other)]) {
        seen[static_cast<std::size_t>(other)] = 1;
        queue.push_back(other);
      }
    }
  }
  for (char s : seen)
    if (!s) throw InvalidInputError("Graph: communication graph is disconnected");
}

const std::vector<int>& Graph::incident(int agent) const {
  if (agent < 0 || agent >= num_agents_)
    throw DimensionError("Graph::incident: agent index out of range");
  return incident_[static_cast<std::size_t>(agent)];
}

DistributedProblem::DistributedProblem(Graph graph_in,
                                       std::vector<EdgeConstraint> constraints_in,
                                       std::vector<AgentProblem> agents_in)
    : graph(std::move(graph_in)),
      constraints(std::move(constraints_in)),
      agents(std::move(agents_in)) {
  if (static_cast<int>(agents.size()) != graph.num_agents())
    throw DimensionError("DistributedProblem: one problem per agent required");
  if (constraints.size() != graph.edges().size())
    throw DimensionError("DistributedProblem: one constraint per edge required");

  for (std::size_t i = 0; i < agents.size(); ++i) {
    const AgentProblem& a = agents[i];
    int p = a.l.cols(), q = a.l.rows();
    if (a.smooth.model.dim() != p || a.g.dim() != p || a.h.dim() != q)
      throw DimensionError("DistributedProblem: agent " + std::to_string(i) +
                           " has inconsistent dimensions");
    if (!(a.sigma > 0.0) || !(a.gamma > 0.0))
      throw InvalidInputError("DistributedProblem: step sizes must be positive");
  }
  for (std::size_t e = 0; e < constraints.size(); ++e) {
    const EdgeConstraint& c = constraints[e];
    auto [i, j] = graph.edges()[e];
    int l = static_cast<int>(c.b.size());
    if (l == 0) throw DimensionError("DistributedProblem: empty edge constraint");
    if (c.a_ij.rows != l || c.a_ji.rows != l)
      throw DimensionError("DistributedProblem: edge matrix row count must match b");
    if (c.a_ij.cols != agents[static_cast<std::size_t>(i)].l.cols() ||
        c.a_ji.cols != agents[static_cast<std::size_t>(j)].l.cols())
      throw DimensionError("DistributedProblem: edge matrix width must match agent");
    if (!(c.tau > 0.0))
      throw InvalidInputError("DistributedProblem: edge step size must be positive");
  }
}

std::vector<AgentState> zero_states(const DistributedProblem& dp) {
  std::vector<AgentState> states(dp.agents.size());
  for (std::size_t i = 0; i < dp.agents.size(); ++i) {
    states[i].x.assign(static_cast<std::size_t>(dp.agents[i].l.cols()), 0.0);
    states[i].v.assign(static_cast<std::size_t>(dp.agents[i].l.rows()), 0.0);
    for (int e : dp.graph.incident(static_cast<int>(i)))
      states[i].w[e].assign(dp.constraints[static_cast<std::size_t>(e)].b.size(), 0.0);
  }
  return states;
}

namespace {

void check_states(const DistributedProblem& dp, const std::vector<AgentState>& states) {
  if (states.size() != dp.agents.size())
    throw DimensionError("distributed: one state per agent required");
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].x.size() != static_cast<std::size_t>(dp.agents[i].l.cols()) ||
        states[i].v.size() != static_cast<std::size_t>(dp.agents[i].l.rows()))
      throw DimensionError("distributed: agent state dimension mismatch");
    for (int e : dp.graph.incident(static_cast<int>(i))) {
      auto it = states[i].w.find(e);
      if (it == states[i].w.end() ||
          it->second.size() != dp.constraints[static_cast<std::size_t>(e)].b.size())
        throw DimensionError("distributed: missing or misshapen edge copy");
    }
  }
}

// The edge average both endpoints agree on, computed in canonical endpoint
// order so the two local evaluations are bit-identical.
Vec edge_average(const EdgeConstraint& c, const Vec& w_first, const Vec& w_second,
                 const Vec& x_first, const Vec& x_second) {
  Vec avg = add(w_first, w_second);
  for (auto& v : avg) v *= 0.5;
  Vec coupling = add(c.a_ij.mul(x_first), c.a_ji.mul(x_second));
  Vec resid = sub(coupling, c.b);
  axpy(0.5 * c.tau, resid, avg);
  return avg;
}

}  // namespace

std::vector<AgentState> distributed_step(const DistributedProblem& dp,
                                         const std::vector<AgentState>& states,
                                         std::uint64_t k, std::uint64_t trial_key,
                                         std::vector<std::pair<int, int>>* access_log) {
  check_states(dp, states);
  std::vector<AgentState> next(states.size());

  for (std::size_t i = 0; i < dp.agents.size(); ++i) {
    const AgentProblem& me = dp.agents[i];
    const AgentState& mine = states[i];
    int p = me.l.cols(), q = me.l.rows();

    OracleConfig oc = me.smooth;
    oc.agent_tag = static_cast<std::uint32_t>(i);
    MinibatchResult mb = minibatch_gradient(oc, mine.x, k, trial_key);

    SpdOperator sigma = SpdOperator::scalar_multiple(q, me.sigma);
    Vec t = add(mine.v, sigma.apply(me.l.mul(mine.x)));
    Vec v_bar = prox_conjugate(me.h, sigma.inverse(), t);

    // Edge averages in ascending edge order; each one reads the neighbor's
    // copy and position.
    std::map<int, Vec> w_bar;
    Vec edge_pull(static_cast<std::size_t>(p), 0.0);
    bool any_edge = false;
    for (int e : dp.graph.incident(static_cast<int>(i))) {
      const EdgeConstraint& c = dp.constraints[static_cast<std::size_t>(e)];
      auto [first, second] = dp.graph.edges()[static_cast<std::size_t>(e)];
      int other = (first == static_cast<int>(i)) ? second : first;
      if (access_log) access_log->emplace_back(static_cast<int>(i), other);
      const AgentState& theirs = states[static_cast<std::size_t>(other)];
      const Vec& w_first =
          (first == static_cast<int>(i)) ? mine.w.at(e) : theirs.w.at(e);
      const Vec& w_second =
          (first == static_cast<int>(i)) ? theirs.w.at(e) : mine.w.at(e);
      const Vec& x_first = (first == static_cast<int>(i)) ? mine.x : theirs.x;
      const Vec& x_second = (first == static_cast<int>(i)) ? theirs.x : mine.x;
      Vec avg = edge_average(c, w_first, w_second, x_first, x_second);

      const Matrix& a_mine = (first == static_cast<int>(i)) ? c.a_ij : c.a_ji;
      Vec pull = a_mine.tmul(avg);
      edge_pull = add(edge_pull, pull);
      w_bar.emplace(e, std::move(avg));
      any_edge = true;
    }

    SpdOperator gamma = SpdOperator::scalar_multiple(p, me.gamma);
    Vec u = sub(mine.x, gamma.apply(mb.estimate));
    u = sub(u, gamma.apply(me.l.tmul(v_bar)));
    if (any_edge) u = sub(u, gamma.apply(edge_pull));
    Vec x_next = prox(me.g, gamma.inverse(), u);

    Vec d = sub(x_next, mine.x);
    Vec v_next = add(v_bar, sigma.apply(me.l.mul(d)));

    AgentState& out = next[i];
    out.x = std::move(x_next);
    out.v = std::move(v_next);
    for (int e : dp.graph.incident(static_cast<int>(i))) {
      const EdgeConstraint& c = dp.constraints[static_cast<std::size_t>(e)];
      auto [first, second] = dp.graph.edges()[static_cast<std::size_t>(e)];
      const Matrix& a_mine = (first == static_cast<int>(i)) ? c.a_ij : c.a_ji;
      Vec w_next = w_bar.at(e);
      Vec delta = a_mine.mul(d);
      axpy(c.tau, delta, w_next);
      out.w.emplace(e, std::move(w_next));
    }
  }
  return next;
}

StackedEquivalent stack_problem(const DistributedProblem& dp) {
  int m = dp.graph.num_agents();

  // The stacked oracle runs one shared schedule; mismatched per-agent
  // schedules would desynchronize the batch draws.
  const BatchSchedule& s0 = dp.agents[0].smooth.schedule;
  auto same_schedule = [&](const BatchSchedule& s) {
    if (s.node().index() != s0.node().index()) return false;
    if (const auto* p = std::get_if<PolynomialSchedule>(&s0.node())) {
      const auto& o = std::get<PolynomialSchedule>(s.node());
      return o.n0 == p->n0 && o.exponent == p->exponent;
    }
    if (const auto* g = std::get_if<GeometricSchedule>(&s0.node())) {
      const auto& o = std::get<GeometricSchedule>(s.node());
      return o.n0 == g->n0 && o.ratio == g->ratio;
    }
    return std::get<ConstantSchedule>(s.node()).n ==
           std::get<ConstantSchedule>(s0.node()).n;
  };
  for (const auto& a : dp.agents)
    if (!same_schedule(a.smooth.schedule))
      throw ConfigError("stack_problem: all agents must share one batch schedule");

  std::vector<int> x_offset(static_cast<std::size_t>(m)),
      v_offset(static_cast<std::size_t>(m)), w_offset(dp.constraints.size());
  int p_total = 0, v_total = 0;
  for (int i = 0; i < m; ++i) {
    x_offset[static_cast<std::size_t>(i)] = p_total;
    v_offset[static_cast<std::size_t>(i)] = v_total;
    p_total += dp.agents[static_cast<std::size_t>(i)].l.cols();
    v_total += dp.agents[static_cast<std::size_t>(i)].l.rows();
  }
  int dual_total = v_total;
  for (std::size_t e = 0; e < dp.constraints.size(); ++e) {
    w_offset[e] = dual_total;
    dual_total += 2 * static_cast<int>(dp.constraints[e].b.size());
  }

  // Stacked coupling map: local maps on top, one two-sided edge block per
  // constraint below.
  Matrix big(dual_total, p_total);
  for (int i = 0; i < m; ++i) {
    const Matrix& li = dp.agents[static_cast<std::size_t>(i)].l.entries();
    for (int r = 0; r < li.rows; ++r)
      for (int c = 0; c < li.cols; ++c)
        big(v_offset[static_cast<std::size_t>(i)] + r,
            x_offset[static_cast<std::size_t>(i)] + c) = li(r, c);
  }
  for (std::size_t e = 0; e < dp.constraints.size(); ++e) {
    const EdgeConstraint& c = dp.constraints[e];
    auto [i, j] = dp.graph.edges()[e];
    int l = static_cast<int>(c.b.size());
    for (int r = 0; r < l; ++r) {
      for (int cc = 0; cc < c.a_ij.cols; ++cc)
        big(w_offset[e] + r, x_offset[static_cast<std::size_t>(i)] + cc) = c.a_ij(r, cc);
      for (int cc = 0; cc < c.a_ji.cols; ++cc)
        big(w_offset[e] + l + r, x_offset[static_cast<std::size_t>(j)] + cc) =
            c.a_ji(r, cc);
    }
  }

  std::vector<SmoothModel> models;
  std::vector<ProximableFunction> g_parts, h_parts;
  Vec anchor;
  for (const auto& a : dp.agents) {
    models.push_back(a.smooth.model);
    g_parts.push_back(a.g);
    h_parts.push_back(a.h);
    anchor.insert(anchor.end(), a.smooth.reference_point.begin(),
                  a.smooth.reference_point.end());
  }
  for (const auto& c : dp.constraints)
    h_parts.push_back(ProximableFunction::edge_coupling(c.b));

  OracleConfig smooth(SmoothModel::stacked(std::move(models)), s0, std::move(anchor));

  Vec sig(static_cast<std::size_t>(dual_total)), gam(static_cast<std::size_t>(p_total));
  for (int i = 0; i < m; ++i) {
    const AgentProblem& a = dp.agents[static_cast<std::size_t>(i)];
    for (int r = 0; r < a.l.rows(); ++r)
      sig[static_cast<std::size_t>(v_offset[static_cast<std::size_t>(i)] + r)] = a.sigma;
    for (int c = 0; c < a.l.cols(); ++c)
      gam[static_cast<std::size_t>(x_offset[static_cast<std::size_t>(i)] + c)] = a.gamma;
  }
  for (std::size_t e = 0; e < dp.constraints.size(); ++e)
    for (int r = 0; r < 2 * static_cast<int>(dp.constraints[e].b.size()); ++r)
      sig[static_cast<std::size_t>(w_offset[e] + r)] = dp.constraints[e].tau;

  CompositeProblem problem(std::move(smooth),
                           ProximableFunction::separable(std::move(g_parts)),
                           ProximableFunction::separable(std::move(h_parts)),
                           LinearMap(std::move(big)),
                           SpdOperator::scalar_multiple(p_total, 1.0));
  return {std::move(problem), SpdOperator::diagonal(std::move(sig)),
          SpdOperator::diagonal(std::move(gam)), std::move(x_offset),
          std::move(v_offset), std::move(w_offset)};
}

PrimalDualState stack_states(const DistributedProblem& dp, const StackedEquivalent& se,
                             const std::vector<AgentState>& states) {
  check_states(dp, states);
  PrimalDualState z;
  z.x.assign(static_cast<std::size_t>(se.problem.l.cols()), 0.0);
  z.y.assign(static_cast<std::size_t>(se.problem.l.rows()), 0.0);
  for (std::size_t i = 0; i < states.size(); ++i) {
    std::copy(states[i].x.begin(), states[i].x.end(),
              z.x.begin() + se.x_offset[i]);
    std::copy(states[i].v.begin(), states[i].v.end(),
              z.y.begin() + se.v_offset[i]);
  }
  for (std::size_t e = 0; e < dp.constraints.size(); ++e) {
    auto [i, j] = dp.graph.edges()[e];
    int l = static_cast<int>(dp.constraints[e].b.size());
    const Vec& wi = states[static_cast<std::size_t>(i)].w.at(static_cast<int>(e));
    const Vec& wj = states[static_cast<std::size_t>(j)].w.at(static_cast<int>(e));
    std::copy(wi.begin(), wi.end(), z.y.begin() + se.w_offset[e]);
    std::copy(wj.begin(), wj.end(), z.y.begin() + se.w_offset[e] + l);
  }
  return z;
}

double equivalence_check(const DistributedProblem& dp,
                         const std::vector<AgentState>& initial, int iters,
                         std::uint64_t seed) {
  StackedEquivalent se = stack_problem(dp);
  SolverConfig cfg;
  cfg.sigma = se.sigma;
  cfg.gamma = se.gamma;

  std::uint64_t trial_key = derive_trial_key(seed, 0);
  std::vector<AgentState> states = initial;
  PrimalDualState z = stack_states(dp, se, initial);

  double dev = 0.0;
  for (int k = 0; k < iters; ++k) {
    states = distributed_step(dp, states, static_cast<std::uint64_t>(k), trial_key);
    StepResult s = stripd_step(se.problem, cfg, z, static_cast<std::uint64_t>(k),
                               trial_key);
    z = std::move(s.next);
    PrimalDualState mapped = stack_states(dp, se, states);
    dev = std::max(dev, max_abs_diff(mapped.x, z.x));
    dev = std::max(dev, max_abs_diff(mapped.y, z.y));
  }
  return dev;
}

DistributedTrace distributed_solve(const DistributedProblem& dp,
                                   const std::vector<AgentState>& initial,
                                   std::int64_t iters, std::uint64_t seed,
                                   std::int64_t record_every, std::uint64_t trial) {
  if (record_every < 1)
    throw InvalidInputError("distributed_solve: record_every must be >= 1");
  std::uint64_t trial_key = derive_trial_key(seed, trial);
  std::vector<AgentState> states = initial;
  DistributedTrace trace;

  auto violation = [&](const std::vector<AgentState>& st) {
    double worst = 0.0;
    for (std::size_t e = 0; e < dp.constraints.size(); ++e) {
      auto [i, j] = dp.graph.edges()[e];
      const EdgeConstraint& c = dp.constraints[e];
      Vec r = add(c.a_ij.mul(st[static_cast<std::size_t>(i)].x),
                  c.a_ji.mul(st[static_cast<std::size_t>(j)].x));
      r = sub(r, c.b);
      worst = std::max(worst, nrm2(r));
    }
    return worst;
  };

  for (std::int64_t k = 0; k < iters; ++k) {
    std::vector<AgentState> next =
        distributed_step(dp, states, static_cast<std::uint64_t>(k), trial_key);
    if (k % record_every == 0 || k == iters - 1) {
      double move = 0.0;
      for (std::size_t i = 0; i < states.size(); ++i)
        move += nrm2_sq(sub(next[i].x, states[i].x));
      trace.records.push_back({k, violation(next), std::sqrt(move)});
    }
    states = std::move(next);
    for (const auto& st : states)
      if (!all_finite(st.x) || !all_finite(st.v))
        throw DivergenceError("distributed_solve: non-finite iterate at iteration " +
                                  std::to_string(k + 1),
                              k + 1);
  }
  trace.final_states = std::move(states);
  return trace;
}

}  // namespace stripd
