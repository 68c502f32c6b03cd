#ifndef STRIPD_DISTRIBUTED_HPP
#define STRIPD_DISTRIBUTED_HPP

#include <map>
#include <utility>
#include <vector>

#include "stripd/solver.hpp"

namespace stripd {

// Undirected communication graph. Edges are stored canonically with the
// smaller endpoint first; the graph must be connected.
class Graph {
 public:
  Graph(int num_agents, std::vector<std::pair<int, int>> edges);

  int num_agents() const { return num_agents_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  // Global edge indices incident to an agent, ascending.
  const std::vector<int>& incident(int agent) const;

 private:
  int num_agents_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> incident_;
};

// Coupling A_ij x_i + A_ji x_j = b across one edge; a_ij acts on the smaller
// endpoint's variable. tau is the edge's dual step size.
struct EdgeConstraint {
  Matrix a_ij;
  Matrix a_ji;
  Vec b;
  double tau;
};

// One agent's local objective f_i + g_i + h_i(L_i x_i) and its scalar step
// sizes.
struct AgentProblem {
  OracleConfig smooth;
  ProximableFunction g;
  ProximableFunction h;
  LinearMap l;
  double sigma;
  double gamma;
};

struct AgentState {
  Vec x;
  Vec v;                    // dual for the local h_i
  std::map<int, Vec> w;     // per incident edge (global index): this agent's copy
};

struct DistributedProblem {
  DistributedProblem(Graph graph, std::vector<EdgeConstraint> constraints,
                     std::vector<AgentProblem> agents);

  Graph graph;
  std::vector<EdgeConstraint> constraints;
  std::vector<AgentProblem> agents;
};

std::vector<AgentState> zero_states(const DistributedProblem& dp);

// One synchronous round. Every agent reads only its own snapshot and the edge
// copies / positions of its graph neighbors; when access_log is given, each
// remote read is appended as (reader, owner) for the locality tests.
std::vector<AgentState> distributed_step(
    const DistributedProblem& dp, const std::vector<AgentState>& states,
    std::uint64_t k, std::uint64_t trial_key,
    std::vector<std::pair<int, int>>* access_log = nullptr);

// The distributed iteration rewritten as one composite problem: primal
// variables stacked agent by agent, duals stacked as all local v-blocks
// followed by one 2l-block per edge holding both copies, coupled through the
// pair-coupling indicator. Preconditioners are diagonal with sigma_i on
// v-blocks, tau_e on w-blocks and gamma_i on x-blocks.
struct StackedEquivalent {
  CompositeProblem problem;
  SpdOperator sigma;
  SpdOperator gamma;
  std::vector<int> x_offset;  // per agent
  std::vector<int> v_offset;  // per agent
  std::vector<int> w_offset;  // per edge
};

StackedEquivalent stack_problem(const DistributedProblem& dp);

PrimalDualState stack_states(const DistributedProblem& dp, const StackedEquivalent& se,
                             const std::vector<AgentState>& states);

// Runs the per-agent iteration and the stacked iteration side by side for
// `iters` rounds from the same start and returns the largest coordinate
// deviation seen anywhere along the way.
double equivalence_check(const DistributedProblem& dp,
                         const std::vector<AgentState>& initial, int iters,
                         std::uint64_t seed);

struct DistributedRecord {
  std::int64_t iter;
  // max over edges of ||A_ij x_i + A_ji x_j - b||
  double edge_violation;
  double step_movement;
};

struct DistributedTrace {
  std::vector<DistributedRecord> records;
  std::vector<AgentState> final_states;
};

DistributedTrace distributed_solve(const DistributedProblem& dp,
                                   const std::vector<AgentState>& initial,
                                   std::int64_t iters, std::uint64_t seed,
                                   std::int64_t record_every = 1,
                                   std::uint64_t trial = 0);

}  // namespace stripd

#endif  // STRIPD_DISTRIBUTED_HPP
