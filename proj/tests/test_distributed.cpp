#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <utility>
#include <vector>

#include "doctest.h"
#include "stripd/distributed.hpp"
#include "stripd/errors.hpp"

using namespace stripd;

namespace {

Matrix row(std::initializer_list<double> vals) {
  Matrix m(1, static_cast<int>(vals.size()));
  int c = 0;
  for (double v : vals) m(0, c++) = v;
  return m;
}

AgentProblem quadratic_agent(double pull, double sigma, double gamma) {
  SmoothModel f = SmoothModel::random_coefficient_quadratic({0.5}, {0.0}, {-pull});
  OracleConfig smooth(f, BatchSchedule::polynomial(1.0, 1.2), {0.0});
  Matrix l(1, 1);
  l(0, 0) = 1.0;
  return {std::move(smooth), ProximableFunction::zero(1), ProximableFunction::zero(1),
          LinearMap(l), sigma, gamma};
}

AgentProblem random_agent(DrawStream& rng, int dim, double q_std) {
  Vec qm(static_cast<std::size_t>(dim)), qs(static_cast<std::size_t>(dim), q_std);
  Vec p(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    qm[static_cast<std::size_t>(i)] = 0.3 + 0.4 * rng.uniform();
    p[static_cast<std::size_t>(i)] = 2.0 * rng.uniform() - 1.0;
  }
  SmoothModel f = SmoothModel::random_coefficient_quadratic(qm, qs, p);
  OracleConfig smooth(f, BatchSchedule::polynomial(1.0, 1.2),
                      Vec(static_cast<std::size_t>(dim), 0.0));
  Matrix l(1, dim);
  for (int c = 0; c < dim; ++c) l(0, c) = 2.0 * rng.uniform() - 1.0;
  return {std::move(smooth),
          ProximableFunction::box(Vec(static_cast<std::size_t>(dim), -3.0),
                                  Vec(static_cast<std::size_t>(dim), 3.0)),
          ProximableFunction::zero(1), LinearMap(l), 0.3, 0.2};
}

Matrix random_row(DrawStream& rng, int dim) {
  Matrix m(1, dim);
  for (int c = 0; c < dim; ++c) m(0, c) = 2.0 * rng.uniform() - 1.0;
  return m;
}

}  // namespace

TEST_CASE("graph construction rejects malformed topologies") {
  CHECK_THROWS_AS(Graph(3, {{0, 1}}), InvalidInputError);           // 2 unreachable
  CHECK_THROWS_AS(Graph(2, {{0, 0}}), InvalidInputError);           // self-loop
  CHECK_THROWS_AS(Graph(2, {{0, 2}}), InvalidInputError);           // out of range
  CHECK_THROWS_AS(Graph(2, {{0, 1}, {1, 0}}), InvalidInputError);   // duplicate
  CHECK_THROWS_AS(Graph(0, {}), InvalidInputError);

  Graph g(3, {{1, 0}, {2, 1}});
  CHECK(g.edges()[0] == std::pair<int, int>(0, 1));  // canonical order
  CHECK(g.edges()[1] == std::pair<int, int>(1, 2));
  CHECK(g.incident(1) == std::vector<int>{0, 1});
  Graph single(1, {});
  CHECK(single.incident(0).empty());
}

TEST_CASE("two coupled agents agree on the average") {
  Graph g(2, {{0, 1}});
  std::vector<EdgeConstraint> cons{{row({1.0}), row({-1.0}), {0.0}, 0.4}};
  std::vector<AgentProblem> agents;
  agents.push_back(quadratic_agent(1.0, 0.4, 0.4));
  agents.push_back(quadratic_agent(3.0, 0.4, 0.4));
  DistributedProblem dp(g, std::move(cons), std::move(agents));

  DistributedTrace t = distributed_solve(dp, zero_states(dp), 400, 5);
  CHECK(std::fabs(t.final_states[0].x[0] - 2.0) < 1e-6);
  CHECK(std::fabs(t.final_states[1].x[0] - 2.0) < 1e-6);
  CHECK(t.records.back().edge_violation < 1e-6);
  CHECK(t.records.front().edge_violation > t.records.back().edge_violation);
}

TEST_CASE("stacked layout places every block where the offsets say") {
  Graph g(2, {{0, 1}});
  std::vector<EdgeConstraint> cons{{row({1.0}), row({-1.0}), {0.0}, 0.4}};
  std::vector<AgentProblem> agents;
  agents.push_back(quadratic_agent(1.0, 0.4, 0.4));
  agents.push_back(quadratic_agent(3.0, 0.4, 0.4));
  DistributedProblem dp(g, std::move(cons), std::move(agents));

  StackedEquivalent se = stack_problem(dp);
  CHECK(se.problem.l.cols() == 2);
  CHECK(se.problem.l.rows() == 4);  // two local duals + both copies of one edge
  CHECK(se.x_offset == std::vector<int>{0, 1});
  CHECK(se.v_offset == std::vector<int>{0, 1});
  CHECK(se.w_offset == std::vector<int>{2});

  // coupling rows: local identities on top, then A_ij and A_ji
  const Matrix& big = se.problem.l.entries();
  CHECK(big(0, 0) == 1.0);
  CHECK(big(1, 1) == 1.0);
  CHECK(big(2, 0) == 1.0);
  CHECK(big(2, 1) == 0.0);
  CHECK(big(3, 0) == 0.0);
  CHECK(big(3, 1) == -1.0);

  std::vector<AgentState> st = zero_states(dp);
  st[0].x = {1.5};
  st[1].x = {-2.5};
  st[0].v = {0.25};
  st[1].v = {0.5};
  st[0].w[0] = {7.0};
  st[1].w[0] = {9.0};
  PrimalDualState z = stack_states(dp, se, st);
  CHECK(z.x == Vec{1.5, -2.5});
  CHECK(z.y == Vec{0.25, 0.5, 7.0, 9.0});
}

TEST_CASE("one agent without edges collapses to the centralized iteration") {
  Graph g(1, {});
  std::vector<AgentProblem> agents;
  DrawStream rng(41, StreamPurpose::Generic, 0, 0, 0);
  agents.push_back(random_agent(rng, 2, 0.05));
  DistributedProblem dp(g, {}, std::move(agents));

  double dev = equivalence_check(dp, zero_states(dp), 60, 17);
  CHECK(dev == 0.0);  // identical arithmetic, not merely close
}

TEST_CASE("per-agent rounds match the stacked solver on random problems") {
  for (std::uint32_t inst = 0; inst < 3; ++inst) {
    DrawStream rng(500 + inst, StreamPurpose::Generic, inst, 0, 0);
    Graph g(3, {{0, 1}, {1, 2}});
    std::vector<int> dims{2, 1, 2};
    std::vector<AgentProblem> agents;
    for (int i = 0; i < 3; ++i)
      agents.push_back(random_agent(rng, dims[static_cast<std::size_t>(i)], 0.05));

    std::vector<EdgeConstraint> cons;
    cons.push_back({random_row(rng, 2), random_row(rng, 1),
                    {2.0 * rng.uniform() - 1.0}, 0.4});
    cons.push_back({random_row(rng, 1), random_row(rng, 2),
                    {2.0 * rng.uniform() - 1.0}, 0.4});
    DistributedProblem dp(g, std::move(cons), std::move(agents));

    double dev = equivalence_check(dp, zero_states(dp), 30, 900 + inst);
    CHECK(dev <= 1e-10);
  }
}

TEST_CASE("agents only read their graph neighbors") {
  Graph g(3, {{0, 1}, {1, 2}});
  std::vector<EdgeConstraint> cons{{row({1.0}), row({-1.0}), {0.0}, 0.4},
                                   {row({1.0}), row({-1.0}), {0.0}, 0.4}};
  std::vector<AgentProblem> agents;
  for (int i = 0; i < 3; ++i) agents.push_back(quadratic_agent(1.0 + i, 0.4, 0.4));
  DistributedProblem dp(g, std::move(cons), std::move(agents));

  std::vector<std::pair<int, int>> log;
  distributed_step(dp, zero_states(dp), 0, 123, &log);
  std::vector<std::pair<int, int>> want{{0, 1}, {1, 0}, {1, 2}, {2, 1}};
  CHECK(log == want);
}

TEST_CASE("solve trace grid includes the final round") {
  Graph g(2, {{0, 1}});
  std::vector<EdgeConstraint> cons{{row({1.0}), row({-1.0}), {0.0}, 0.4}};
  std::vector<AgentProblem> agents;
  agents.push_back(quadratic_agent(1.0, 0.4, 0.4));
  agents.push_back(quadratic_agent(2.0, 0.4, 0.4));
  DistributedProblem dp(g, std::move(cons), std::move(agents));

  DistributedTrace t = distributed_solve(dp, zero_states(dp), 10, 3, 4);
  REQUIRE(t.records.size() == 4);
  CHECK(t.records[0].iter == 0);
  CHECK(t.records[1].iter == 4);
  CHECK(t.records[2].iter == 8);
  CHECK(t.records[3].iter == 9);
  CHECK_THROWS_AS(distributed_solve(dp, zero_states(dp), 10, 3, 0), InvalidInputError);
}

TEST_CASE("mismatched batch schedules cannot be stacked") {
  Graph g(2, {{0, 1}});
  std::vector<EdgeConstraint> cons{{row({1.0}), row({-1.0}), {0.0}, 0.4}};
  std::vector<AgentProblem> agents;
  agents.push_back(quadratic_agent(1.0, 0.4, 0.4));
  AgentProblem other = quadratic_agent(2.0, 0.4, 0.4);
  other.smooth = OracleConfig(other.smooth.model, BatchSchedule::geometric(2.0, 2.0),
                              other.smooth.reference_point);
  agents.push_back(std::move(other));
  DistributedProblem dp(g, std::move(cons), std::move(agents));
  CHECK_THROWS_AS(stack_problem(dp), ConfigError);
}

TEST_CASE("problem construction cross-checks every dimension") {
  Graph g(2, {{0, 1}});
  std::vector<AgentProblem> agents;
  agents.push_back(quadratic_agent(1.0, 0.4, 0.4));
  agents.push_back(quadratic_agent(2.0, 0.4, 0.4));

  // wrong number of constraints
  CHECK_THROWS_AS(DistributedProblem(g, {}, agents), DimensionError);
  // edge matrix width disagrees with the agent dimension
  std::vector<EdgeConstraint> wide{{row({1.0, 2.0}), row({-1.0}), {0.0}, 0.4}};
  CHECK_THROWS_AS(DistributedProblem(g, wide, agents), DimensionError);
  // empty edge constraint
  std::vector<EdgeConstraint> empty{{Matrix(0, 1), Matrix(0, 1), {}, 0.4}};
  CHECK_THROWS_AS(DistributedProblem(g, empty, agents), DimensionError);
  // nonpositive edge step
  std::vector<EdgeConstraint> bad_tau{{row({1.0}), row({-1.0}), {0.0}, 0.0}};
  CHECK_THROWS_AS(DistributedProblem(g, bad_tau, agents), InvalidInputError);
}
