#ifndef STRIPD_CONFIG_HPP
#define STRIPD_CONFIG_HPP

#include <optional>
#include <string>
#include <vector>

#include "stripd/block.hpp"
#include "stripd/dispatch.hpp"
#include "stripd/distributed.hpp"

namespace stripd {

enum class RunMode { Centralized, Distributed, Block };

struct ScheduleSpec {
  std::string kind = "polynomial";  // polynomial | geometric | constant
  double n0 = 1.0;
  double exponent = 1.2;
  double ratio = 2.0;
  std::int64_t n = 1;
  bool accept_nonvanishing_variance = false;

  BatchSchedule make() const;
};

// Step metric entry: absent (resolve a default), one scalar, or a diagonal.
struct StepSpec {
  bool present = false;
  bool is_scalar = true;
  double scalar = 0.0;
  Vec diagonal;

  SpdOperator make(int dim) const;
};

struct SolverSection {
  StepSpec sigma;
  StepSpec gamma;
  std::int64_t max_iters = 2000;
  double stop_residual = 0.0;
  std::int64_t record_every = 1;
  double safety = 0.9;
  std::string dual_in_x_update = "averaged";  // averaged | plain
};

struct OracleSection {
  double q_std_ratio = 0.1;
  std::optional<Vec> q_std;  // overrides the ratio when present
  ScheduleSpec schedule;
  std::optional<double> sigma0;
  std::optional<double> sigma1;
};

struct BlockRangeSpec {
  std::int64_t dual_begin = 0;
  std::int64_t dual_end = 0;
  std::int64_t primal_begin = 0;
  std::int64_t primal_end = 0;
};

struct BlockSection {
  std::vector<BlockRangeSpec> blocks;
  Vec probs;
  bool single_block = false;
};

struct EdgeSpec {
  int i = 0;
  int j = 0;
  Matrix a_ij{0, 0};
  Matrix a_ji{0, 0};
  Vec b;
  double tau = 0.5;
};

struct AgentSpec {
  Vec q_mean;
  Vec q_std;
  Vec p;
  std::optional<Vec> lo;
  std::optional<Vec> hi;
  std::optional<double> sigma;
  std::optional<double> gamma;
  std::optional<Matrix> l;
  std::string h_kind = "zero";  // zero | point | sum_constraint
  Vec h_point;
  double h_target = 0.0;
};

struct DistributedSection {
  int num_agents = 0;
  std::vector<EdgeSpec> edges;
  std::vector<AgentSpec> agents;
};

struct RunConfig {
  RunMode mode = RunMode::Centralized;
  std::optional<DispatchInstance> dispatch;
  bool literal_coupling = false;
  std::optional<BlockSection> block;
  std::optional<DistributedSection> distributed;
  SolverSection solver;
  OracleSection oracle;
  std::int64_t trials = 100;
  std::uint64_t master_seed = 7;
  std::string output_dir = "out";
};

// Strict single-document JSON. parse rejects unknown keys; serialize emits
// every field in a fixed order, so serialize(parse(s)) == s for any s that
// serialize produced.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

// Built-in dispatch benchmark configuration (all defaults).
RunConfig default_dispatch_config();

// Resolved centralized problem: explicit steps where given, defaults where
// not, with the list of fields the defaults filled.
struct BuiltCentralized {
  CompositeProblem problem;
  SolverConfig solver;
  std::optional<DispatchInstance> instance;
  std::optional<DispatchReference> reference;
  Vec q_std;
  std::vector<std::string> defaults_applied;
};

BuiltCentralized build_centralized(const RunConfig& cfg);
BlockPartition build_partition(const RunConfig& cfg);
DistributedProblem build_distributed(const RunConfig& cfg);

}  // namespace stripd

#endif  // STRIPD_CONFIG_HPP
