#ifndef STRIPD_BLOCK_HPP
#define STRIPD_BLOCK_HPP

#include "stripd/solver.hpp"

namespace stripd {

struct IndexRange {
  int begin;
  int end;  // half-open

  int len() const { return end - begin; }
};

// Partition of the primal-dual space into consecutive coordinate blocks, each
// with an independent Bernoulli activation probability. In single_block mode
// exactly one block activates per iteration and the probabilities form a
// distribution.
struct BlockPartition {
  struct Block {
    IndexRange dual;
    IndexRange primal;
  };
  std::vector<Block> blocks;
  Vec probs;
  bool single_block = false;
};

void validate_partition(const BlockPartition& bp, int dual_dim, int primal_dim);

// The randomized update only equals the per-block triangular maps when the
// problem decomposes along the partition: block-diagonal coupling map,
// block-aligned step metrics and smoothness metric, separable g and h.
void validate_block_structure(const CompositeProblem& p, const SolverConfig& cfg,
                              const BlockPartition& bp);

struct BlockStepResult {
  PrimalDualState next;
  std::vector<char> activated;
  std::int64_t batch;
};

// Computes the full-space triangular update once (identical code path and
// draw addresses as the unpartitioned step) and overwrites the activated
// blocks only. Under a validated block structure this equals running each
// activated block's own map.
BlockStepResult block_step(const CompositeProblem& p, const SolverConfig& cfg,
                           const BlockPartition& bp, const PrimalDualState& z,
                           std::uint64_t k, std::uint64_t trial_key);

// Natural per-block metrics blockdiag(Sigma^-1|_i, Gamma^-1|_i).
std::vector<SpdOperator> block_s_metrics(const SolverConfig& cfg,
                                         const BlockPartition& bp);

// sqrt(sum_i (1/p_i) ||(y_i, x_i)||^2_{S_i}); the norm the randomized
// iteration is quasi-nonexpansive in.
double weighted_product_norm(const BlockPartition& bp,
                             const std::vector<SpdOperator>& s_blocks,
                             const PrimalDualState& z);

struct BlockRecord {
  std::int64_t iter;
  double residual;       // full-map fixed-point residual at the exact gradient
  double weighted_dist;  // product-norm distance to the reference; NaN without one
  int activated;
};

struct BlockTrace {
  std::vector<BlockRecord> records;
  PrimalDualState final_state;
  std::int64_t iterations_run = 0;
};

BlockTrace block_solve(const CompositeProblem& p, const SolverConfig& cfg,
                       const BlockPartition& bp, const PrimalDualState& z0,
                       const PrimalDualState* reference = nullptr);

}  // namespace stripd

#endif  // STRIPD_BLOCK_HPP
