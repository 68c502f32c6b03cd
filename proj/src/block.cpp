#include "stripd/block.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "stripd/errors.hpp"

namespace stripd {

void validate_partition(const BlockPartition& bp, int dual_dim, int primal_dim) {
  if (bp.blocks.empty()) throw InvalidInputError("block partition: no blocks");
  if (bp.probs.size() != bp.blocks.size())
    throw InvalidInputError("block partition: one probability per block required");

  int dual_cursor = 0, primal_cursor = 0;
  for (const auto& b : bp.blocks) {
    if (b.dual.begin != dual_cursor || b.primal.begin != primal_cursor)
      throw InvalidInputError("block partition: blocks must tile consecutively");
    if (b.dual.len() < 0 || b.primal.len() < 0 || b.dual.len() + b.primal.len() == 0)
      throw InvalidInputError("block partition: empty block");
    dual_cursor = b.dual.end;
    primal_cursor = b.primal.end;
  }
  if (dual_cursor != dual_dim || primal_cursor != primal_dim)
    throw InvalidInputError("block partition: blocks must cover both spaces");

  double prob_sum = 0.0;
  for (double p : bp.probs) {
    if (!(p > 0.0 && p <= 1.0))
      throw InvalidInputError("block partition: probabilities must lie in (0, 1]");
    prob_sum += p;
  }
  if (bp.single_block && std::fabs(prob_sum - 1.0) > 1e-12)
    throw InvalidInputError(
        "block partition: single-block mode needs probabilities summing to 1");
}

namespace {

bool metric_aligned(const SpdOperator& q, const std::vector<IndexRange>& ranges) {
  if (q.componentwise()) return true;
  Matrix m = q.materialize();
  for (const auto& r : ranges)
    for (int i = r.begin; i < r.end; ++i)
      for (int j = 0; j < m.cols; ++j) {
        if (j >= r.begin && j < r.end) continue;
        if (m(i, j) != 0.0) return false;
      }
  return true;
}

}  // namespace

void validate_block_structure(const CompositeProblem& p, const SolverConfig& cfg,
                              const BlockPartition& bp) {
  validate_partition(bp, p.l.rows(), p.l.cols());

  const Matrix& l = p.l.entries();
  for (std::size_t bi = 0; bi < bp.blocks.size(); ++bi) {
    const auto& b = bp.blocks[bi];
    for (int r = b.dual.begin; r < b.dual.end; ++r)
      for (int c = 0; c < l.cols; ++c) {
        if (c >= b.primal.begin && c < b.primal.end) continue;
        if (l(r, c) != 0.0)
          throw InvalidInputError("block structure: coupling map crosses block " +
                                  std::to_string(bi));
      }
  }

  std::vector<IndexRange> dual_ranges, primal_ranges;
  std::vector<int> dual_sizes, primal_sizes;
  for (const auto& b : bp.blocks) {
    dual_ranges.push_back(b.dual);
    primal_ranges.push_back(b.primal);
    if (b.dual.len() > 0) dual_sizes.push_back(b.dual.len());
    if (b.primal.len() > 0) primal_sizes.push_back(b.primal.len());
  }
  if (!metric_aligned(cfg.sigma, dual_ranges))
    throw InvalidInputError("block structure: dual step metric couples blocks");
  if (!metric_aligned(cfg.gamma, primal_ranges))
    throw InvalidInputError("block structure: primal step metric couples blocks");
  if (!metric_aligned(p.q_metric, primal_ranges))
    throw InvalidInputError("block structure: smoothness metric couples blocks");

  if (!try_split(p.g, primal_sizes))
    throw InvalidInputError("block structure: g does not separate along the partition");
  if (!try_split(p.h, dual_sizes))
    throw InvalidInputError("block structure: h does not separate along the partition");
}

BlockStepResult block_step(const CompositeProblem& p, const SolverConfig& cfg,
                           const BlockPartition& bp, const PrimalDualState& z,
                           std::uint64_t k, std::uint64_t trial_key) {
  MinibatchResult mb = minibatch_gradient(p.smooth, z.x, k, trial_key);
  TripdResult full = tripd_apply(p, cfg, z, mb.estimate);

  std::size_t m = bp.blocks.size();
  std::vector<char> active(m, 0);
  DrawStream ds(trial_key, StreamPurpose::Activation, 0, k, 0);
  if (bp.single_block) {
    double u = ds.uniform();
    double acc = 0.0;
    std::size_t pick = m - 1;  // guard against round-off at the top end
    for (std::size_t i = 0; i < m; ++i) {
      acc += bp.probs[i];
      if (u < acc) {
        pick = i;
        break;
      }
    }
    active[pick] = 1;
  } else {
    for (std::size_t i = 0; i < m; ++i) active[i] = ds.uniform() < bp.probs[i] ? 1 : 0;
  }

  PrimalDualState next = z;
  for (std::size_t i = 0; i < m; ++i) {
    if (!active[i]) continue;
    const auto& b = bp.blocks[i];
    for (int r = b.dual.begin; r < b.dual.end; ++r)
      next.y[static_cast<std::size_t>(r)] = full.next.y[static_cast<std::size_t>(r)];
    for (int c = b.primal.begin; c < b.primal.end; ++c)
      next.x[static_cast<std::size_t>(c)] = full.next.x[static_cast<std::size_t>(c)];
  }
  return {std::move(next), std::move(active), mb.batch};
}

std::vector<SpdOperator> block_s_metrics(const SolverConfig& cfg,
                                         const BlockPartition& bp) {
  std::vector<SpdOperator> out;
  SpdOperator sigma_inv = cfg.sigma.inverse();
  SpdOperator gamma_inv = cfg.gamma.inverse();
  Matrix si, gi;
  if (!sigma_inv.componentwise()) si = sigma_inv.materialize();
  if (!gamma_inv.componentwise()) gi = gamma_inv.materialize();

  for (const auto& b : bp.blocks) {
    int n = b.dual.len() + b.primal.len();
    if (sigma_inv.componentwise() && gamma_inv.componentwise()) {
      Vec d(static_cast<std::size_t>(n));
      int at = 0;
      for (int r = b.dual.begin; r < b.dual.end; ++r)
        d[static_cast<std::size_t>(at++)] = sigma_inv.diag_at(r);
      for (int c = b.primal.begin; c < b.primal.end; ++c)
        d[static_cast<std::size_t>(at++)] = gamma_inv.diag_at(c);
      out.push_back(SpdOperator::diagonal(std::move(d)));
      continue;
    }
    Matrix full_s = sigma_inv.materialize();
    Matrix full_g = gamma_inv.materialize();
    Matrix blockm(n, n);
    for (int r = 0; r < b.dual.len(); ++r)
      for (int c = 0; c < b.dual.len(); ++c)
        blockm(r, c) = full_s(b.dual.begin + r, b.dual.begin + c);
    for (int r = 0; r < b.primal.len(); ++r)
      for (int c = 0; c < b.primal.len(); ++c)
        blockm(b.dual.len() + r, b.dual.len() + c) =
            full_g(b.primal.begin + r, b.primal.begin + c);
    out.push_back(SpdOperator::dense(std::move(blockm)));
  }
  return out;
}

double weighted_product_norm(const BlockPartition& bp,
                             const std::vector<SpdOperator>& s_blocks,
                             const PrimalDualState& z) {
  if (s_blocks.size() != bp.blocks.size())
    throw DimensionError("weighted_product_norm: one metric per block required");
  double total = 0.0;
  for (std::size_t i = 0; i < bp.blocks.size(); ++i) {
    const auto& b = bp.blocks[i];
    Vec zi;
    zi.reserve(static_cast<std::size_t>(b.dual.len() + b.primal.len()));
    for (int r = b.dual.begin; r < b.dual.end; ++r)
      zi.push_back(z.y[static_cast<std::size_t>(r)]);
    for (int c = b.primal.begin; c < b.primal.end; ++c)
      zi.push_back(z.x[static_cast<std::size_t>(c)]);
    total += weighted_norm_sq(s_blocks[i], zi) / bp.probs[i];
  }
  return std::sqrt(total);
}

BlockTrace block_solve(const CompositeProblem& p, const SolverConfig& cfg,
                       const BlockPartition& bp, const PrimalDualState& z0,
                       const PrimalDualState* reference) {
  validate_block_structure(p, cfg, bp);
  if (!cfg.skip_step_validation) {
    StepValidation v = validate_step_sizes(p, cfg);
    if (!v.ok)
      throw StepSizeError("block_solve: step-size condition violated (margin " +
                          std::to_string(v.margin) + ")");
  }

  std::uint64_t trial_key = derive_trial_key(cfg.seed, cfg.trial);
  std::vector<SpdOperator> s_blocks = block_s_metrics(cfg, bp);

  auto dist = [&](const PrimalDualState& z) {
    if (!reference) return std::numeric_limits<double>::quiet_NaN();
    PrimalDualState d{sub(z.y, reference->y), sub(z.x, reference->x)};
    return weighted_product_norm(bp, s_blocks, d);
  };
  auto residual = [&](const PrimalDualState& z) {
    Vec exact = gradient_exact(p.smooth.model, z.x);
    TripdResult r = tripd_apply(p, cfg, z, exact);
    return std::sqrt(nrm2_sq(sub(r.next.y, z.y)) + nrm2_sq(sub(r.next.x, z.x)));
  };

  BlockTrace trace;
  PrimalDualState z = z0;
  std::int64_t k = 0;
  for (;; ++k) {
    bool on_grid = (k % cfg.record_every == 0) || k == cfg.max_iters;
    if (on_grid) trace.records.push_back({k, residual(z), dist(z), 0});
    if (k == cfg.max_iters) break;

    BlockStepResult s = block_step(p, cfg, bp, z, static_cast<std::uint64_t>(k),
                                   trial_key);
    if (on_grid) {
      int count = 0;
      for (char c : s.activated) count += c;
      trace.records.back().activated = count;
    }
    z = std::move(s.next);
    if (!all_finite(z.y) || !all_finite(z.x))
      throw DivergenceError("block_solve: non-finite iterate at iteration " +
                                std::to_string(k + 1),
                            k + 1);
  }
  trace.final_state = std::move(z);
  trace.iterations_run = k;
  return trace;
}

}  // namespace stripd
