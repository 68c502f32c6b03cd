#include "stripd/solver.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "stripd/errors.hpp"

namespace stripd {

CompositeProblem::CompositeProblem(OracleConfig smooth_in, ProximableFunction g_in,
                                   ProximableFunction h_in, LinearMap l_in,
                                   SpdOperator q_metric_in)
    : smooth(std::move(smooth_in)),
      g(std::move(g_in)),
      h(std::move(h_in)),
      l(std::move(l_in)),
      q_metric(std::move(q_metric_in)) {
  int p = l.cols();
  int q = l.rows();
  if (smooth.model.dim() != p)
    throw DimensionError("CompositeProblem: smooth term dimension mismatch");
  if (g.dim() != p) throw DimensionError("CompositeProblem: g dimension mismatch");
  if (h.dim() != q) throw DimensionError("CompositeProblem: h dimension mismatch");
  if (q_metric.dim() != p)
    throw DimensionError("CompositeProblem: smoothness metric dimension mismatch");
}

namespace {

void check_state_dims(const CompositeProblem& p, const SolverConfig& cfg,
                      const PrimalDualState& z) {
  if (static_cast<int>(z.x.size()) != p.l.cols() ||
      static_cast<int>(z.y.size()) != p.l.rows())
    throw DimensionError("solver: state dimension mismatch");
  if (cfg.sigma.dim() != p.l.rows() || cfg.gamma.dim() != p.l.cols())
    throw DimensionError("solver: step metric dimension mismatch");
}

}  // namespace

TripdResult tripd_apply(const CompositeProblem& p, const SolverConfig& cfg,
                        const PrimalDualState& z, const Vec& gradient) {
  check_state_dims(p, cfg, z);
  if (gradient.size() != z.x.size())
    throw DimensionError("tripd_apply: gradient dimension mismatch");

  Vec t = add(z.y, cfg.sigma.apply(p.l.mul(z.x)));
  Vec y_hat = prox_conjugate(p.h, cfg.sigma.inverse(), t);

  const Vec& dual_for_x =
      (cfg.dual_in_x_update == DualVariant::Averaged) ? y_hat : z.y;
  Vec u = sub(z.x, cfg.gamma.apply(gradient));
  u = sub(u, cfg.gamma.apply(p.l.tmul(dual_for_x)));
  Vec x_next = prox(p.g, cfg.gamma.inverse(), u);

  Vec d = sub(x_next, z.x);
  Vec y_next = add(y_hat, cfg.sigma.apply(p.l.mul(d)));
  return {{std::move(y_next), std::move(x_next)}, std::move(y_hat)};
}

StepResult stripd_step(const CompositeProblem& p, const SolverConfig& cfg,
                       const PrimalDualState& z, std::uint64_t k,
                       std::uint64_t trial_key) {
  MinibatchResult mb = minibatch_gradient(p.smooth, z.x, k, trial_key);
  TripdResult r = tripd_apply(p, cfg, z, mb.estimate);
  return {std::move(r.next), std::move(r.y_hat), mb.batch};
}

StepValidation validate_step_sizes(const CompositeProblem& p, const SolverConfig& cfg) {
  if (cfg.sigma.dim() != p.l.rows() || cfg.gamma.dim() != p.l.cols())
    throw DimensionError("validate_step_sizes: step metric dimension mismatch");

  double beta = p.smooth.model.beta_f();
  Matrix a = cfg.gamma.inverse().materialize() - (beta / 2.0) * p.q_metric.materialize();
  double margin =
      extremal_eigs(a).first - cfg.sigma.eig_max() * p.l.op_norm() * p.l.op_norm();

  AnalysisMatrices am = assemble_analysis_matrices({cfg.sigma, cfg.gamma}, p.l, beta,
                                                   p.q_metric);
  Matrix two_u_minus_s = 2.0 * am.u - am.s;
  double lam = extremal_eigs(two_u_minus_s).first;
  return {margin > 0.0, margin, lam};
}

DefaultSteps default_step_sizes(double beta_f, double l_norm, double safety) {
  if (!(beta_f >= 0.0)) throw InvalidInputError("default_step_sizes: beta_f negative");
  if (!(l_norm >= 0.0)) throw InvalidInputError("default_step_sizes: l_norm negative");
  if (!(safety > 0.0 && safety < 1.0))
    throw InvalidInputError("default_step_sizes: safety factor must lie in (0, 1)");
  double sigma = 1.0 / std::max(l_norm, 1.0);
  double denom = beta_f / 2.0 + sigma * l_norm * l_norm;
  if (denom == 0.0) return {1.0, safety};
  return {sigma, safety / denom};
}

namespace {

double s_distance(const SolverConfig& cfg, const PrimalDualState& z,
                  const PrimalDualState& ref) {
  Vec dy = sub(z.y, ref.y);
  Vec dx = sub(z.x, ref.x);
  double v = cfg.sigma.inverse().quad_form(dy) + cfg.gamma.inverse().quad_form(dx);
  return std::sqrt(std::max(v, 0.0));
}

double fixed_point_residual(const CompositeProblem& p, const SolverConfig& cfg,
                            const PrimalDualState& z) {
  Vec exact = gradient_exact(p.smooth.model, z.x);
  TripdResult r = tripd_apply(p, cfg, z, exact);
  return std::sqrt(nrm2_sq(sub(r.next.y, z.y)) + nrm2_sq(sub(r.next.x, z.x)));
}

}  // namespace

SolveTrace solve(const CompositeProblem& p, const SolverConfig& cfg,
                 const PrimalDualState& z0, const PrimalDualState* reference) {
  check_state_dims(p, cfg, z0);
  if (cfg.max_iters < 0) throw InvalidInputError("solve: max_iters negative");
  if (cfg.record_every < 1) throw InvalidInputError("solve: record_every must be >= 1");

  if (!cfg.skip_step_validation) {
    StepValidation v = validate_step_sizes(p, cfg);
    if (!v.ok)
      throw StepSizeError("solve: step-size condition violated (margin " +
                          std::to_string(v.margin) + ")");
  }

  std::uint64_t trial_key = derive_trial_key(cfg.seed, cfg.trial);
  SolveTrace trace;
  PrimalDualState z = z0;

  std::int64_t k = 0;
  for (;; ++k) {
    bool on_grid = (k % cfg.record_every == 0) || k == cfg.max_iters;
    double residual = std::numeric_limits<double>::quiet_NaN();
    if (on_grid) {
      residual = fixed_point_residual(p, cfg, z);
      double sdist = reference ? s_distance(cfg, z, *reference)
                               : std::numeric_limits<double>::quiet_NaN();
      trace.records.push_back(
          {k, residual, batch_size(p.smooth.schedule, static_cast<std::uint64_t>(k)),
           sdist});
      if (cfg.record_states) trace.states.push_back(z);
    }
    if (k == cfg.max_iters) break;
    if (on_grid && cfg.stop_residual > 0.0 && residual <= cfg.stop_residual) break;

    StepResult s = stripd_step(p, cfg, z, static_cast<std::uint64_t>(k), trial_key);
    z = std::move(s.next);
    if (!all_finite(z.y) || !all_finite(z.x))
      throw DivergenceError("solve: non-finite iterate at iteration " +
                                std::to_string(k + 1),
                            k + 1);
  }

  trace.final_state = std::move(z);
  trace.iterations_run = k;
  return trace;
}

FejerReport fejer_check(const SolveTrace& trace, const PrimalDualState& reference,
                        const SolverConfig& cfg,
                        const std::vector<std::pair<double, double>>& allowances,
                        double tol) {
  if (trace.states.size() < 2)
    throw InvalidInputError("fejer_check: needs a trace recorded with states");

  FejerReport report{true, 0.0, {}};
  double prev = std::pow(s_distance(cfg, trace.states[0], reference), 2);
  for (std::size_t j = 1; j < trace.states.size(); ++j) {
    double cur = std::pow(s_distance(cfg, trace.states[j], reference), 2);
    double a = 0.0, b = 0.0;
    if (!allowances.empty()) {
      std::size_t idx = std::min(j - 1, allowances.size() - 1);
      a = allowances[idx].first;
      b = allowances[idx].second;
    }
    double excess = cur - (1.0 + b) * prev - a;
    report.excesses.push_back(excess);
    if (excess > tol * std::max(1.0, prev)) {
      report.monotone = false;
      report.max_excess = std::max(report.max_excess, excess);
    }
    prev = cur;
  }
  return report;
}

double kkt_residual(const CompositeProblem& p, const PrimalDualState& z) {
  if (static_cast<int>(z.x.size()) != p.l.cols() ||
      static_cast<int>(z.y.size()) != p.l.rows())
    throw DimensionError("kkt_residual: state dimension mismatch");
  Vec grad = gradient_exact(p.smooth.model, z.x);
  SpdOperator unit_p = SpdOperator::scalar_multiple(p.l.cols(), 1.0);
  SpdOperator unit_d = SpdOperator::scalar_multiple(p.l.rows(), 1.0);

  Vec arg_p = sub(z.x, add(grad, p.l.tmul(z.y)));
  Vec rp = sub(z.x, prox(p.g, unit_p, arg_p));

  Vec arg_d = add(z.y, p.l.mul(z.x));
  Vec rd = sub(z.y, prox_conjugate(p.h, unit_d, arg_d));

  return std::sqrt(nrm2_sq(rp) + nrm2_sq(rd));
}

}  // namespace stripd
