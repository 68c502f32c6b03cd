#ifndef STRIPD_SOLVER_HPP
#define STRIPD_SOLVER_HPP

#include <optional>

#include "stripd/metric.hpp"
#include "stripd/oracle.hpp"
#include "stripd/prox.hpp"

namespace stripd {

// min_x f(x) + g(x) + h(Lx) with f smooth (handled by the stochastic oracle),
// g and h proximable, L linear. q_metric is the metric in which f's
// smoothness modulus beta_f is measured.
struct CompositeProblem {
  CompositeProblem(OracleConfig smooth, ProximableFunction g, ProximableFunction h,
                   LinearMap l, SpdOperator q_metric);

  OracleConfig smooth;
  ProximableFunction g;
  ProximableFunction h;
  LinearMap l;
  SpdOperator q_metric;
};

// Which dual vector enters the primal update: the freshly averaged dual (the
// main iteration) or the previous one (the variant printed with the
// block-coordinate extension).
enum class DualVariant { Averaged, Plain };

struct SolverConfig {
  SpdOperator sigma;  // dual step metric on R^q
  SpdOperator gamma;  // primal step metric on R^p
  std::int64_t max_iters = 1000;
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;
  double stop_residual = 0.0;  // 0 disables early stopping
  std::int64_t record_every = 1;
  bool record_states = false;
  bool skip_step_validation = false;
  DualVariant dual_in_x_update = DualVariant::Averaged;
};

struct PrimalDualState {
  Vec y;
  Vec x;
};

struct TripdResult {
  PrimalDualState next;
  Vec y_hat;
};

// One deterministic triangular step at the supplied gradient vector:
//   y_hat  = prox^{Sigma^-1}_{h*}(y + Sigma L x)
//   x_next = prox^{Gamma^-1}_{g}(x - Gamma grad - Gamma L^T y_hat)
//   y_next = y_hat + Sigma L (x_next - x)
TripdResult tripd_apply(const CompositeProblem& p, const SolverConfig& cfg,
                        const PrimalDualState& z, const Vec& gradient);

struct StepResult {
  PrimalDualState next;
  Vec y_hat;
  std::int64_t batch;
};

// tripd_apply at the mini-batch gradient estimate for iteration k.
StepResult stripd_step(const CompositeProblem& p, const SolverConfig& cfg,
                       const PrimalDualState& z, std::uint64_t k,
                       std::uint64_t trial_key);

struct StepValidation {
  bool ok;
  // min eig(Gamma^-1 - (beta_f/2) Q) - max eig(Sigma) * ||L||^2; the step
  // condition holds strictly iff margin > 0.
  double margin;
  // Smallest eigenvalue of 2U - S, the contraction certificate the margin
  // implies.
  double lambda_min_2u_minus_s;
};

StepValidation validate_step_sizes(const CompositeProblem& p, const SolverConfig& cfg);

struct DefaultSteps {
  double sigma;
  double gamma;
};

// Scalar step sizes satisfying the strict step condition with the given
// safety factor in (0, 1): sigma = 1/max(||L||, 1), gamma = safety /
// (beta_f/2 + sigma ||L||^2); the degenerate smooth-free, coupling-free case
// returns (1, safety).
DefaultSteps default_step_sizes(double beta_f, double l_norm, double safety = 0.9);

struct IterationRecord {
  std::int64_t iter;
  // ||T(z_k) - z_k|| at the exact mean gradient, Euclidean on (y, x).
  double residual;
  std::int64_t batch;
  // ||z_k - z_ref||_S with S = blockdiag(Sigma^-1, Gamma^-1); NaN when no
  // reference was supplied.
  double s_dist_to_ref;
};

struct SolveTrace {
  std::vector<IterationRecord> records;
  // Populated when record_states is set, aligned with records.
  std::vector<PrimalDualState> states;
  PrimalDualState final_state;
  std::int64_t iterations_run = 0;
};

SolveTrace solve(const CompositeProblem& p, const SolverConfig& cfg,
                 const PrimalDualState& z0,
                 const PrimalDualState* reference = nullptr);

// Quasi-monotonicity audit of ||z_k - z*||_S^2 along recorded states.
// allowances[j] = (a, b) permits V_{j+1} <= (1 + b) V_j + a + tol; an empty
// list allows no noise slack.
struct FejerReport {
  bool monotone;
  double max_excess;
  std::vector<double> excesses;
};

FejerReport fejer_check(const SolveTrace& trace, const PrimalDualState& reference,
                        const SolverConfig& cfg,
                        const std::vector<std::pair<double, double>>& allowances = {},
                        double tol = 1e-9);

// Unit-metric fixed-point residual of the optimality system, independent of
// the step metrics:
//   sqrt(||x - prox_g(x - grad f(x) - L^T y)||^2 + ||y - prox_{h*}(y + L x)||^2)
double kkt_residual(const CompositeProblem& p, const PrimalDualState& z);

}  // namespace stripd

#endif  // STRIPD_SOLVER_HPP
