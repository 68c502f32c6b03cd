#ifndef STRIPD_DISPATCH_HPP
#define STRIPD_DISPATCH_HPP

#include "stripd/solver.hpp"

namespace stripd {

// Economic dispatch: m generators with quadratic costs, box limits and one
// aggregate balance constraint sum(x) = sum(demand).
struct DispatchInstance {
  Vec q_mean;
  Vec p;
  Vec lo;
  Vec hi;
  Vec demand;

  int generators() const { return static_cast<int>(q_mean.size()); }
  double total_demand() const;
};

// lo <= hi and sum(lo) <= sum(demand) <= sum(hi); throws ConfigError.
void validate_instance(const DispatchInstance& inst);

// The five-generator benchmark instance.
DispatchInstance builtin_dispatch_instance();

// Composite form: random-coefficient quadratic cost, box indicator, and the
// balance constraint through the 1 x m all-ones map. literal_coupling instead
// pins every generator to its own demand entry (identity map, point
// indicator), the strict per-coordinate reading kept for comparison.
CompositeProblem build_dispatch(const DispatchInstance& inst, const Vec& q_std,
                                const BatchSchedule& schedule,
                                bool literal_coupling = false);

struct DispatchReference {
  Vec x_star;
  double lambda_star;
  double cost_star;
};

// Bisection on the balance multiplier: x_i(lambda) = clamp((lambda - p_i) /
// (2 q_i), lo_i, hi_i) until |sum(x) - sum(demand)| < 1e-12.
DispatchReference dispatch_reference(const DispatchInstance& inst);

// Exhaustive enumeration over the 3^m lower/free/upper patterns (m <= 6);
// the independent cross-check for the bisection path.
DispatchReference dispatch_reference_enumerated(const DispatchInstance& inst);

// Exact mean cost sum q_i x_i^2 + p_i x_i.
double dispatch_cost(const DispatchInstance& inst, const Vec& x);

// |sum(x) - sum(demand)| plus the total box infeasibility.
double dispatch_violation(const DispatchInstance& inst, const Vec& x);

}  // namespace stripd

#endif  // STRIPD_DISPATCH_HPP
