#include "stripd/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "stripd/errors.hpp"

namespace stripd {
namespace {

// x_i(lambda) = clamp((lambda - p_i)/(2 q_i), lo, hi). q_i == 0 degenerates to
// a step at lambda = p_i; the lower branch is taken at the breakpoint so the
// map stays monotone nondecreasing.
double generator_output(double q, double p, double lo, double hi, double lambda) {
  if (q == 0.0) return lambda > p ? hi : lo;
  double t = (lambda - p) / (2.0 * q);
  t = t > lo ? t : lo;
  return t < hi ? t : hi;
}

double total_output(const DispatchInstance& inst, double lambda) {
  double s = 0.0;
  for (int i = 0; i < inst.generators(); ++i) {
    s += generator_output(inst.q_mean[i], inst.p[i], inst.lo[i], inst.hi[i], lambda);
  }
  return s;
}

Vec outputs_at(const DispatchInstance& inst, double lambda) {
  Vec x(static_cast<std::size_t>(inst.generators()));
  for (int i = 0; i < inst.generators(); ++i) {
    x[static_cast<std::size_t>(i)] =
        generator_output(inst.q_mean[i], inst.p[i], inst.lo[i], inst.hi[i], lambda);
  }
  return x;
}

}  // namespace

double DispatchInstance::total_demand() const {
  double s = 0.0;
  for (double d : demand) s += d;
  return s;
}

void validate_instance(const DispatchInstance& inst) {
  const std::size_t m = inst.q_mean.size();
  if (m == 0) throw ConfigError("dispatch instance has no generators");
  if (inst.p.size() != m || inst.lo.size() != m || inst.hi.size() != m ||
      inst.demand.size() != m) {
    throw ConfigError("dispatch instance field lengths disagree");
  }
  double sum_lo = 0.0, sum_hi = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(inst.q_mean[i] >= 0.0)) throw ConfigError("dispatch q_mean must be >= 0");
    if (!(inst.lo[i] <= inst.hi[i])) throw ConfigError("dispatch bounds must satisfy lo <= hi");
    if (!std::isfinite(inst.lo[i]) || !std::isfinite(inst.hi[i]) ||
        !std::isfinite(inst.p[i]) || !std::isfinite(inst.demand[i])) {
      throw ConfigError("dispatch instance entries must be finite");
    }
    sum_lo += inst.lo[i];
    sum_hi += inst.hi[i];
  }
  const double total = inst.total_demand();
  if (!(sum_lo <= total && total <= sum_hi)) {
    throw ConfigError("dispatch demand is outside the aggregate capacity range");
  }
}

DispatchInstance builtin_dispatch_instance() {
  DispatchInstance inst;
  inst.q_mean = {0.094, 0.078, 0.105, 0.082, 0.074};
  inst.p = {1.22, 3.41, 2.53, 4.02, 3.17};
  inst.lo = {10.0, 8.0, 3.8, 5.4, 4.2};
  inst.hi = {80.0, 60.0, 40.0, 45.0, 18.0};
  inst.demand = {35.0, 20.0, 25.0, 30.0, 10.0};
  return inst;
}

CompositeProblem build_dispatch(const DispatchInstance& inst, const Vec& q_std,
                                const BatchSchedule& schedule,
                                bool literal_coupling) {
  validate_instance(inst);
  const int m = inst.generators();
  if (q_std.size() != inst.q_mean.size()) {
    throw ConfigError("dispatch q_std length disagrees with q_mean");
  }

  auto model = SmoothModel::random_coefficient_quadratic(inst.q_mean, q_std, inst.p);
  ProximableFunction g = ProximableFunction::box(inst.lo, inst.hi);

  LinearMap l = [&] {
    if (literal_coupling) return LinearMap(Matrix::identity(m));
    Matrix ones(1, m);
    std::fill(ones.a.begin(), ones.a.end(), 1.0);
    return LinearMap(ones);
  }();
  ProximableFunction h = literal_coupling
                             ? ProximableFunction::point(inst.demand)
                             : ProximableFunction::sum_constraint(1, inst.total_demand());

  DispatchReference ref = dispatch_reference(inst);
  if (literal_coupling) {
    for (int i = 0; i < m; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (!(inst.lo[k] <= inst.demand[k] && inst.demand[k] <= inst.hi[k])) {
        throw ConfigError("literal coupling needs every demand inside its box");
      }
    }
    ref.x_star = inst.demand;
  }
  OracleConfig oracle(std::move(model), schedule, ref.x_star);
  return CompositeProblem(std::move(oracle), std::move(g), std::move(h), std::move(l),
                          SpdOperator::scalar_multiple(m, 1.0));
}

DispatchReference dispatch_reference(const DispatchInstance& inst) {
  validate_instance(inst);
  const double target = inst.total_demand();

  // Beyond these multipliers every generator is pinned at a bound.
  double lambda_lo = std::numeric_limits<double>::infinity();
  double lambda_hi = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < inst.generators(); ++i) {
    lambda_lo = std::min(lambda_lo, inst.p[i] + 2.0 * inst.q_mean[i] * inst.lo[i]);
    lambda_hi = std::max(lambda_hi, inst.p[i] + 2.0 * inst.q_mean[i] * inst.hi[i]);
  }
  lambda_lo -= 1.0;
  lambda_hi += 1.0;

  double lambda = 0.5 * (lambda_lo + lambda_hi);
  for (int it = 0; it < 400; ++it) {
    lambda = 0.5 * (lambda_lo + lambda_hi);
    const double s = total_output(inst, lambda);
    if (std::fabs(s - target) < 1e-12) break;
    if (s < target) {
      lambda_lo = lambda;
    } else {
      lambda_hi = lambda;
    }
  }

  DispatchReference ref;
  ref.x_star = outputs_at(inst, lambda);
  ref.lambda_star = lambda;
  ref.cost_star = dispatch_cost(inst, ref.x_star);

  double sum = 0.0;
  for (double v : ref.x_star) sum += v;
  if (std::fabs(sum - target) > 1e-9) {
    throw ConfigError("dispatch bisection failed to meet the balance target");
  }
  return ref;
}

DispatchReference dispatch_reference_enumerated(const DispatchInstance& inst) {
  validate_instance(inst);
  const int m = inst.generators();
  if (m > 6) throw ConfigError("active-set enumeration supports at most 6 generators");
  const double target = inst.total_demand();

  // Pattern digits: 0 = pinned low, 1 = free, 2 = pinned high. A pattern is
  // optimal when the implied multiplier keeps free generators interior and
  // satisfies the bound inequalities of the pinned ones.
  int total_patterns = 1;
  for (int i = 0; i < m; ++i) total_patterns *= 3;

  const double slack = 1e-9;
  for (int code = 0; code < total_patterns; ++code) {
    int digits[6] = {0, 0, 0, 0, 0, 0};
    int c = code;
    for (int i = 0; i < m; ++i) {
      digits[i] = c % 3;
      c /= 3;
    }

    double pinned_sum = 0.0;
    double inv_slope = 0.0;
    double offset = 0.0;
    bool usable = true;
    for (int i = 0; i < m; ++i) {
      if (digits[i] == 0) {
        pinned_sum += inst.lo[static_cast<std::size_t>(i)];
      } else if (digits[i] == 2) {
        pinned_sum += inst.hi[static_cast<std::size_t>(i)];
      } else {
        if (inst.q_mean[static_cast<std::size_t>(i)] == 0.0) {
          usable = false;
          break;
        }
        inv_slope += 1.0 / (2.0 * inst.q_mean[static_cast<std::size_t>(i)]);
        offset += inst.p[static_cast<std::size_t>(i)] /
                  (2.0 * inst.q_mean[static_cast<std::size_t>(i)]);
      }
    }
    if (!usable) continue;

    double lambda;
    if (inv_slope > 0.0) {
      lambda = (target - pinned_sum + offset) / inv_slope;
    } else {
      if (std::fabs(pinned_sum - target) > slack) continue;
      // All pinned: any multiplier inside the consistency window works.
      double window_lo = -std::numeric_limits<double>::infinity();
      double window_hi = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double at_lo = inst.p[k] + 2.0 * inst.q_mean[k] * inst.lo[k];
        const double at_hi = inst.p[k] + 2.0 * inst.q_mean[k] * inst.hi[k];
        if (digits[i] == 0) {
          window_hi = std::min(window_hi, at_lo);
        } else {
          window_lo = std::max(window_lo, at_hi);
        }
      }
      if (window_lo > window_hi + slack) continue;
      lambda = std::clamp(0.5 * (window_lo + window_hi),
                          std::max(window_lo, -1e300), std::min(window_hi, 1e300));
    }

    Vec x(static_cast<std::size_t>(m));
    bool feasible = true;
    for (int i = 0; i < m && feasible; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double at_lo = inst.p[k] + 2.0 * inst.q_mean[k] * inst.lo[k];
      const double at_hi = inst.p[k] + 2.0 * inst.q_mean[k] * inst.hi[k];
      if (digits[i] == 0) {
        x[k] = inst.lo[k];
        feasible = lambda <= at_lo + slack;
      } else if (digits[i] == 2) {
        x[k] = inst.hi[k];
        feasible = lambda >= at_hi - slack;
      } else {
        x[k] = (lambda - inst.p[k]) / (2.0 * inst.q_mean[k]);
        feasible = x[k] >= inst.lo[k] - slack && x[k] <= inst.hi[k] + slack;
      }
    }
    if (!feasible) continue;

    double sum = 0.0;
    for (double v : x) sum += v;
    if (std::fabs(sum - target) > 1e-8) continue;

    DispatchReference ref;
    ref.x_star = std::move(x);
    ref.lambda_star = lambda;
    ref.cost_star = dispatch_cost(inst, ref.x_star);
    return ref;
  }
  throw ConfigError("active-set enumeration found no consistent bound pattern");
}

double dispatch_cost(const DispatchInstance& inst, const Vec& x) {
  if (x.size() != inst.q_mean.size()) throw DimensionError("dispatch cost point size");
  double c = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    c += inst.q_mean[i] * x[i] * x[i] + inst.p[i] * x[i];
  }
  return c;
}

double dispatch_violation(const DispatchInstance& inst, const Vec& x) {
  if (x.size() != inst.q_mean.size()) throw DimensionError("dispatch violation point size");
  double sum = 0.0;
  double box = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum += x[i];
    if (x[i] < inst.lo[i]) box += inst.lo[i] - x[i];
    if (x[i] > inst.hi[i]) box += x[i] - inst.hi[i];
  }
  return std::fabs(sum - inst.total_demand()) + box;
}

}  // namespace stripd
