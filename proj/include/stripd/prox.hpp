#ifndef STRIPD_PROX_HPP
#define STRIPD_PROX_HPP

#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "stripd/metric.hpp"

namespace stripd {

class ProximableFunction;

struct ZeroFn {};
struct BoxIndicatorFn {
  Vec lo, hi;
};
struct PointIndicatorFn {
  Vec c;
};
// {x : <normal, x> = offset}
struct AffineSetIndicatorFn {
  Vec normal;
  double offset;
};
struct L1Fn {
  double weight;
};
// {x : sum(x) = target}
struct SumConstraintIndicatorFn {
  double target;
};
// {(w1, w2) in R^l x R^l : w1 + w2 = target}; dim = 2l.
struct EdgeCouplingIndicatorFn {
  Vec target;
};
// Concatenation f(x) = sum_i f_i(x_i) over consecutive slices.
struct SeparableFn {
  std::vector<ProximableFunction> parts;
};

// Closed catalog of proximable terms. Every kind knows its prox in any
// diagonal metric; the affine-type kinds (point, affine set, sum constraint)
// also admit dense metrics.
class ProximableFunction {
 public:
  using Node = std::variant<ZeroFn, BoxIndicatorFn, PointIndicatorFn,
                            AffineSetIndicatorFn, L1Fn, SumConstraintIndicatorFn,
                            EdgeCouplingIndicatorFn, SeparableFn>;

  static ProximableFunction zero(int dim);
  static ProximableFunction box(Vec lo, Vec hi);
  static ProximableFunction point(Vec c);
  static ProximableFunction affine_set(Vec normal, double offset);
  static ProximableFunction l1(int dim, double weight);
  static ProximableFunction sum_constraint(int dim, double target);
  static ProximableFunction edge_coupling(Vec target);
  static ProximableFunction separable(std::vector<ProximableFunction> parts);

  int dim() const { return dim_; }
  const Node& node() const { return *node_; }

 private:
  ProximableFunction(int dim, Node node);

  int dim_ = 0;
  // Shared immutable payload keeps copies cheap; separable trees can nest.
  std::shared_ptr<const Node> node_;
};

// argmin_u f(u) + 1/2 ||u - x||_Q^2
Vec prox(const ProximableFunction& f, const SpdOperator& q, const Vec& x);

// prox of the convex conjugate in metric M, through the weighted Moreau
// identity: prox^M_{f*}(u) = u - M^{-1} prox^{M^{-1}}_f(M u).
Vec prox_conjugate(const ProximableFunction& f, const SpdOperator& conj_metric,
                   const Vec& u);

// Function value; indicators report 0 within `membership_tol` and +inf
// outside. Used by optimality checks, not by the solve loop.
double fn_value(const ProximableFunction& f, const Vec& x,
                double membership_tol = 1e-9);

// Splits f along consecutive slice sizes when its structure decomposes there;
// empty result otherwise.
std::optional<std::vector<ProximableFunction>> try_split(
    const ProximableFunction& f, const std::vector<int>& sizes);

}  // namespace stripd

#endif  // STRIPD_PROX_HPP
