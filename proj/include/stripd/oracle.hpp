#ifndef STRIPD_ORACLE_HPP
#define STRIPD_ORACLE_HPP

#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include "stripd/dense.hpp"
#include "stripd/rng.hpp"

namespace stripd {

class SmoothModel;

// f(x) = 1/2 x^T H x + c^T x, noise-free.
struct DeterministicQuadraticModel {
  Matrix hess;
  Vec linear;
};

// Per-sample F(x, xi) = sum_i q_i(xi) x_i^2 + p_i x_i with independent
// q_i(xi) ~ Normal(q_mean_i, q_std_i^2). Mean objective is the diagonal
// quadratic with coefficients q_mean.
struct RandomCoefficientQuadraticModel {
  Vec q_mean;
  Vec q_std;
  Vec p;
};

// Base model plus independent Normal(0, noise_std^2) on every gradient entry.
struct AdditiveGaussianModel {
  std::shared_ptr<const SmoothModel> base;
  double noise_std;
};

// Base model plus scale * M * u with Pareto magnitude M (tail exponent
// tail_index > 2) and u uniform on the unit sphere. Zero mean, heavy tails.
struct HeavyTailAdditiveModel {
  std::shared_ptr<const SmoothModel> base;
  double tail_index;
  double scale;
};

// Concatenation of per-agent models over consecutive slices. Child i draws
// from the stream tagged with agent id i, so a stacked evaluation consumes
// exactly the draws the individual agents would.
struct StackedAgentsModel {
  std::vector<SmoothModel> parts;
};

class SmoothModel {
 public:
  using Node =
      std::variant<DeterministicQuadraticModel, RandomCoefficientQuadraticModel,
                   AdditiveGaussianModel, HeavyTailAdditiveModel, StackedAgentsModel>;

  static SmoothModel deterministic_quadratic(Matrix hess, Vec linear);
  static SmoothModel random_coefficient_quadratic(Vec q_mean, Vec q_std, Vec p);
  static SmoothModel additive_gaussian(SmoothModel base, double noise_std);
  static SmoothModel heavy_tail(SmoothModel base, double tail_index, double scale);
  // Stacking is flat: parts must not themselves be stacked.
  static SmoothModel stacked(std::vector<SmoothModel> parts);

  int dim() const { return dim_; }
  // Smoothness modulus of the mean objective in the Euclidean metric.
  double beta_f() const { return beta_f_; }
  SmoothModel with_beta(double beta) const;

  // True when every sample gradient equals the mean gradient exactly.
  bool deterministic() const { return deterministic_; }

  const Node& node() const { return *node_; }

 private:
  SmoothModel(int dim, double beta, bool det, Node node);

  int dim_ = 0;
  double beta_f_ = 0.0;
  bool deterministic_ = true;
  std::shared_ptr<const Node> node_;
};

Vec gradient_exact(const SmoothModel& m, const Vec& x);

// One per-sample stochastic gradient at counter address
// (key, purpose, agent, iteration k, sample). Wrapper kinds consume draws
// sequentially from the leaf's stream; stacked children switch to their own
// agent-tagged streams.
Vec sample_gradient(const SmoothModel& m, const Vec& x, std::uint64_t trial_key,
                    StreamPurpose purpose, std::uint32_t agent_tag, std::uint64_t k,
                    std::uint32_t sample);

// Mini-batch growth schedules.
struct PolynomialSchedule {
  double n0;
  double exponent;  // > 1 so that sum 1/N_k converges
};
struct GeometricSchedule {
  double n0;
  double ratio;  // > 1
};
struct ConstantSchedule {
  std::int64_t n;
};

class BatchSchedule {
 public:
  using Node = std::variant<PolynomialSchedule, GeometricSchedule, ConstantSchedule>;

  static BatchSchedule polynomial(double n0, double exponent);
  static BatchSchedule geometric(double n0, double ratio);
  // Constant batches keep the gradient variance from vanishing, which voids
  // the convergence guarantee; callers must acknowledge that explicitly.
  static BatchSchedule constant(std::int64_t n, bool accept_nonvanishing_variance);

  const Node& node() const { return node_; }
  bool summable() const;

 private:
  explicit BatchSchedule(Node node) : node_(std::move(node)) {}
  Node node_;
};

std::int64_t batch_size(const BatchSchedule& s, std::uint64_t k);

// Closed-form upper bound for sum_{k<horizon} 1/N_k (infinite-horizon bound
// for the growing schedules).
double inverse_batch_sum_bound(const BatchSchedule& s);

struct OracleConfig {
  OracleConfig(SmoothModel model, BatchSchedule schedule, Vec reference_point);

  SmoothModel model;
  BatchSchedule schedule;
  // Linear growth bound on the per-sample deviation: the root mean square of
  // ||grad_sample - grad_exact||^2 at x stays below
  // sigma0 + sigma1 * ||x - reference_point||.
  double sigma0 = 0.0;
  double sigma1 = 1e-9;
  Vec reference_point;
  std::uint32_t agent_tag = 0;
};

struct MinibatchResult {
  Vec estimate;
  std::int64_t batch;
};

// grad_exact(x) + (1/N_k) sum_s (grad_sample(x) - grad_exact(x)).
MinibatchResult minibatch_gradient(const OracleConfig& cfg, const Vec& x,
                                   std::uint64_t k, std::uint64_t trial_key);

// Root mean square deviation over `num_samples` probe draws at x (its own
// stream purpose; never collides with solve draws).
double estimate_sigma(const OracleConfig& cfg, const Vec& x, int num_samples,
                      std::uint64_t trial_key);

// Default (sigma0, sigma1) for the linear deviation bound at the given
// anchor.
std::pair<double, double> default_noise_bound(const SmoothModel& m, const Vec& anchor);

// Per-iteration noise contribution to the descent inequality:
// a_k = 2 sigma0^2 gamma_max / N_k, b_k = 2 sigma1^2 gamma_max /
// (gamma_min N_k).
std::pair<double, double> variance_budget(const OracleConfig& cfg, std::uint64_t k,
                                          double gamma_max, double gamma_min);

}  // namespace stripd

#endif  // STRIPD_ORACLE_HPP
