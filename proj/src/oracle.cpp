#include "stripd/oracle.hpp"

#include <cmath>

#include "stripd/errors.hpp"
#include "stripd/linalg.hpp"

namespace stripd {

SmoothModel::SmoothModel(int dim, double beta, bool det, Node node)
    : dim_(dim),
      beta_f_(beta),
      deterministic_(det),
      node_(std::make_shared<const Node>(std::move(node))) {
  if (dim_ <= 0) throw DimensionError("SmoothModel: dimension must be positive");
  if (!(beta_f_ >= 0.0)) throw InvalidInputError("SmoothModel: beta_f must be nonnegative");
}

SmoothModel SmoothModel::deterministic_quadratic(Matrix hess, Vec linear) {
  if (!hess.is_square() || hess.rows != static_cast<int>(linear.size()))
    throw DimensionError("deterministic_quadratic: shape mismatch");
  double scale = std::max(hess.max_abs(), 1e-300);
  if (hess.max_asymmetry() > 1e-12 * scale)
    throw InvalidInputError("deterministic_quadratic: Hessian must be symmetric");
  auto [emin, emax] = symmetric_extremal_eigenvalues(hess);
  if (emin < -1e-9 * std::max(1.0, std::fabs(emax)))
    throw InvalidInputError("deterministic_quadratic: Hessian must be positive semidefinite");
  int dim = hess.rows;
  return SmoothModel(dim, std::max(emax, 0.0), true,
                     DeterministicQuadraticModel{std::move(hess), std::move(linear)});
}

SmoothModel SmoothModel::random_coefficient_quadratic(Vec q_mean, Vec q_std, Vec p) {
  if (q_mean.empty() || q_mean.size() != q_std.size() || q_mean.size() != p.size())
    throw DimensionError("random_coefficient_quadratic: shape mismatch");
  double qmax = 0.0;
  bool det = true;
  for (std::size_t i = 0; i < q_mean.size(); ++i) {
    if (!(q_mean[i] >= 0.0))
      throw InvalidInputError("random_coefficient_quadratic: mean coefficients must be >= 0");
    if (!(q_std[i] >= 0.0))
      throw InvalidInputError("random_coefficient_quadratic: deviations must be >= 0");
    qmax = std::max(qmax, q_mean[i]);
    if (q_std[i] > 0.0) det = false;
  }
  int dim = static_cast<int>(q_mean.size());
  return SmoothModel(dim, 2.0 * qmax, det,
                     RandomCoefficientQuadraticModel{std::move(q_mean), std::move(q_std),
                                                     std::move(p)});
}

SmoothModel SmoothModel::additive_gaussian(SmoothModel base, double noise_std) {
  if (!(noise_std >= 0.0))
    throw InvalidInputError("additive_gaussian: noise level must be >= 0");
  if (std::holds_alternative<StackedAgentsModel>(base.node()))
    throw InvalidInputError("additive_gaussian: cannot wrap a stacked model");
  int dim = base.dim();
  double beta = base.beta_f();
  bool det = base.deterministic() && noise_std == 0.0;
  auto holder = std::make_shared<const SmoothModel>(std::move(base));
  return SmoothModel(dim, beta, det, AdditiveGaussianModel{holder, noise_std});
}

SmoothModel SmoothModel::heavy_tail(SmoothModel base, double tail_index, double scale) {
  if (!(tail_index > 2.0))
    throw InvalidInputError("heavy_tail: tail exponent must exceed 2 for finite variance");
  if (!(scale >= 0.0)) throw InvalidInputError("heavy_tail: scale must be >= 0");
  if (std::holds_alternative<StackedAgentsModel>(base.node()))
    throw InvalidInputError("heavy_tail: cannot wrap a stacked model");
  int dim = base.dim();
  double beta = base.beta_f();
  bool det = base.deterministic() && scale == 0.0;
  auto holder = std::make_shared<const SmoothModel>(std::move(base));
  return SmoothModel(dim, beta, det, HeavyTailAdditiveModel{holder, tail_index, scale});
}

SmoothModel SmoothModel::stacked(std::vector<SmoothModel> parts) {
  if (parts.empty()) throw DimensionError("stacked: needs at least one part");
  int dim = 0;
  double beta = 0.0;
  bool det = true;
  for (const auto& p : parts) {
    if (std::holds_alternative<StackedAgentsModel>(p.node()))
      throw InvalidInputError("stacked: nesting stacked models is not supported");
    dim += p.dim();
    beta = std::max(beta, p.beta_f());
    det = det && p.deterministic();
  }
  return SmoothModel(dim, beta, det, StackedAgentsModel{std::move(parts)});
}

SmoothModel SmoothModel::with_beta(double beta) const {
  SmoothModel m = *this;
  if (!(beta >= 0.0)) throw InvalidInputError("with_beta: beta_f must be nonnegative");
  m.beta_f_ = beta;
  return m;
}

namespace {

struct ExactVisitor {
  const Vec& x;

  Vec operator()(const DeterministicQuadraticModel& m) const {
    Vec g = m.hess.mul(x);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += m.linear[i];
    return g;
  }

  Vec operator()(const RandomCoefficientQuadraticModel& m) const {
    Vec g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      g[i] = 2.0 * m.q_mean[i] * x[i] + m.p[i];
    return g;
  }

  Vec operator()(const AdditiveGaussianModel& m) const {
    return gradient_exact(*m.base, x);
  }

  Vec operator()(const HeavyTailAdditiveModel& m) const {
    return gradient_exact(*m.base, x);
  }

  Vec operator()(const StackedAgentsModel& m) const {
    Vec g;
    g.reserve(x.size());
    int offset = 0;
    for (const auto& part : m.parts) {
      Vec xi = slice(x, static_cast<std::size_t>(offset),
                     static_cast<std::size_t>(offset + part.dim()));
      Vec gi = gradient_exact(part, xi);
      g.insert(g.end(), gi.begin(), gi.end());
      offset += part.dim();
    }
    return g;
  }
};

Vec sample_gradient_stream(const SmoothModel& m, const Vec& x, DrawStream& ds) {
  if (const auto* dq = std::get_if<DeterministicQuadraticModel>(&m.node())) {
    return ExactVisitor{x}(*dq);
  }
  if (const auto* rc = std::get_if<RandomCoefficientQuadraticModel>(&m.node())) {
    Vec g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      double qi = rc->q_mean[i] + rc->q_std[i] * ds.gaussian();
      g[i] = 2.0 * qi * x[i] + rc->p[i];
    }
    return g;
  }
  if (const auto* ag = std::get_if<AdditiveGaussianModel>(&m.node())) {
    Vec g = sample_gradient_stream(*ag->base, x, ds);
    for (auto& v : g) v += ag->noise_std * ds.gaussian();
    return g;
  }
  if (const auto* ht = std::get_if<HeavyTailAdditiveModel>(&m.node())) {
    Vec g = sample_gradient_stream(*ht->base, x, ds);
    Vec dir(g.size());
    for (auto& v : dir) v = ds.gaussian();
    double n = nrm2(dir);
    if (n < 1e-300) {
      dir.assign(dir.size(), 0.0);
      dir[0] = 1.0;
      n = 1.0;
    }
    double mag = ht->scale * ds.pareto(ht->tail_index) / n;
    axpy(mag, dir, g);
    return g;
  }
  throw InvalidInputError("sample_gradient: stacked models need agent-tagged streams");
}

}  // namespace

Vec gradient_exact(const SmoothModel& m, const Vec& x) {
  if (static_cast<int>(x.size()) != m.dim())
    throw DimensionError("gradient_exact: operand size mismatch");
  return std::visit(ExactVisitor{x}, m.node());
}

Vec sample_gradient(const SmoothModel& m, const Vec& x, std::uint64_t trial_key,
                    StreamPurpose purpose, std::uint32_t agent_tag, std::uint64_t k,
                    std::uint32_t sample) {
  if (static_cast<int>(x.size()) != m.dim())
    throw DimensionError("sample_gradient: operand size mismatch");
  if (const auto* st = std::get_if<StackedAgentsModel>(&m.node())) {
    Vec g;
    g.reserve(x.size());
    int offset = 0;
    std::uint32_t agent = 0;
    for (const auto& part : st->parts) {
      Vec xi = slice(x, static_cast<std::size_t>(offset),
                     static_cast<std::size_t>(offset + part.dim()));
      DrawStream ds(trial_key, purpose, agent, k, sample);
      Vec gi = sample_gradient_stream(part, xi, ds);
      g.insert(g.end(), gi.begin(), gi.end());
      offset += part.dim();
      ++agent;
    }
    return g;
  }
  DrawStream ds(trial_key, purpose, agent_tag, k, sample);
  return sample_gradient_stream(m, x, ds);
}

BatchSchedule BatchSchedule::polynomial(double n0, double exponent) {
  if (!(n0 >= 1.0)) throw InvalidInputError("polynomial schedule: n0 must be >= 1");
  if (!(exponent > 1.0))
    throw InvalidInputError("polynomial schedule: exponent must exceed 1");
  return BatchSchedule(PolynomialSchedule{n0, exponent});
}

BatchSchedule BatchSchedule::geometric(double n0, double ratio) {
  if (!(n0 >= 1.0)) throw InvalidInputError("geometric schedule: n0 must be >= 1");
  if (!(ratio > 1.0)) throw InvalidInputError("geometric schedule: ratio must exceed 1");
  return BatchSchedule(GeometricSchedule{n0, ratio});
}

BatchSchedule BatchSchedule::constant(std::int64_t n, bool accept_nonvanishing_variance) {
  if (n < 1) throw InvalidInputError("constant schedule: batch must be >= 1");
  if (!accept_nonvanishing_variance)
    throw ConfigError(
        "constant schedule: refusing a non-vanishing variance schedule without the "
        "explicit override");
  return BatchSchedule(ConstantSchedule{n});
}

bool BatchSchedule::summable() const {
  return !std::holds_alternative<ConstantSchedule>(node_);
}

namespace {

constexpr double kBatchCap = 4.611686018427387904e18;  // 2^62

std::int64_t ceil_capped(double v) {
  if (!(v >= 1.0)) return 1;
  if (v >= kBatchCap) return static_cast<std::int64_t>(kBatchCap);
  return static_cast<std::int64_t>(std::ceil(v));
}

}  // namespace

std::int64_t batch_size(const BatchSchedule& s, std::uint64_t k) {
  if (const auto* p = std::get_if<PolynomialSchedule>(&s.node()))
    return ceil_capped(p->n0 * std::pow(static_cast<double>(k) + 1.0, p->exponent));
  if (const auto* g = std::get_if<GeometricSchedule>(&s.node()))
    return ceil_capped(g->n0 * std::pow(g->ratio, static_cast<double>(k)));
  return std::get<ConstantSchedule>(s.node()).n;
}

double inverse_batch_sum_bound(const BatchSchedule& s) {
  if (const auto* p = std::get_if<PolynomialSchedule>(&s.node())) {
    // 1/N_k <= (1/n0) (k+1)^-e; sum over k >= 0 is bounded by
    // 1 + integral_1^inf t^-e dt = 1 + 1/(e-1), all divided by n0.
    return (1.0 + 1.0 / (p->exponent - 1.0)) / p->n0;
  }
  if (const auto* g = std::get_if<GeometricSchedule>(&s.node()))
    return (1.0 / g->n0) * (g->ratio / (g->ratio - 1.0));
  throw InvalidInputError("inverse_batch_sum_bound: constant schedules do not sum");
}

OracleConfig::OracleConfig(SmoothModel model_in, BatchSchedule schedule_in,
                           Vec reference_point_in)
    : model(std::move(model_in)),
      schedule(std::move(schedule_in)),
      reference_point(std::move(reference_point_in)) {
  if (static_cast<int>(reference_point.size()) != model.dim())
    throw DimensionError("OracleConfig: reference point dimension mismatch");
  auto [s0, s1] = default_noise_bound(model, reference_point);
  sigma0 = s0;
  sigma1 = s1;
}

MinibatchResult minibatch_gradient(const OracleConfig& cfg, const Vec& x,
                                   std::uint64_t k, std::uint64_t trial_key) {
  std::int64_t n = batch_size(cfg.schedule, k);
  Vec exact = gradient_exact(cfg.model, x);
  if (cfg.model.deterministic()) return {std::move(exact), n};

  Vec acc(x.size(), 0.0);
  for (std::int64_t s = 0; s < n; ++s) {
    Vec g = sample_gradient(cfg.model, x, trial_key, StreamPurpose::Oracle,
                            cfg.agent_tag, k, static_cast<std::uint32_t>(s));
    Vec dev = sub(g, exact);
    acc = add(acc, dev);
  }
  Vec est = exact;
  axpy(1.0 / static_cast<double>(n), acc, est);
  return {std::move(est), n};
}

double estimate_sigma(const OracleConfig& cfg, const Vec& x, int num_samples,
                      std::uint64_t trial_key) {
  if (num_samples <= 0)
    throw InvalidInputError("estimate_sigma: sample count must be positive");
  if (cfg.model.deterministic()) return 0.0;
  Vec exact = gradient_exact(cfg.model, x);
  double acc = 0.0;
  for (int s = 0; s < num_samples; ++s) {
    Vec g = sample_gradient(cfg.model, x, trial_key, StreamPurpose::SigmaProbe,
                            cfg.agent_tag, 0, static_cast<std::uint32_t>(s));
    acc += nrm2_sq(sub(g, exact));
  }
  return std::sqrt(acc / static_cast<double>(num_samples));
}

std::pair<double, double> default_noise_bound(const SmoothModel& m, const Vec& anchor) {
  if (static_cast<int>(anchor.size()) != m.dim())
    throw DimensionError("default_noise_bound: anchor dimension mismatch");
  constexpr double kSigma1Floor = 1e-9;

  if (std::holds_alternative<DeterministicQuadraticModel>(m.node()))
    return {0.0, kSigma1Floor};

  if (const auto* rc = std::get_if<RandomCoefficientQuadraticModel>(&m.node())) {
    // Deviation 2 (q - q_mean) . x has RMS 2 ||q_std . x||, which grows at
    // most linearly with slope 2 max q_std away from the anchor.
    double s0_sq = 0.0, smax = 0.0;
    for (std::size_t i = 0; i < rc->q_std.size(); ++i) {
      double v = 2.0 * rc->q_std[i] * anchor[i];
      s0_sq += v * v;
      smax = std::max(smax, 2.0 * rc->q_std[i]);
    }
    return {std::sqrt(s0_sq), std::max(smax, kSigma1Floor)};
  }

  if (const auto* ag = std::get_if<AdditiveGaussianModel>(&m.node())) {
    auto [s0, s1] = default_noise_bound(*ag->base, anchor);
    return {s0 + ag->noise_std * std::sqrt(static_cast<double>(m.dim())), s1};
  }

  if (const auto* ht = std::get_if<HeavyTailAdditiveModel>(&m.node())) {
    auto [s0, s1] = default_noise_bound(*ht->base, anchor);
    double second_moment = ht->tail_index / (ht->tail_index - 2.0);
    return {s0 + ht->scale * std::sqrt(second_moment), s1};
  }

  const auto& st = std::get<StackedAgentsModel>(m.node());
  double s0_sq = 0.0, s1 = kSigma1Floor;
  int offset = 0;
  for (const auto& part : st.parts) {
    Vec ai = slice(anchor, static_cast<std::size_t>(offset),
                   static_cast<std::size_t>(offset + part.dim()));
    auto [p0, p1] = default_noise_bound(part, ai);
    s0_sq += p0 * p0;
    s1 = std::max(s1, p1);
    offset += part.dim();
  }
  return {std::sqrt(s0_sq), s1};
}

std::pair<double, double> variance_budget(const OracleConfig& cfg, std::uint64_t k,
                                          double gamma_max, double gamma_min) {
  double n = static_cast<double>(batch_size(cfg.schedule, k));
  double a = 2.0 * cfg.sigma0 * cfg.sigma0 * gamma_max / n;
  double b = 2.0 * cfg.sigma1 * cfg.sigma1 * gamma_max / (gamma_min * n);
  return {a, b};
}

}  // namespace stripd
