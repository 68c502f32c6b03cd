#ifndef STRIPD_METRIC_HPP
#define STRIPD_METRIC_HPP

#include <utility>

#include "stripd/dense.hpp"

namespace stripd {

// Symmetric positive definite operator with cached extremal eigenvalues and a
// cached inverse. Scalar and diagonal layouts keep the componentwise fast
// paths; dense layouts factor through Cholesky at construction.
class SpdOperator {
 public:
  enum class Layout { Scalar, Diagonal, Dense };

  SpdOperator() = default;

  static SpdOperator scalar_multiple(int dim, double value);
  static SpdOperator diagonal(Vec entries);
  // Entries must be symmetric to 1e-12 relative; smallest eigenvalue must
  // clear 1e-12. A dense matrix whose off-diagonal entries are all exactly
  // zero collapses to the diagonal layout.
  static SpdOperator dense(Matrix entries);

  int dim() const { return dim_; }
  Layout layout() const { return layout_; }
  double eig_min() const { return eig_min_; }
  double eig_max() const { return eig_max_; }

  Vec apply(const Vec& v) const;
  Vec apply_inverse(const Vec& v) const;

  // <Qv, v>
  double quad_form(const Vec& v) const;

  // Swapped payload; apply() of the result is apply_inverse() of this, with
  // eigenvalue bounds inverted accordingly. Cheap: both payloads are cached.
  SpdOperator inverse() const;

  Matrix materialize() const;

  // Valid for Scalar and Diagonal layouts.
  double diag_at(int i) const;
  bool componentwise() const { return layout_ != Layout::Dense; }

 private:
  int dim_ = 0;
  Layout layout_ = Layout::Scalar;
  double scalar_ = 1.0, inv_scalar_ = 1.0;
  Vec diag_, inv_diag_;
  Matrix dense_, inv_dense_;
  double eig_min_ = 1.0, eig_max_ = 1.0;
};

// Dense linear map with its spectral norm cached at construction.
class LinearMap {
 public:
  LinearMap() = default;
  explicit LinearMap(Matrix entries);

  int rows() const { return entries_.rows; }
  int cols() const { return entries_.cols; }
  const Matrix& entries() const { return entries_; }

  Vec mul(const Vec& x) const { return entries_.mul(x); }
  Vec tmul(const Vec& y) const { return entries_.tmul(y); }

  double op_norm() const { return op_norm_; }

 private:
  Matrix entries_;
  double op_norm_ = 0.0;
};

// ||v||_Q^2 = <Qv, v>
double weighted_norm_sq(const SpdOperator& q, const Vec& v);

// (eig_min, eig_max) of a symmetric matrix; throws InvalidInputError when the
// asymmetry exceeds 1e-12 relative.
std::pair<double, double> extremal_eigs(const Matrix& m);

// Spectral norm via power iteration on L^T L, deterministic fixed starts.
double operator_norm(const LinearMap& l);

// Primal-dual preconditioner pair (dual metric sigma on R^q, primal metric
// gamma on R^p).
struct ProductMetric {
  SpdOperator sigma;
  SpdOperator gamma;
};

struct AnalysisMatrices {
  Matrix s;  // blockdiag(sigma^-1, gamma^-1)
  Matrix u;  // [[sigma^-1, -L/2], [-L^T/2, gamma^-1 - (beta_f/4) Q]]
};

AnalysisMatrices assemble_analysis_matrices(const ProductMetric& pm, const LinearMap& l,
                                            double beta_f, const SpdOperator& q);

// The remaining certificate blocks, used by diagnostics and tests:
// p = [[sigma^-1, L/2], [L^T/2, gamma^-1]], k = [[0, -L/2], [L^T/2, 0]],
// r = p + k.
struct CertificateBlocks {
  Matrix p;
  Matrix k;
  Matrix r;
};

CertificateBlocks assemble_certificate_blocks(const ProductMetric& pm, const LinearMap& l);

}  // namespace stripd

#endif  // STRIPD_METRIC_HPP
