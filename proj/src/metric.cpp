#include "stripd/metric.hpp"

#include <cmath>

#include "stripd/errors.hpp"
#include "stripd/linalg.hpp"

namespace stripd {

SpdOperator SpdOperator::scalar_multiple(int dim, double value) {
  if (dim <= 0) throw DimensionError("SpdOperator: dimension must be positive");
  if (!(value > 1e-12)) throw NotSpdError("SpdOperator: scalar must exceed 1e-12");
  SpdOperator q;
  q.dim_ = dim;
  q.layout_ = Layout::Scalar;
  q.scalar_ = value;
  q.inv_scalar_ = 1.0 / value;
  q.eig_min_ = value;
  q.eig_max_ = value;
  return q;
}

SpdOperator SpdOperator::diagonal(Vec entries) {
  if (entries.empty()) throw DimensionError("SpdOperator: dimension must be positive");
  double lo = entries[0], hi = entries[0];
  for (double v : entries) {
    if (!(v > 1e-12)) throw NotSpdError("SpdOperator: diagonal entry must exceed 1e-12");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  SpdOperator q;
  q.dim_ = static_cast<int>(entries.size());
  q.layout_ = Layout::Diagonal;
  q.inv_diag_.resize(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) q.inv_diag_[i] = 1.0 / entries[i];
  q.diag_ = std::move(entries);
  q.eig_min_ = lo;
  q.eig_max_ = hi;
  return q;
}

SpdOperator SpdOperator::dense(Matrix entries) {
  if (!entries.is_square() || entries.rows == 0)
    throw DimensionError("SpdOperator: matrix must be square and nonempty");
  double scale = std::max(entries.max_abs(), 1e-300);
  if (entries.max_asymmetry() > 1e-12 * scale)
    throw InvalidInputError("SpdOperator: matrix asymmetry exceeds 1e-12 relative");

  bool off_diag_zero = true;
  for (int i = 0; i < entries.rows && off_diag_zero; ++i)
    for (int j = 0; j < entries.cols; ++j)
      if (i != j && entries(i, j) != 0.0) {
        off_diag_zero = false;
        break;
      }
  if (off_diag_zero) {
    Vec d(static_cast<std::size_t>(entries.rows));
    for (int i = 0; i < entries.rows; ++i) d[static_cast<std::size_t>(i)] = entries(i, i);
    return diagonal(std::move(d));
  }

  auto [emin, emax] = symmetric_extremal_eigenvalues(entries);
  if (!(emin > 1e-12)) throw NotSpdError("SpdOperator: smallest eigenvalue below 1e-12");

  SpdOperator q;
  q.dim_ = entries.rows;
  q.layout_ = Layout::Dense;
  Matrix chol = cholesky_factor(entries);
  q.inv_dense_ = cholesky_inverse(chol);
  q.dense_ = std::move(entries);
  q.eig_min_ = emin;
  q.eig_max_ = emax;
  return q;
}

Vec SpdOperator::apply(const Vec& v) const {
  if (static_cast<int>(v.size()) != dim_)
    throw DimensionError("SpdOperator::apply: operand size mismatch");
  switch (layout_) {
    case Layout::Scalar:
      return scaled(v, scalar_);
    case Layout::Diagonal:
      return hadamard(diag_, v);
    case Layout::Dense:
      return dense_.mul(v);
  }
  return v;
}

Vec SpdOperator::apply_inverse(const Vec& v) const {
  if (static_cast<int>(v.size()) != dim_)
    throw DimensionError("SpdOperator::apply_inverse: operand size mismatch");
  switch (layout_) {
    case Layout::Scalar:
      return scaled(v, inv_scalar_);
    case Layout::Diagonal:
      return hadamard(inv_diag_, v);
    case Layout::Dense:
      return inv_dense_.mul(v);
  }
  return v;
}

double SpdOperator::quad_form(const Vec& v) const { return dot(apply(v), v); }

SpdOperator SpdOperator::inverse() const {
  SpdOperator q;
  q.dim_ = dim_;
  q.layout_ = layout_;
  q.scalar_ = inv_scalar_;
  q.inv_scalar_ = scalar_;
  q.diag_ = inv_diag_;
  q.inv_diag_ = diag_;
  q.dense_ = inv_dense_;
  q.inv_dense_ = dense_;
  q.eig_min_ = 1.0 / eig_max_;
  q.eig_max_ = 1.0 / eig_min_;
  return q;
}

Matrix SpdOperator::materialize() const {
  Matrix m(dim_, dim_);
  switch (layout_) {
    case Layout::Scalar:
      for (int i = 0; i < dim_; ++i) m(i, i) = scalar_;
      break;
    case Layout::Diagonal:
      for (int i = 0; i < dim_; ++i) m(i, i) = diag_[static_cast<std::size_t>(i)];
      break;
    case Layout::Dense:
      m = dense_;
      break;
  }
  return m;
}

double SpdOperator::diag_at(int i) const {
  if (i < 0 || i >= dim_) throw DimensionError("SpdOperator::diag_at: index out of range");
  switch (layout_) {
    case Layout::Scalar:
      return scalar_;
    case Layout::Diagonal:
      return diag_[static_cast<std::size_t>(i)];
    case Layout::Dense:
      throw InvalidInputError("SpdOperator::diag_at: dense layout has no componentwise view");
  }
  return 0.0;
}

LinearMap::LinearMap(Matrix entries) : entries_(std::move(entries)) {
  const Matrix& l = entries_;
  if (l.rows == 0 || l.cols == 0) {
    op_norm_ = 0.0;
    return;
  }
  Matrix gram = l.transposed().matmul(l);
  op_norm_ = std::sqrt(std::max(power_max_eigenvalue(gram), 0.0));
}

double weighted_norm_sq(const SpdOperator& q, const Vec& v) {
  if (static_cast<int>(v.size()) != q.dim())
    throw DimensionError("weighted_norm_sq: operand size mismatch");
  return q.quad_form(v);
}

std::pair<double, double> extremal_eigs(const Matrix& m) {
  if (!m.is_square()) throw DimensionError("extremal_eigs: matrix not square");
  double scale = std::max(m.max_abs(), 1e-300);
  if (m.max_asymmetry() > 1e-12 * scale)
    throw InvalidInputError("extremal_eigs: matrix asymmetry exceeds 1e-12 relative");
  return symmetric_extremal_eigenvalues(m);
}

double operator_norm(const LinearMap& l) { return l.op_norm(); }

namespace {

void place_block(Matrix& dst, const Matrix& src, int row0, int col0, double scale) {
  for (int i = 0; i < src.rows; ++i)
    for (int j = 0; j < src.cols; ++j) dst(row0 + i, col0 + j) = scale * src(i, j);
}

}  // namespace

AnalysisMatrices assemble_analysis_matrices(const ProductMetric& pm, const LinearMap& l,
                                            double beta_f, const SpdOperator& q) {
  int qd = pm.sigma.dim();
  int pd = pm.gamma.dim();
  if (l.rows() != qd || l.cols() != pd)
    throw DimensionError("assemble_analysis_matrices: map shape mismatch");
  if (q.dim() != pd)
    throw DimensionError("assemble_analysis_matrices: smoothness metric dimension mismatch");
  if (beta_f < 0.0) throw InvalidInputError("assemble_analysis_matrices: beta_f negative");

  int n = qd + pd;
  Matrix sigma_inv = pm.sigma.inverse().materialize();
  Matrix gamma_inv = pm.gamma.inverse().materialize();

  AnalysisMatrices out{Matrix(n, n), Matrix(n, n)};
  place_block(out.s, sigma_inv, 0, 0, 1.0);
  place_block(out.s, gamma_inv, qd, qd, 1.0);

  place_block(out.u, sigma_inv, 0, 0, 1.0);
  place_block(out.u, l.entries(), 0, qd, -0.5);
  place_block(out.u, l.entries().transposed(), qd, 0, -0.5);
  Matrix corner = gamma_inv - (beta_f / 4.0) * q.materialize();
  place_block(out.u, corner, qd, qd, 1.0);
  return out;
}

CertificateBlocks assemble_certificate_blocks(const ProductMetric& pm, const LinearMap& l) {
  int qd = pm.sigma.dim();
  int pd = pm.gamma.dim();
  if (l.rows() != qd || l.cols() != pd)
    throw DimensionError("assemble_certificate_blocks: map shape mismatch");
  int n = qd + pd;
  CertificateBlocks out{Matrix(n, n), Matrix(n, n), Matrix(n, n)};

  Matrix sigma_inv = pm.sigma.inverse().materialize();
  Matrix gamma_inv = pm.gamma.inverse().materialize();
  Matrix lt = l.entries().transposed();

  place_block(out.p, sigma_inv, 0, 0, 1.0);
  place_block(out.p, l.entries(), 0, qd, 0.5);
  place_block(out.p, lt, qd, 0, 0.5);
  place_block(out.p, gamma_inv, qd, qd, 1.0);

  place_block(out.k, l.entries(), 0, qd, -0.5);
  place_block(out.k, lt, qd, 0, 0.5);

  out.r = out.p + out.k;
  return out;
}

}  // namespace stripd
