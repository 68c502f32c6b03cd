#include "stripd/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "stripd/errors.hpp"

namespace stripd {

Vec jacobi_eigenvalues(const Matrix& m) {
  if (!m.is_square()) throw DimensionError("jacobi_eigenvalues: matrix not square");
  int n = m.rows;
  if (n == 0) return {};
  // Work on the symmetrized copy; callers validate asymmetry tolerance.
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));

  double frob = 0.0;
  for (double v : a.a) frob += v * v;
  frob = std::sqrt(frob);
  const double stop = 1e-14 * std::max(frob, 1e-300);

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += 2.0 * a(i, j) * a(i, j);
    if (std::sqrt(off) <= stop) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (apq == 0.0) continue;
        double app = a(p, p), aqq = a(q, q);
        double tau = (aqq - app) / (2.0 * apq);
        double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
      }
    }
  }

  Vec eigs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) eigs[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(eigs.begin(), eigs.end());
  return eigs;
}

Matrix cholesky_factor(const Matrix& m) {
  if (!m.is_square()) throw DimensionError("cholesky_factor: matrix not square");
  int n = m.rows;
  Matrix l(n, n);
  for (int j = 0; j < n; ++j) {
    double d = m(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 1e-300)) throw NotSpdError("cholesky_factor: matrix is not positive definite");
    double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      double v = m(i, j);
      for (int k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / ljj;
    }
  }
  return l;
}

Vec cholesky_solve(const Matrix& l, const Vec& b) {
  int n = l.rows;
  if (static_cast<int>(b.size()) != n)
    throw DimensionError("cholesky_solve: operand size mismatch");
  Vec y(b);
  for (int i = 0; i < n; ++i) {
    double v = y[static_cast<std::size_t>(i)];
    for (int k = 0; k < i; ++k) v -= l(i, k) * y[static_cast<std::size_t>(k)];
    y[static_cast<std::size_t>(i)] = v / l(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    double v = y[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < n; ++k) v -= l(k, i) * y[static_cast<std::size_t>(k)];
    y[static_cast<std::size_t>(i)] = v / l(i, i);
  }
  return y;
}

Matrix cholesky_inverse(const Matrix& l) {
  int n = l.rows;
  Matrix inv(n, n);
  Vec e(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < n; ++j) {
    e[static_cast<std::size_t>(j)] = 1.0;
    Vec col = cholesky_solve(l, e);
    e[static_cast<std::size_t>(j)] = 0.0;
    for (int i = 0; i < n; ++i) inv(i, j) = col[static_cast<std::size_t>(i)];
  }
  // Symmetrize away substitution round-off.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double v = 0.5 * (inv(i, j) + inv(j, i));
      inv(i, j) = v;
      inv(j, i) = v;
    }
  return inv;
}

namespace {

double power_from_start(const Matrix& m, Vec v, double tol, int max_iters) {
  double lambda = 0.0;
  double nv = nrm2(v);
  if (nv == 0.0) return 0.0;
  for (auto& x : v) x /= nv;
  for (int it = 0; it < max_iters; ++it) {
    Vec w = m.mul(v);
    double nw = nrm2(w);
    if (nw == 0.0) return 0.0;
    double next = dot(v, w);
    for (std::size_t i = 0; i < w.size(); ++i) v[i] = w[i] / nw;
    if (it > 0 && std::fabs(next - lambda) <= tol * std::max(std::fabs(next), 1.0)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return lambda;
}

}  // namespace

double power_max_eigenvalue(const Matrix& m, double tol, int max_iters) {
  if (!m.is_square()) throw DimensionError("power_max_eigenvalue: matrix not square");
  int n = m.rows;
  if (n == 0) return 0.0;
  Vec ones(static_cast<std::size_t>(n), 1.0);
  Vec ramp(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ramp[static_cast<std::size_t>(i)] = static_cast<double>(i + 1);
  double a = power_from_start(m, ones, tol, max_iters);
  double b = power_from_start(m, ramp, tol, max_iters);
  return std::max(a, b);
}

std::pair<double, double> symmetric_extremal_eigenvalues(const Matrix& m) {
  if (!m.is_square()) throw DimensionError("extremal eigenvalues: matrix not square");
  int n = m.rows;
  if (n == 0) return {0.0, 0.0};
  if (n <= 512) {
    Vec eigs = jacobi_eigenvalues(m);
    return {eigs.front(), eigs.back()};
  }
  // Shift by a Gershgorin radius so both extremes become dominant eigenvalues
  // of PSD matrices.
  double shift = 0.0;
  for (int i = 0; i < n; ++i) {
    double r = 0.0;
    for (int j = 0; j < n; ++j) r += std::fabs(m(i, j));
    shift = std::max(shift, r);
  }
  Matrix up(n, n), down(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = 0.5 * (m(i, j) + m(j, i));
      up(i, j) = v + (i == j ? shift : 0.0);
      down(i, j) = -v + (i == j ? shift : 0.0);
    }
  double emax = power_max_eigenvalue(up) - shift;
  double emin = shift - power_max_eigenvalue(down);
  return {emin, emax};
}

}  // namespace stripd
