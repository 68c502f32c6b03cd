#ifndef STRIPD_LINALG_HPP
#define STRIPD_LINALG_HPP

#include <utility>

#include "stripd/dense.hpp"

// Cold-path dense factorizations. Everything here is deterministic: fixed
// starting vectors, fixed sweep orders, no randomness.

namespace stripd {

// Cyclic Jacobi sweeps for a symmetric matrix; returns eigenvalues ascending.
// Intended for dimensions up to a few hundred.
Vec jacobi_eigenvalues(const Matrix& m);

// Lower-triangular factor of an SPD matrix. Throws NotSpdError when a pivot
// falls below a tiny positive floor.
Matrix cholesky_factor(const Matrix& m);

// Solves A x = b given the Cholesky factor of A.
Vec cholesky_solve(const Matrix& chol_lower, const Vec& b);

Matrix cholesky_inverse(const Matrix& chol_lower);

// Largest eigenvalue of a symmetric PSD matrix by power iteration. Runs from
// two fixed starting vectors (normalized all-ones, normalized ramp) and keeps
// the larger Rayleigh quotient, so a start lying in an eigenspace orthogonal
// to the top one does not silently win.
double power_max_eigenvalue(const Matrix& m, double tol = 1e-13, int max_iters = 20000);

// (eig_min, eig_max) of a symmetric matrix. Jacobi up to dim 512, shifted
// power iterations above.
std::pair<double, double> symmetric_extremal_eigenvalues(const Matrix& m);

}  // namespace stripd

#endif  // STRIPD_LINALG_HPP
