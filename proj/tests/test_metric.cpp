#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "stripd/linalg.hpp"
#include "stripd/metric.hpp"

using namespace stripd;

namespace {

Matrix random_spd(std::mt19937_64& gen, int n) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Matrix b(n, n);
  for (auto& v : b.a) v = d(gen);
  Matrix s = b.transposed().matmul(b);
  for (int i = 0; i < n; ++i) s(i, i) += 0.5;
  return s;
}

}  // namespace

TEST_CASE("matrix products") {
  Matrix m(2, 3);
  m.a = {1, 2, 3, 4, 5, 6};
  Vec x = {1, 1, 1};
  CHECK(m.mul(x) == Vec({6, 15}));
  Vec y = {1, 2};
  CHECK(m.tmul(y) == Vec({9, 12, 15}));
  Matrix mt = m.transposed();
  CHECK(mt.rows == 3);
  CHECK(mt(0, 1) == 4.0);
  Matrix p = m.matmul(mt);
  CHECK(p(0, 0) == 14.0);
  CHECK(p(1, 0) == 32.0);
}

TEST_CASE("jacobi eigenvalues of a 2x2") {
  Matrix m(2, 2);
  m.a = {2, 1, 1, 3};
  Vec eigs = jacobi_eigenvalues(m);
  const double lo = (5.0 - std::sqrt(5.0)) / 2.0;
  const double hi = (5.0 + std::sqrt(5.0)) / 2.0;
  REQUIRE(eigs.size() == 2);
  CHECK(eigs[0] == doctest::Approx(lo).epsilon(1e-12));
  CHECK(eigs[1] == doctest::Approx(hi).epsilon(1e-12));
}

TEST_CASE("extremal eigenvalues") {
  Matrix m(2, 2);
  m.a = {2, 1, 1, 2};
  auto [lo, hi] = extremal_eigs(m);
  CHECK(lo == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(hi == doctest::Approx(3.0).epsilon(1e-12));

  Matrix bad(2, 2);
  bad.a = {1, 2, 3, 4};
  CHECK_THROWS_AS(extremal_eigs(bad), InvalidInputError);
}

TEST_CASE("operator norm agrees with the gram spectrum") {
  Matrix m(2, 2);
  m.a = {1, 2, 3, 4};
  LinearMap l(m);
  const double norm = operator_norm(l);
  CHECK(norm == doctest::Approx(5.4650).epsilon(1e-3));
  Matrix gram = m.transposed().matmul(m);
  Vec eigs = jacobi_eigenvalues(gram);
  CHECK(norm == doctest::Approx(std::sqrt(eigs.back())).epsilon(1e-10));

  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int rows = 1 + static_cast<int>(gen() % 6);
    const int cols = 1 + static_cast<int>(gen() % 6);
    Matrix r(rows, cols);
    for (auto& v : r.a) v = d(gen);
    LinearMap lr(r);
    Vec ge = jacobi_eigenvalues(r.transposed().matmul(r));
    const double expect = std::sqrt(std::max(0.0, ge.back()));
    CHECK(operator_norm(lr) == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("cholesky solves against known inverse") {
  Matrix m(2, 2);
  m.a = {4, 2, 2, 3};
  Matrix f = cholesky_factor(m);
  Vec rhs = {2, 1};
  Vec x = cholesky_solve(f, rhs);
  // inverse is (1/8) [[3, -2], [-2, 4]]
  CHECK(x[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(x[1] == doctest::Approx(0.0).epsilon(1e-12));

  Matrix notspd(2, 2);
  notspd.a = {1, 2, 2, 1};
  CHECK_THROWS_AS(cholesky_factor(notspd), NotSpdError);
}

TEST_CASE("spd operator layouts agree on apply and inverse") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> d(-3.0, 3.0);

  SpdOperator s = SpdOperator::scalar_multiple(3, 2.0);
  Vec v = {1, -2, 4};
  CHECK(s.apply(v) == Vec({2, -4, 8}));
  CHECK(s.apply_inverse(v) == Vec({0.5, -1, 2}));
  CHECK(s.quad_form(v) == doctest::Approx(2.0 * 21.0));
  CHECK(s.eig_min() == 2.0);
  CHECK(s.eig_max() == 2.0);

  SpdOperator diag = SpdOperator::diagonal({2.0, 3.0});
  Vec w = {1.0, 2.0};
  CHECK(weighted_norm_sq(diag, w) == doctest::Approx(14.0));

  for (int trial = 0; trial < 25; ++trial) {
    const int n = 1 + static_cast<int>(gen() % 5);
    Matrix m = random_spd(gen, n);
    SpdOperator dense = SpdOperator::dense(m);
    Vec x(static_cast<std::size_t>(n));
    for (auto& e : x) e = d(gen);
    Vec roundtrip = dense.apply_inverse(dense.apply(x));
    for (int i = 0; i < n; ++i) {
      CHECK(roundtrip[static_cast<std::size_t>(i)] ==
            doctest::Approx(x[static_cast<std::size_t>(i)]).epsilon(1e-9));
    }
    // quad form stays inside the cached eigenvalue bounds
    const double q = dense.quad_form(x);
    const double nn = nrm2_sq(x);
    if (nn > 0) {
      CHECK(q / nn >= dense.eig_min() - 1e-9);
      CHECK(q / nn <= dense.eig_max() + 1e-9);
    }
    SpdOperator inv = dense.inverse();
    CHECK(inv.eig_min() == doctest::Approx(1.0 / dense.eig_max()).epsilon(1e-12));
    Vec same = inv.apply(dense.apply(x));
    for (int i = 0; i < n; ++i) {
      CHECK(same[static_cast<std::size_t>(i)] ==
            doctest::Approx(x[static_cast<std::size_t>(i)]).epsilon(1e-9));
    }
  }
}

TEST_CASE("spd operator rejects bad inputs") {
  Matrix asym(2, 2);
  asym.a = {1, 0.5, 0.2, 1};
  CHECK_THROWS_AS(SpdOperator::dense(asym), InvalidInputError);

  Matrix indef(2, 2);
  indef.a = {1, 2, 2, 1};
  CHECK_THROWS_AS(SpdOperator::dense(indef), NotSpdError);

  CHECK_THROWS_AS(SpdOperator::diagonal({1.0, 0.0}), NotSpdError);
  CHECK_THROWS_AS(SpdOperator::scalar_multiple(2, -1.0), NotSpdError);
}

TEST_CASE("dense with exactly-zero couplings collapses to diagonal") {
  Matrix m(3, 3);
  m.a = {2, 0, 0, 0, 5, 0, 0, 0, 1};
  SpdOperator op = SpdOperator::dense(m);
  CHECK(op.layout() == SpdOperator::Layout::Diagonal);
  CHECK(op.diag_at(1) == 5.0);

  Matrix coupled(2, 2);
  coupled.a = {2, 0.1, 0.1, 2};
  SpdOperator dense = SpdOperator::dense(coupled);
  CHECK(dense.layout() == SpdOperator::Layout::Dense);
  CHECK_THROWS_AS(dense.diag_at(0), InvalidInputError);
}

TEST_CASE("analysis matrices carry the sign-flip congruence") {
  // U equals D P D - blockdiag(0, (beta/4) Q) with D = diag(I, -I), so adding
  // the smoothness block back must reproduce P's spectrum exactly.
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> d(0.2, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int p = 1 + static_cast<int>(gen() % 3);
    const int q = 1 + static_cast<int>(gen() % 3);
    Matrix lm(q, p);
    std::uniform_real_distribution<double> ld(-1.0, 1.0);
    for (auto& v : lm.a) v = ld(gen);
    LinearMap l(lm);
    ProductMetric pm{SpdOperator::scalar_multiple(q, d(gen)),
                     SpdOperator::scalar_multiple(p, d(gen))};
    const double beta = d(gen);
    SpdOperator qmetric = SpdOperator::scalar_multiple(p, 1.0);

    AnalysisMatrices am = assemble_analysis_matrices(pm, l, beta, qmetric);
    CertificateBlocks cb = assemble_certificate_blocks(pm, l);

    Matrix shifted = am.u;
    for (int i = 0; i < p; ++i) shifted(q + i, q + i) += beta / 4.0;
    Vec eu = jacobi_eigenvalues(shifted);
    Vec ep = jacobi_eigenvalues(cb.p);
    REQUIRE(eu.size() == ep.size());
    for (std::size_t i = 0; i < eu.size(); ++i) {
      CHECK(eu[i] == doctest::Approx(ep[i]).epsilon(1e-9));
    }

    // r = p + k, and k is antisymmetric
    for (int r = 0; r < cb.r.rows; ++r) {
      for (int c = 0; c < cb.r.cols; ++c) {
        CHECK(cb.r(r, c) == doctest::Approx(cb.p(r, c) + cb.k(r, c)).epsilon(1e-12));
        CHECK(cb.k(r, c) == doctest::Approx(-cb.k(c, r)).epsilon(1e-12));
      }
    }

    // s is blockdiag of the inverse step metrics
    CHECK(am.s(0, 0) == doctest::Approx(1.0 / pm.sigma.diag_at(0)).epsilon(1e-12));
    CHECK(am.s(q, q) == doctest::Approx(1.0 / pm.gamma.diag_at(0)).epsilon(1e-12));
    CHECK(am.s(0, q) == 0.0);
  }
}
