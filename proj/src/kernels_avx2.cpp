#include "stripd/kernels.hpp"

// This translation unit is built with AVX2 enabled on x86-64; callers reach it
// only through the dispatch table after a runtime CPU check.

#if defined(__x86_64__) && defined(__AVX2__)

#include <immintrin.h>

namespace stripd::kernels {

namespace {

// Combines the four lanes as ((l0 + l1) + (l2 + l3)), matching the scalar
// reference accumulator grouping exactly.
inline double hsum4(__m256d v) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, v);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t nb = n - (n % 4);
  for (std::size_t i = 0; i < nb; i += 4) {
    __m256d p = _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_add_pd(acc, p);
  }
  double tail = 0.0;
  for (std::size_t i = nb; i < n; ++i) tail += x[i] * y[i];
  return hsum4(acc) + tail;
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t nb = n - (n % 4);
  for (std::size_t i = 0; i < nb; i += 4)
    acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double tail = 0.0;
  for (std::size_t i = nb; i < n; ++i) tail += x[i];
  return hsum4(acc) + tail;
}

double nrm2_sq_avx2(const double* x, std::size_t n) { return dot_avx2(x, x, n); }

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  __m256d va = _mm256_set1_pd(a);
  std::size_t nb = n - (n % 4);
  for (std::size_t i = 0; i < nb; i += 4) {
    __m256d p = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), p));
  }
  for (std::size_t i = nb; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(double a, const double* x, double* z, std::size_t n) {
  __m256d va = _mm256_set1_pd(a);
  std::size_t nb = n - (n % 4);
  for (std::size_t i = 0; i < nb; i += 4)
    _mm256_storeu_pd(z + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (std::size_t i = nb; i < n; ++i) z[i] = a * x[i];
}

void add_avx2(const double* x, const double* y, double* z, std::size_t n) {
  std::size_t nb = n - (n % 4);
  for (std::size_t i = 0; i < nb; i += 4)
    _mm256_storeu_pd(z + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (std::size_t i = nb; i < n; ++i) z[i] = x[i] + y[i];
}

void sub_avx2(const double* x, const double* y, double* z, std::size_t n) {
  std::size_t nb = n - (n % 4);
  for (std::size_t i = 0; i < nb; i += 4)
    _mm256_storeu_pd(z + i, _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (std::size_t i = nb; i < n; ++i) z[i] = x[i] - y[i];
}

void mul_avx2(const double* x, const double* y, double* z, std::size_t n) {
  std::size_t nb = n - (n % 4);
  for (std::size_t i = 0; i < nb; i += 4)
    _mm256_storeu_pd(z + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (std::size_t i = nb; i < n; ++i) z[i] = x[i] * y[i];
}

void clamp_avx2(const double* x, const double* lo, const double* hi, double* z,
                std::size_t n) {
  std::size_t nb = n - (n % 4);
  for (std::size_t i = 0; i < nb; i += 4) {
    __m256d t = _mm256_max_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(lo + i));
    _mm256_storeu_pd(z + i, _mm256_min_pd(t, _mm256_loadu_pd(hi + i)));
  }
  for (std::size_t i = nb; i < n; ++i) {
    double t = x[i] > lo[i] ? x[i] : lo[i];
    z[i] = t < hi[i] ? t : hi[i];
  }
}

void soft_threshold_avx2(const double* x, const double* t, double* z,
                         std::size_t n) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t nb = n - (n % 4);
  for (std::size_t i = 0; i < nb; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    __m256d sign = _mm256_and_pd(v, sign_mask);
    __m256d mag = _mm256_andnot_pd(sign_mask, v);
    __m256d m = _mm256_sub_pd(mag, _mm256_loadu_pd(t + i));
    __m256d r = _mm256_max_pd(m, zero);
    // reattach the sign only outside the dead zone; inside it stays +0
    __m256d keep = _mm256_cmp_pd(m, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(z + i, _mm256_or_pd(r, _mm256_and_pd(sign, keep)));
  }
  for (std::size_t i = nb; i < n; ++i) {
    double m = __builtin_fabs(x[i]) - t[i];
    z[i] = m > 0.0 ? __builtin_copysign(m, x[i]) : 0.0;
  }
}

const Ops kAvx2Ops = {
    "avx2",       dot_avx2, sum_avx2, nrm2_sq_avx2, axpy_avx2,
    scale_avx2,   add_avx2, sub_avx2, mul_avx2,     clamp_avx2,
    soft_threshold_avx2,
};

}  // namespace

const Ops* avx2_ops() {
  return __builtin_cpu_supports("avx2") ? &kAvx2Ops : nullptr;
}

}  // namespace stripd::kernels

#else

namespace stripd::kernels {
const Ops* avx2_ops() { return nullptr; }
}  // namespace stripd::kernels

#endif
