#include "stripd/kernels.hpp"

// AArch64 NEON variant. Two float64x2 accumulators per reduction reproduce the
// scalar reference's four-partial-sum grouping: register r01 holds partials
// (a0, a1) and r23 holds (a2, a3), combined as (a0 + a1) + (a2 + a3).

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

namespace stripd::kernels {

namespace {

inline double pairwise(float64x2_t r01, float64x2_t r23) {
  double a0 = vgetq_lane_f64(r01, 0), a1 = vgetq_lane_f64(r01, 1);
  double a2 = vgetq_lane_f64(r23, 0), a3 = vgetq_lane_f64(r23, 1);
  return (a0 + a1) + (a2 + a3);
}

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t r01 = vdupq_n_f64(0.0), r23 = vdupq_n_f64(0.0);
  std::size_t nb = n - (n % 4);
  for (std::size_t i = 0; i < nb; i += 4) {
    r01 = vaddq_f64(r01, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    r23 = vaddq_f64(r23, vmulq_f64(vld1q_f64(x + i + 2), vld1q_f64(y + i + 2)));
  }
  double tail = 0.0;
  for (std::size_t i = nb; i < n; ++i) tail += x[i] * y[i];
  return pairwise(r01, r23) + tail;
}

double sum_neon(const double* x, std::size_t n) {
  float64x2_t r01 = vdupq_n_f64(0.0), r23 = vdupq_n_f64(0.0);
  std::size_t nb = n - (n % 4);
  for (std::size_t i = 0; i < nb; i += 4) {
    r01 = vaddq_f64(r01, vld1q_f64(x + i));
    r23 = vaddq_f64(r23, vld1q_f64(x + i + 2));
  }
  double tail = 0.0;
  for (std::size_t i = nb; i < n; ++i) tail += x[i];
  return pairwise(r01, r23) + tail;
}

double nrm2_sq_neon(const double* x, std::size_t n) { return dot_neon(x, x, n); }

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  float64x2_t va = vdupq_n_f64(a);
  std::size_t nb = n - (n % 2);
  for (std::size_t i = 0; i < nb; i += 2) {
    float64x2_t p = vmulq_f64(va, vld1q_f64(x + i));
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), p));
  }
  for (std::size_t i = nb; i < n; ++i) y[i] += a * x[i];
}

void scale_neon(double a, const double* x, double* z, std::size_t n) {
  float64x2_t va = vdupq_n_f64(a);
  std::size_t nb = n - (n % 2);
  for (std::size_t i = 0; i < nb; i += 2)
    vst1q_f64(z + i, vmulq_f64(va, vld1q_f64(x + i)));
  for (std::size_t i = nb; i < n; ++i) z[i] = a * x[i];
}

void add_neon(const double* x, const double* y, double* z, std::size_t n) {
  std::size_t nb = n - (n % 2);
  for (std::size_t i = 0; i < nb; i += 2)
    vst1q_f64(z + i, vaddq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  for (std::size_t i = nb; i < n; ++i) z[i] = x[i] + y[i];
}

void sub_neon(const double* x, const double* y, double* z, std::size_t n) {
  std::size_t nb = n - (n % 2);
  for (std::size_t i = 0; i < nb; i += 2)
    vst1q_f64(z + i, vsubq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  for (std::size_t i = nb; i < n; ++i) z[i] = x[i] - y[i];
}

void mul_neon(const double* x, const double* y, double* z, std::size_t n) {
  std::size_t nb = n - (n % 2);
  for (std::size_t i = 0; i < nb; i += 2)
    vst1q_f64(z + i, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  for (std::size_t i = nb; i < n; ++i) z[i] = x[i] * y[i];
}

// vmaxq/vminq pick the second operand on ties, matching the a>b?a:b select.
void clamp_neon(const double* x, const double* lo, const double* hi, double* z,
                std::size_t n) {
  std::size_t nb = n - (n % 2);
  for (std::size_t i = 0; i < nb; i += 2) {
    float64x2_t xv = vld1q_f64(x + i);
    float64x2_t lov = vld1q_f64(lo + i);
    float64x2_t hiv = vld1q_f64(hi + i);
    uint64x2_t gt = vcgtq_f64(xv, lov);
    float64x2_t t = vbslq_f64(gt, xv, lov);
    uint64x2_t lt = vcltq_f64(t, hiv);
    vst1q_f64(z + i, vbslq_f64(lt, t, hiv));
  }
  for (std::size_t i = nb; i < n; ++i) {
    double t = x[i] > lo[i] ? x[i] : lo[i];
    z[i] = t < hi[i] ? t : hi[i];
  }
}

void soft_threshold_neon(const double* x, const double* t, double* z,
                         std::size_t n) {
  const uint64x2_t sign_mask = vdupq_n_u64(0x8000000000000000ull);
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t nb = n - (n % 2);
  for (std::size_t i = 0; i < nb; i += 2) {
    float64x2_t v = vld1q_f64(x + i);
    uint64x2_t bits = vreinterpretq_u64_f64(v);
    uint64x2_t sign = vandq_u64(bits, sign_mask);
    float64x2_t mag = vabsq_f64(v);
    float64x2_t m = vsubq_f64(mag, vld1q_f64(t + i));
    uint64x2_t pos = vcgtq_f64(m, zero);
    float64x2_t r = vbslq_f64(pos, m, zero);
    // reattach the sign only outside the dead zone; inside it stays +0
    vst1q_f64(z + i, vreinterpretq_f64_u64(vorrq_u64(vreinterpretq_u64_f64(r),
                                                     vandq_u64(sign, pos))));
  }
  for (std::size_t i = nb; i < n; ++i) {
    double m = std::fabs(x[i]) - t[i];
    z[i] = m > 0.0 ? std::copysign(m, x[i]) : 0.0;
  }
}

const Ops kNeonOps = {
    "neon",       dot_neon, sum_neon, nrm2_sq_neon, axpy_neon,
    scale_neon,   add_neon, sub_neon, mul_neon,     clamp_neon,
    soft_threshold_neon,
};

}  // namespace

const Ops* neon_ops() { return &kNeonOps; }

}  // namespace stripd::kernels

#else

namespace stripd::kernels {
const Ops* neon_ops() { return nullptr; }
}  // namespace stripd::kernels

#endif
