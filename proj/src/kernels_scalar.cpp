#include "stripd/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <string>

namespace stripd::kernels {

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t nb = n - (n % 4);
  for (std::size_t i = 0; i < nb; i += 4) {
    a0 += x[i + 0] * y[i + 0];
    a1 += x[i + 1] * y[i + 1];
    a2 += x[i + 2] * y[i + 2];
    a3 += x[i + 3] * y[i + 3];
  }
  double tail = 0.0;
  for (std::size_t i = nb; i < n; ++i) tail += x[i] * y[i];
  return ((a0 + a1) + (a2 + a3)) + tail;
}

double sum_scalar(const double* x, std::size_t n) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t nb = n - (n % 4);
  for (std::size_t i = 0; i < nb; i += 4) {
    a0 += x[i + 0];
    a1 += x[i + 1];
    a2 += x[i + 2];
    a3 += x[i + 3];
  }
  double tail = 0.0;
  for (std::size_t i = nb; i < n; ++i) tail += x[i];
  return ((a0 + a1) + (a2 + a3)) + tail;
}

double nrm2_sq_scalar(const double* x, std::size_t n) { return dot_scalar(x, x, n); }

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, const double* x, double* z, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] = a * x[i];
}

void add_scalar(const double* x, const double* y, double* z, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] + y[i];
}

void sub_scalar(const double* x, const double* y, double* z, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] - y[i];
}

void mul_scalar(const double* x, const double* y, double* z, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] * y[i];
}

void clamp_scalar(const double* x, const double* lo, const double* hi, double* z,
                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double t = x[i] > lo[i] ? x[i] : lo[i];
    z[i] = t < hi[i] ? t : hi[i];
  }
}

void soft_threshold_scalar(const double* x, const double* t, double* z,
                           std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double m = __builtin_fabs(x[i]) - t[i];
    // the dead zone is exactly +0; copysign there would leak x's sign bit
    z[i] = m > 0.0 ? __builtin_copysign(m, x[i]) : 0.0;
  }
}

const Ops kScalarOps = {
    "scalar",       dot_scalar, sum_scalar, nrm2_sq_scalar, axpy_scalar,
    scale_scalar,   add_scalar, sub_scalar, mul_scalar,     clamp_scalar,
    soft_threshold_scalar,
};

}  // namespace

const Ops& scalar_ops() { return kScalarOps; }

const Ops& select(const char* name) {
  std::string want = name ? name : "auto";
  if (want == "scalar") return kScalarOps;
  if (want == "avx2") {
    if (const Ops* o = avx2_ops()) return *o;
    return kScalarOps;
  }
  if (want == "neon") {
    if (const Ops* o = neon_ops()) return *o;
    return kScalarOps;
  }
  if (const Ops* o = avx2_ops()) return *o;
  if (const Ops* o = neon_ops()) return *o;
  return kScalarOps;
}

const Ops& active() {
  static const Ops& chosen = select(std::getenv("STRIPD_KERNELS"));
  return chosen;
}

}  // namespace stripd::kernels
