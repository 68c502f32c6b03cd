#ifndef STRIPD_KERNELS_HPP
#define STRIPD_KERNELS_HPP

#include <cstddef>

// Data-parallel inner loops. A scalar reference implementation and SIMD
// variants share one contract: reductions accumulate into four interleaved
// partial sums (lane j takes elements with index = j mod 4) combined as
// ((a0 + a1) + (a2 + a3)) + tail, and no variant may use fused multiply-add.
// Under that contract every variant produces bit-identical doubles, so the
// equivalence tests assert exact equality and results do not depend on which
// variant the dispatcher picks.

namespace stripd::kernels {

struct Ops {
  const char* name;

  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  double (*nrm2_sq)(const double* x, std::size_t n);

  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // z[i] = a * x[i]
  void (*scale)(double a, const double* x, double* z, std::size_t n);
  void (*add)(const double* x, const double* y, double* z, std::size_t n);
  void (*sub)(const double* x, const double* y, double* z, std::size_t n);
  // Hadamard product
  void (*mul)(const double* x, const double* y, double* z, std::size_t n);
  // z[i] = min(max(x[i], lo[i]), hi[i]) with SIMD select semantics:
  // max(a,b) = a > b ? a : b, min(a,b) = a < b ? a : b.
  void (*clamp)(const double* x, const double* lo, const double* hi, double* z,
                std::size_t n);
  // z[i] = copysign(max(|x[i]| - t[i], 0), x[i])
  void (*soft_threshold)(const double* x, const double* t, double* z,
                         std::size_t n);
};

const Ops& scalar_ops();

// Null when the CPU (or this build) lacks the instruction set.
const Ops* avx2_ops();
const Ops* neon_ops();

// Resolves "scalar", "avx2", "neon" or "auto"; unknown names and unsupported
// variants fall back to the best supported choice.
const Ops& select(const char* name);

// Variant chosen once per process from STRIPD_KERNELS (default "auto").
const Ops& active();

}  // namespace stripd::kernels

#endif  // STRIPD_KERNELS_HPP
