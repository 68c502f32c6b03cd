#ifndef STRIPD_VEC_HPP
#define STRIPD_VEC_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "stripd/errors.hpp"
#include "stripd/kernels.hpp"

namespace stripd {

using Vec = std::vector<double>;

inline void check_same_size(const Vec& a, const Vec& b, const char* where) {
  if (a.size() != b.size())
    throw DimensionError(std::string(where) + ": size mismatch " +
                         std::to_string(a.size()) + " vs " + std::to_string(b.size()));
}

inline double dot(const Vec& a, const Vec& b) {
  check_same_size(a, b, "dot");
  return kernels::active().dot(a.data(), b.data(), a.size());
}

inline double nrm2_sq(const Vec& a) {
  return kernels::active().nrm2_sq(a.data(), a.size());
}

inline double nrm2(const Vec& a) { return std::sqrt(nrm2_sq(a)); }

inline double vsum(const Vec& a) {
  return kernels::active().sum(a.data(), a.size());
}

inline Vec add(const Vec& a, const Vec& b) {
  check_same_size(a, b, "add");
  Vec z(a.size());
  kernels::active().add(a.data(), b.data(), z.data(), a.size());
  return z;
}

inline Vec sub(const Vec& a, const Vec& b) {
  check_same_size(a, b, "sub");
  Vec z(a.size());
  kernels::active().sub(a.data(), b.data(), z.data(), a.size());
  return z;
}

inline Vec hadamard(const Vec& a, const Vec& b) {
  check_same_size(a, b, "hadamard");
  Vec z(a.size());
  kernels::active().mul(a.data(), b.data(), z.data(), a.size());
  return z;
}

inline Vec scaled(const Vec& a, double s) {
  Vec z(a.size());
  kernels::active().scale(s, a.data(), z.data(), a.size());
  return z;
}

// y += a * x
inline void axpy(double a, const Vec& x, Vec& y) {
  check_same_size(x, y, "axpy");
  kernels::active().axpy(a, x.data(), y.data(), x.size());
}

inline Vec clamped(const Vec& x, const Vec& lo, const Vec& hi) {
  check_same_size(x, lo, "clamp");
  check_same_size(x, hi, "clamp");
  Vec z(x.size());
  kernels::active().clamp(x.data(), lo.data(), hi.data(), z.data(), x.size());
  return z;
}

inline Vec soft_thresholded(const Vec& x, const Vec& t) {
  check_same_size(x, t, "soft_threshold");
  Vec z(x.size());
  kernels::active().soft_threshold(x.data(), t.data(), z.data(), x.size());
  return z;
}

inline bool all_finite(const Vec& a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  check_same_size(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

inline Vec concat(const Vec& a, const Vec& b) {
  Vec z;
  z.reserve(a.size() + b.size());
  z.insert(z.end(), a.begin(), a.end());
  z.insert(z.end(), b.begin(), b.end());
  return z;
}

inline Vec slice(const Vec& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.size()) throw DimensionError("slice: bad range");
  return Vec(a.begin() + static_cast<std::ptrdiff_t>(begin),
             a.begin() + static_cast<std::ptrdiff_t>(end));
}

}  // namespace stripd

#endif  // STRIPD_VEC_HPP
