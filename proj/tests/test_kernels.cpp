#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "stripd/kernels.hpp"

using stripd::kernels::Ops;

namespace {

std::vector<double> random_vec(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> d(-10.0, 10.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

// Edge values that expose sign and rounding mismatches between variants.
std::vector<double> spiky_vec(std::mt19937_64& gen, std::size_t n) {
  static const double pool[] = {0.0,    -0.0,   1e-308, -1e-308, 1e308,
                                -1e300, 0.5,    -0.5,   3.0,     -7.25,
                                1e-16,  -1e-16, 1.0,    -1.0};
  std::uniform_int_distribution<std::size_t> pick(0, std::size(pool) - 1);
  std::vector<double> v(n);
  for (auto& x : v) x = pool[pick(gen)];
  return v;
}

bool bit_equal(double a, double b) {
  return std::memcmp(&a, &b, sizeof(double)) == 0;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!bit_equal(a[i], b[i])) return false;
  return true;
}

double reference_sum_grouping(const std::vector<double>& x) {
  double a[4] = {0, 0, 0, 0};
  std::size_t i = 0;
  const std::size_t main = x.size() - x.size() % 4;
  for (; i < main; i += 4) {
    a[0] += x[i];
    a[1] += x[i + 1];
    a[2] += x[i + 2];
    a[3] += x[i + 3];
  }
  double tail = 0.0;
  for (; i < x.size(); ++i) tail += x[i];
  return ((a[0] + a[1]) + (a[2] + a[3])) + tail;
}

void compare_variants(const Ops& a, const Ops& b, std::mt19937_64& gen,
                      std::size_t n, bool spiky) {
  auto make = [&](std::size_t len) {
    return spiky ? spiky_vec(gen, len) : random_vec(gen, len);
  };
  auto x = make(n), y = make(n);
  std::vector<double> lo(n), hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = spiky ? spiky_vec(gen, 1)[0] : random_vec(gen, 1)[0];
    double v = spiky ? spiky_vec(gen, 1)[0] : random_vec(gen, 1)[0];
    lo[i] = std::min(u, v);
    hi[i] = std::max(u, v);
  }
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = std::fabs(y[i]);

  CHECK(bit_equal(a.dot(x.data(), y.data(), n), b.dot(x.data(), y.data(), n)));
  CHECK(bit_equal(a.sum(x.data(), n), b.sum(x.data(), n)));
  CHECK(bit_equal(a.nrm2_sq(x.data(), n), b.nrm2_sq(x.data(), n)));

  auto za = y, zb = y;
  a.axpy(3.5, x.data(), za.data(), n);
  b.axpy(3.5, x.data(), zb.data(), n);
  CHECK(bit_equal(za, zb));

  std::vector<double> ra(n), rb(n);
  a.scale(-2.25, x.data(), ra.data(), n);
  b.scale(-2.25, x.data(), rb.data(), n);
  CHECK(bit_equal(ra, rb));
  a.add(x.data(), y.data(), ra.data(), n);
  b.add(x.data(), y.data(), rb.data(), n);
  CHECK(bit_equal(ra, rb));
  a.sub(x.data(), y.data(), ra.data(), n);
  b.sub(x.data(), y.data(), rb.data(), n);
  CHECK(bit_equal(ra, rb));
  a.mul(x.data(), y.data(), ra.data(), n);
  b.mul(x.data(), y.data(), rb.data(), n);
  CHECK(bit_equal(ra, rb));
  a.clamp(x.data(), lo.data(), hi.data(), ra.data(), n);
  b.clamp(x.data(), lo.data(), hi.data(), rb.data(), n);
  CHECK(bit_equal(ra, rb));
  a.soft_threshold(x.data(), t.data(), ra.data(), n);
  b.soft_threshold(x.data(), t.data(), rb.data(), n);
  CHECK(bit_equal(ra, rb));
}

}  // namespace

TEST_CASE("scalar reductions use the fixed four-lane grouping") {
  std::mt19937_64 gen(42);
  const Ops& ops = stripd::kernels::scalar_ops();
  for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 15u, 33u, 100u}) {
    auto x = random_vec(gen, n);
    CHECK(bit_equal(ops.sum(x.data(), n), reference_sum_grouping(x)));
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = x[i] * x[i];
    CHECK(bit_equal(ops.nrm2_sq(x.data(), n), reference_sum_grouping(sq)));
  }
}

TEST_CASE("scalar kernel values") {
  const Ops& ops = stripd::kernels::scalar_ops();
  std::vector<double> x = {1, 2, 3, 4, 5};
  std::vector<double> y = {2, 2, 2, 2, 2};
  CHECK(ops.dot(x.data(), y.data(), 5) == 30.0);
  CHECK(ops.sum(x.data(), 5) == 15.0);
  CHECK(ops.nrm2_sq(x.data(), 5) == 55.0);

  std::vector<double> lo = {2, 2, 2, 2, 2}, hi = {4, 4, 4, 4, 4}, z(5);
  ops.clamp(x.data(), lo.data(), hi.data(), z.data(), 5);
  CHECK(z == std::vector<double>({2, 2, 3, 4, 4}));

  std::vector<double> v = {2.0, -0.2, 0.0, -3.0}, t = {0.5, 0.5, 0.5, 0.5}, s(4);
  ops.soft_threshold(v.data(), t.data(), s.data(), 4);
  CHECK(s[0] == 1.5);
  CHECK(s[1] == 0.0);
  CHECK(s[2] == 0.0);
  CHECK(s[3] == -2.5);
}

TEST_CASE("soft threshold keeps the sign bit out of the dead zone") {
  const Ops& ops = stripd::kernels::scalar_ops();
  double x = -0.2, t = 0.5, z = 1.0;
  ops.soft_threshold(&x, &t, &z, 1);
  // The clamped magnitude is exactly +0; a negative zero here would leak into
  // bitwise comparisons downstream.
  CHECK(!std::signbit(z));
}

TEST_CASE("clamp follows select semantics at signed zeros") {
  const Ops& ops = stripd::kernels::scalar_ops();
  double x = -0.0, lo = 0.0, hi = 1.0, z;
  ops.clamp(&x, &lo, &hi, &z, 1);
  // -0 > +0 is false, so the bound (+0) is selected.
  CHECK(!std::signbit(z));
  const Ops* avx2 = stripd::kernels::avx2_ops();
  if (avx2) {
    double za;
    avx2->clamp(&x, &lo, &hi, &za, 1);
    CHECK(bit_equal(z, za));
  }
}

TEST_CASE("avx2 variant is bit-identical to scalar") {
  const Ops* avx2 = stripd::kernels::avx2_ops();
  if (!avx2) return;  // not this machine
  std::mt19937_64 gen(7);
  for (std::size_t n = 0; n <= 67; ++n) {
    compare_variants(stripd::kernels::scalar_ops(), *avx2, gen, n, false);
    compare_variants(stripd::kernels::scalar_ops(), *avx2, gen, n, true);
  }
}

TEST_CASE("neon variant is bit-identical to scalar") {
  const Ops* neon = stripd::kernels::neon_ops();
  if (!neon) return;  // not this machine
  std::mt19937_64 gen(7);
  for (std::size_t n = 0; n <= 67; ++n) {
    compare_variants(stripd::kernels::scalar_ops(), *neon, gen, n, false);
    compare_variants(stripd::kernels::scalar_ops(), *neon, gen, n, true);
  }
}

TEST_CASE("variant selection") {
  using stripd::kernels::select;
  CHECK(std::string(select("scalar").name) == "scalar");
  if (stripd::kernels::avx2_ops()) {
    CHECK(std::string(select("avx2").name) == "avx2");
    CHECK(std::string(select("auto").name) == "avx2");
  }
  if (stripd::kernels::neon_ops()) {
    CHECK(std::string(select("neon").name) == "neon");
  }
  // Unknown names must still resolve to something usable.
  const Ops& fallback = select("no-such-variant");
  std::vector<double> x = {1, 2, 3};
  CHECK(fallback.sum(x.data(), 3) == 6.0);
  CHECK(&stripd::kernels::active() != nullptr);
}
