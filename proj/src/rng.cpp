#include "stripd/rng.hpp"

#include <cmath>

#include "stripd/errors.hpp"

namespace stripd {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_trial_key(std::uint64_t master_seed, std::uint64_t trial) {
  return splitmix64(master_seed ^ splitmix64(trial + 0x5851F42D4C957F2Dull));
}

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::uint32_t& c0, std::uint32_t& c1, std::uint32_t& c2,
                         std::uint32_t& c3, std::uint32_t k0, std::uint32_t k1) {
  std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c0;
  std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c2;
  std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  std::uint32_t n0 = hi1 ^ c1 ^ k0;
  std::uint32_t n1 = lo1;
  std::uint32_t n2 = hi0 ^ c3 ^ k1;
  std::uint32_t n3 = lo0;
  c0 = n0;
  c1 = n1;
  c2 = n2;
  c3 = n3;
}

}  // namespace

std::array<std::uint32_t, 4> philox_block(std::uint64_t key, std::uint32_t c0,
                                          std::uint32_t c1, std::uint32_t c2,
                                          std::uint32_t c3) {
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
  for (int round = 0; round < 10; ++round) {
    philox_round(c0, c1, c2, c3, k0, k1);
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  return {c0, c1, c2, c3};
}

// Rational approximation of the standard normal quantile (Wichura's PPND16
// scheme): a central rational fit plus two tail regimes in sqrt(-log p).
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw InvalidInputError("normal_quantile: p must lie strictly inside (0, 1)");
  double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    double r = 0.180625 - q * q;
    double num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                       6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                     1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                   1.3314166789178437745e2) * r + 3.3871328727963666080e0) * q;
    double den = ((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                      3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                    5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                  4.2313330701600911252e1) * r + 1.0;
    return num / den;
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    double num = ((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                      2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                    3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                  4.63033784615654529590e0) * r + 1.42343711074968357734e0;
    double den = ((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                      1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                    6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                  2.05319162663775882187e0) * r + 1.0;
    x = num / den;
  } else {
    r -= 5.0;
    double num = ((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                      1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                    2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                  5.46378491116411436990e0) * r + 6.65790464350110377720e0;
    double den = ((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                      1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                    1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                  5.99832206555887937690e-1) * r + 1.0;
    x = num / den;
  }
  return (q < 0.0) ? -x : x;
}

DrawStream::DrawStream(std::uint64_t trial_key, StreamPurpose purpose,
                       std::uint32_t agent, std::uint64_t iteration,
                       std::uint32_t sample)
    : key_(trial_key),
      c0_(static_cast<std::uint32_t>(iteration)),
      c1_(sample),
      c3_((static_cast<std::uint32_t>(purpose) << 16) ^ agent ^
          (static_cast<std::uint32_t>(iteration >> 32) << 20)) {}

std::uint64_t DrawStream::next_u64() {
  if (has_pending_) {
    has_pending_ = false;
    return pending_;
  }
  auto w = philox_block(key_, c0_, c1_, block_++, c3_);
  pending_ = (static_cast<std::uint64_t>(w[2]) << 32) | w[3];
  has_pending_ = true;
  return (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
}

double DrawStream::uniform() {
  // (x >> 11) + 0.5 in [0.5, 2^53 - 0.5] keeps the result strictly inside
  // (0, 1), safe for the quantile transform.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double DrawStream::gaussian() { return normal_quantile(uniform()); }

double DrawStream::pareto(double alpha) {
  if (!(alpha > 0.0)) throw InvalidInputError("pareto: tail exponent must be positive");
  return std::pow(uniform(), -1.0 / alpha);
}

}  // namespace stripd
