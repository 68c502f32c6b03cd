#ifndef STRIPD_RNG_HPP
#define STRIPD_RNG_HPP

#include <array>
#include <cstdint>

// Counter-based randomness. Every draw is addressed by
// (trial key, purpose, agent, iteration, sample, block) and never depends on
// how many draws other components consumed, so replays and reordered
// evaluation reproduce streams exactly.

namespace stripd {

std::uint64_t splitmix64(std::uint64_t x);

// Per-trial key; distinct trials give statistically independent streams.
std::uint64_t derive_trial_key(std::uint64_t master_seed, std::uint64_t trial);

enum class StreamPurpose : std::uint32_t {
  Oracle = 1,
  Activation = 2,
  SigmaProbe = 3,
  Generic = 4,
};

// Philox 4x32 with 10 rounds.
std::array<std::uint32_t, 4> philox_block(std::uint64_t key, std::uint32_t c0,
                                          std::uint32_t c1, std::uint32_t c2,
                                          std::uint32_t c3);

// Standard normal quantile (rational approximation, ~1e-15 absolute error).
double normal_quantile(double p);

// Sequential draws at a fixed (key, purpose, agent, iteration, sample)
// address; the block index advances internally.
class DrawStream {
 public:
  DrawStream(std::uint64_t trial_key, StreamPurpose purpose, std::uint32_t agent,
             std::uint64_t iteration, std::uint32_t sample);

  // Uniform on the open interval (0, 1).
  double uniform();
  double gaussian();
  // Pareto magnitude >= 1 with tail exponent alpha: P(M > t) = t^-alpha.
  double pareto(double alpha);

 private:
  std::uint64_t next_u64();

  std::uint64_t key_;
  std::uint32_t c0_, c1_, c3_;
  std::uint32_t block_ = 0;
  std::uint64_t pending_ = 0;
  bool has_pending_ = false;
};

}  // namespace stripd

#endif  // STRIPD_RNG_HPP
