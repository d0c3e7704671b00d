#pragma once

#include <array>
#include <cstdint>

namespace dpsurv {

// Self-contained random number generator: xoshiro256++ seeded through
// splitmix64. The library rolls its own samplers instead of <random> because
// draw sequences must be identical for a given seed across standard library
// implementations, and because reproducible substreams are needed for
// replicate- and worker-indexed work.
//
// `child(stream)` derives an independent generator from (seed, stream); child
// streams are stable under scheduling order, so parallel code seeded this way
// produces the same results for any worker count.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent substream indexed by `stream`; deterministic in (seed, stream).
  Rng child(std::uint64_t stream) const;

  std::uint64_t next_u64();

  // Uniform on [0,1) with 53-bit resolution.
  double uniform();
  // Uniform on (0,1); never returns 0.
  double uniform_pos();
  // Uniform integer in {0, ..., n-1}, unbiased. n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n);

  double normal();  // standard normal, Marsaglia polar method
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double exponential(double rate = 1.0);
  // Gamma with (shape, scale) so the mean is shape*scale. Marsaglia-Tsang.
  double gamma(double shape, double scale = 1.0);
  double beta(double a, double b);
  double lognormal(double mu, double sigma);
  // Exact Poisson sampler; inversion below mean 30, PTRS rejection above.
  long poisson(double mean);

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::array<std::uint64_t, 4> state_;
  std::uint64_t seed_;
};

}  // namespace dpsurv
