#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace lio {

/// Deterministic random source used everywhere in the library.
///
/// All stochastic choices (data sampling, weight init, minibatch order) must
/// flow through one of these, seeded from the experiment config, so that a
/// given (config, seed) pair reproduces bit-identical runs.  The normal
/// sampler is written out by hand rather than delegated to
/// std::normal_distribution because the standard leaves that distribution's
/// algorithm unspecified and we need the stream to be stable across
/// toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [lo, hi).
  double uniform(double lo = 0.0, double hi = 1.0);

  /// Standard normal via Box-Muller; mean/stddev applied affinely.
  double normal(double mean = 0.0, double stddev = 1.0);

  /// Uniform integer in [0, n).  n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Derive an independent child stream; the parent advances by one draw.
  /// Children with distinct tags are decorrelated via splitmix64.
  Rng fork(std::uint64_t tag);

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// splitmix64 mixing step, used for seed derivation.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace lio
