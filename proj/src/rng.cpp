#include "lio/rng.hpp"

#include <cmath>

#include "lio/errors.hpp"

namespace lio {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double Rng::uniform(double lo, double hi) {
  // 53-bit mantissa, same construction as std::generate_canonical but pinned.
  std::uint64_t bits = engine_() >> 11;
  double u = static_cast<double>(bits) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

double Rng::normal(double mean, double stddev) {
  if (has_spare_) {
    has_spare_ = false;
    return mean + stddev * spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return mean + stddev * r * std::cos(a);
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) throw ArgumentError("uniform_int: n must be positive");
  // rejection sampling to avoid modulo bias
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

Rng Rng::fork(std::uint64_t tag) {
  std::uint64_t base = engine_();
  return Rng(splitmix64(base ^ splitmix64(tag)));
}

}  // namespace lio
