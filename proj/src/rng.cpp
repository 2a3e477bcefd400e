#include "catmap/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace catmap {

double Rng::normal() {
  if (have_cached_) {
    have_cached_ = false;
    return cached_normal_;
  }
  // Box-Muller; u1 shifted away from 0 so log is finite
  double u1 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 6.283185307179586476925286766559 * u2;
  cached_normal_ = r * std::sin(a);
  have_cached_ = true;
  return r * std::cos(a);
}

double Rng::student_t(int df) {
  if (df < 1) throw std::invalid_argument("student_t: df must be >= 1");
  double z = normal();
  double chi2 = 0.0;
  for (int k = 0; k < df; ++k) {
    double g = normal();
    chi2 += g * g;
  }
  return z / std::sqrt(chi2 / static_cast<double>(df));
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("below: n must be positive");
  // rejection-free for powers of two, otherwise Lemire with rejection
  std::uint64_t x = next_u64();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < n) {
    std::uint64_t threshold = (0ULL - n) % n;
    while (lo < threshold) {
      x = next_u64();
      m = static_cast<__uint128_t>(x) * n;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace catmap
