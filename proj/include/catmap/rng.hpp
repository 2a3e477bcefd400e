#pragma once

#include <cstdint>
#include <vector>

namespace catmap {

// SplitMix64 stream (Steele, Lea & Flood 2014). State advances by the golden
// gamma 0x9E3779B97F4A7C15; each output is the 64-bit finalizer mix of the
// state. Bit-reproducible across platforms for the integer stream; floating
// point draws depend only on the integer stream and portable arithmetic.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // uniform on [0,1) with 53 random bits
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // standard normal, Box-Muller (pairs cached)
  double normal();

  // Student-t with df degrees of freedom: N / sqrt(chi2_df / df),
  // chi2_df drawn as a sum of df squared normals from the same stream
  double student_t(int df);

  bool bernoulli(double p) { return uniform() < p; }

  // uniform integer in [0, n), n >= 1 (Lemire multiply-shift with rejection)
  std::uint64_t below(std::uint64_t n);

  // Derived stream for parallel work item `index`:
  // child_seed = mix(master_seed ^ mix(index + golden gamma)).
  // Children of distinct indices are independent SplitMix64 streams.
  static Rng child(std::uint64_t master_seed, std::uint64_t index) {
    return Rng(mix(master_seed ^ mix(index + 0x9E3779B97F4A7C15ULL)));
  }

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

 private:
  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace catmap
