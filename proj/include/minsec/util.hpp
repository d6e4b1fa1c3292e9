#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace minsec {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

// Fold an angle to (-pi, pi], with the boundary case -pi mapped to +pi.
inline double wrap_angle(double x) {
  double y = std::remainder(x, kTwoPi);
  if (y <= -kPi) y += kTwoPi;
  return y;
}

// Fixed-order pairwise tree reduction; deterministic for a fixed index order
// and more accurate than running summation on long face lists.
inline double pairwise_sum(std::vector<double>& v) {
  if (v.empty()) return 0.0;
  size_t n = v.size();
  while (n > 1) {
    size_t h = (n + 1) / 2;
    for (size_t i = 0; i + h < n; ++i) v[i] += v[i + h];
    n = h;
  }
  return v[0];
}

// Minimal xoshiro-style generator so random test data is identical across
// standard libraries (distributions in <random> are implementation-defined).
class Rng {
public:
  explicit Rng(uint64_t seed) {
    state_ = seed ? seed : 0x9e3779b97f4a7c15ULL;
    for (int i = 0; i < 8; ++i) next_u64();
  }
  uint64_t next_u64() {
    state_ ^= state_ << 13;
    state_ ^= state_ >> 7;
    state_ ^= state_ << 17;
    return state_ * 0x2545f4914f6cdd1dULL;
  }
  // uniform in [0, 1)
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }
  // uniform in [0, n)
  int next_int(int n) {
    return static_cast<int>(next_double() * n) % n;
  }

private:
  uint64_t state_;
};

} // namespace minsec
