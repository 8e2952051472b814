#pragma once

#include <cmath>
#include <cstdint>

#include "perfctl/types.hpp"

namespace perfctl {

//! Counter-keyed deterministic RNG.
//!
//! Every consumer derives its generator from (seed, stream, index) so that
//! Monte-Carlo fan-out over threads or processes cannot change which numbers
//! a given trajectory sees. The core is xoshiro256** seeded through
//! splitmix64; all floating-point draws are built from raw bits rather than
//! std::uniform_real_distribution, which is implementation-defined.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct SeedPair {
  std::uint64_t global = 0;  // experiment-level seed
  std::uint64_t local = 0;   // trajectory / replicate index
};

enum class Stream : std::uint64_t {
  Noise = 0x6e6f697365ULL,
  Perturbation = 0x7065727475ULL,
  Init = 0x696e6974ULL,
  Solver = 0x736f6c76ULL,
  Eval = 0x6576616cULL,
};

class Rng {
 public:
  Rng(SeedPair seed, Stream stream) {
    std::uint64_t s = seed.global;
    s ^= 0x517cc1b727220a95ULL * (seed.local + 1);
    s ^= static_cast<std::uint64_t>(stream) * 0x2545f4914f6cdd1dULL;
    for (auto& w : state_) w = splitmix64(s);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  //! Uniform on [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  //! Standard normal via Box-Muller; one spare cached per generator.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  Vector uniform_vector(const Vector& lo, const Vector& hi) {
    Vector v(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) v(i) = uniform(lo(i), hi(i));
    return v;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4] = {};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace perfctl
