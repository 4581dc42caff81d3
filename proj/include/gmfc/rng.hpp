#pragma once

#include <cmath>
#include <cstdint>
#include <span>

// Counter-based random numbers.  Every draw is a pure function of a small
// key (seed, replication, agent, step), so results do not depend on thread
// scheduling or on how work is split across workers.  The mixer is the
// splitmix64 finalizer, which passes the usual statistical batteries and is
// cheap enough to re-key per agent per step.

namespace gmfc {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class CounterRng {
 public:
  CounterRng(std::uint64_t k0, std::uint64_t k1 = 0, std::uint64_t k2 = 0,
             std::uint64_t k3 = 0) {
    std::uint64_t s = mix64(k0);
    s = mix64(s ^ mix64(k1 + 0x100000001b3ULL));
    s = mix64(s ^ mix64(k2 + 0xcbf29ce484222325ULL));
    s = mix64(s ^ mix64(k3 + 0x27d4eb2f165667c5ULL));
    state_ = s;
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform on the open interval (0,1); both endpoints excluded so the
  // value is always safe inside log()
  double uniform() {
    return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // uniform on [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller; the spare value is cached
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  void fill_gaussian(std::span<double> out) {
    for (double& x : out) x = gaussian();
  }

 private:
  std::uint64_t state_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Key roles used throughout the library so distinct purposes never share a
// stream even when seed/rep/agent/step coincide.
enum : std::uint64_t {
  kStreamInit = 0x11,       // initial states
  kStreamNoise = 0x22,      // Brownian increments
  kStreamRelaxed = 0x33,    // auxiliary uniforms of relaxed controls
  kStreamScenario = 0x44,   // scenario-level draws (random baselines etc.)
  kStreamOptimizer = 0x55,  // optimizer proposal noise
  kStreamTest = 0x66        // test fixtures
};

inline CounterRng keyed_rng(std::uint64_t seed, std::uint64_t stream,
                            std::uint64_t rep = 0, std::uint64_t agent = 0,
                            std::uint64_t step = 0) {
  return CounterRng(seed ^ (stream << 56), rep, agent, step);
}

}  // namespace gmfc
