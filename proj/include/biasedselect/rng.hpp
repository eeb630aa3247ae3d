#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace biasedselect::rng {

// splitmix64 finalizer; used to turn (root seed, counter) into engine seed
// material with good avalanche.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// One pseudo-random stream. Substreams are derived by counter, not by
// splitting a shared engine, so trial t draws the same values no matter
// which worker runs it or in what order.
class Stream {
 public:
  explicit Stream(std::uint64_t root_seed, std::uint64_t counter = 0)
      : engine_(splitmix64(splitmix64(root_seed) ^ (counter + 0x632be59bd9b4e019ULL))) {}

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  void fill_uniform01(std::span<double> out) {
    for (double& v : out) v = uniform01();
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace biasedselect::rng
