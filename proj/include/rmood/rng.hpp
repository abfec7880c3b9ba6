#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace rmood {

// SplitMix64 finalizer. Used to turn (seed, stream index) pairs into
// well-separated engine seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(~stream));
}

/// Reproducible random source.
///
/// Engine: std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The conversions to doubles, indices and Gaussians are written
/// out here rather than taken from <random> distributions, because the
/// standard leaves distribution algorithms to the implementation:
///   uniform01()     (u >> 11) * 2^-53                  -> [0, 1)
///   uniform_open()  ((u >> 12) + 0.5) * 2^-52          -> (0, 1)
///   index(n)        rejection sampling on u % n        -> [0, n)
///   normal()        Box-Muller, cosine branch, two uniform_open() draws
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t stream)
      : engine_(derive_seed(seed, stream)) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform_open() {
    return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52;
  }

  std::size_t index(std::size_t n);

  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rmood
