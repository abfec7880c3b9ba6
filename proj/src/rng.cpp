#include "rmood/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "rmood/error.hpp"

namespace rmood {

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw ConfigError("Rng::index: empty range");
  const auto bound = static_cast<std::uint64_t>(n);
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = kMax - (kMax % bound + 1) % bound;
  std::uint64_t u = engine_();
  while (u > limit) u = engine_();
  return static_cast<std::size_t>(u % bound);
}

double Rng::normal() {
  const double u1 = uniform_open();
  const double u2 = uniform_open();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace rmood
