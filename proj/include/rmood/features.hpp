#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace rmood {

/// Kernel scale s and bandwidth sigma of the RBF similarity feature.
struct KernelParams {
  double scale = 1.5;
  double sigma = 1.0;

  /// Throws ConfigError unless both values are finite and positive.
  void validate() const;
};

/// Which window descriptors feed the forests.
enum class FeatureVariant : std::uint8_t { kFull, kRbfOnly, kMeanOnly };

std::string_view to_string(FeatureVariant variant);
FeatureVariant parse_variant(std::string_view name);
constexpr std::size_t feature_dim(FeatureVariant variant) noexcept {
  return variant == FeatureVariant::kFull ? 2 : 1;
}

/// Descriptor of one univariate window: [rbf, mean] for the full variant,
/// a single entry for the ablations.
struct FeatureVector {
  std::array<double, 2> values{};
  std::size_t dim = 2;

  std::span<const double> span() const noexcept { return {values.data(), dim}; }
  double operator[](std::size_t i) const noexcept { return values[i]; }
};

/// Sum of squared gaps between the last entry and each earlier entry.
double rbf_distance(std::span<const double> row);

/// scale * exp(-distance / sigma^2).
double rbf_similarity(double distance, const KernelParams& params);

double window_mean(std::span<const double> row);

FeatureVector extract_features(std::span<const double> row, const KernelParams& params,
                               FeatureVariant variant = FeatureVariant::kFull);

#ifdef RMOOD_COUNT_OPS
// Arithmetic operations performed by the feature code on this thread.
namespace instrumentation {
inline thread_local std::uint64_t op_count = 0;
}
#endif

}  // namespace rmood
