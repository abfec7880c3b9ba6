#include "rmood/features.hpp"

#include <cmath>
#include <string>

#include "rmood/error.hpp"

#ifdef RMOOD_COUNT_OPS
#define RMOOD_COUNT(n) (::rmood::instrumentation::op_count += (n))
#else
#define RMOOD_COUNT(n) ((void)0)
#endif

namespace rmood {

void KernelParams::validate() const {
  if (!std::isfinite(scale) || scale <= 0.0) {
    throw ConfigError("kernel scale s must be finite and > 0");
  }
  if (!std::isfinite(sigma) || sigma <= 0.0) {
    throw ConfigError("kernel bandwidth sigma must be finite and > 0");
  }
}

std::string_view to_string(FeatureVariant variant) {
  switch (variant) {
    case FeatureVariant::kFull:
      return "full";
    case FeatureVariant::kRbfOnly:
      return "rbf_only";
    case FeatureVariant::kMeanOnly:
      return "mean_only";
  }
  return "full";
}

FeatureVariant parse_variant(std::string_view name) {
  if (name == "full") return FeatureVariant::kFull;
  if (name == "rbf_only") return FeatureVariant::kRbfOnly;
  if (name == "mean_only") return FeatureVariant::kMeanOnly;
  throw ConfigError("unknown feature variant '" + std::string(name) + "'");
}

double rbf_distance(std::span<const double> row) {
  if (row.size() < 2) {
    throw SizeError("rbf_distance needs a window of at least 2 entries, got " +
                    std::to_string(row.size()));
  }
  const double last = row.back();
  double d = 0.0;
  for (std::size_t i = 0; i + 1 < row.size(); ++i) {
    const double gap = last - row[i];
    d += gap * gap;
  }
  RMOOD_COUNT(3 * (row.size() - 1));
  return d;
}

double rbf_similarity(double distance, const KernelParams& params) {
  RMOOD_COUNT(4);
  return params.scale * std::exp(-distance / (params.sigma * params.sigma));
}

double window_mean(std::span<const double> row) {
  double sum = 0.0;
  for (double v : row) sum += v;
  RMOOD_COUNT(row.size() + 1);
  return sum / static_cast<double>(row.size());
}

FeatureVector extract_features(std::span<const double> row, const KernelParams& params,
                               FeatureVariant variant) {
  FeatureVector out;
  switch (variant) {
    case FeatureVariant::kFull:
      out.values = {rbf_similarity(rbf_distance(row), params), window_mean(row)};
      out.dim = 2;
      break;
    case FeatureVariant::kRbfOnly:
      out.values = {rbf_similarity(rbf_distance(row), params), 0.0};
      out.dim = 1;
      break;
    case FeatureVariant::kMeanOnly:
      if (row.size() < 2) throw SizeError("feature window needs at least 2 entries");
      out.values = {window_mean(row), 0.0};
      out.dim = 1;
      break;
  }
  return out;
}

}  // namespace rmood
