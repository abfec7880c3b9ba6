#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rmood/core.hpp"
#include "rmood/cusum.hpp"
#include "rmood/features.hpp"
#include "rmood/iforest.hpp"

namespace rmood {

struct DetectorConfig {
  std::size_t window = 10;
  KernelParams kernel{};
  FeatureVariant variant = FeatureVariant::kFull;
  ForestConfig forest{};

  void validate() const;
};

/// One isolation forest per state dimension plus the settings they were
/// trained with. Immutable once trained.
struct DetectorModel {
  std::vector<IsolationForest> forests;
  DetectorConfig config;
  // Alarm layer on top of the score stream, present once calibrated.
  std::optional<CusumParams> cusum;

  std::size_t n_dims() const noexcept { return forests.size(); }
};

/// Aggregated anomaly score A_t for t = first_scored, first_scored + 1, ...
struct ScoreSeries {
  std::size_t first_scored = 0;
  std::vector<double> scores;

  std::size_t timestep(std::size_t i) const noexcept { return first_scored + i; }
};

/// Features of the non-overlapping training windows of one dimension, pooled
/// across episodes.
FeatureMatrix training_features(std::span<const EpisodeMatrix> episodes, std::size_t dim,
                                const DetectorConfig& config);

/// Fits forest n on the features of row n of every episode. Episodes must be
/// clean (no onset) and share N.
DetectorModel train(std::span<const EpisodeMatrix> episodes, const DetectorConfig& config);

/// Unweighted mean over dimensions of each forest's score on its window row.
double score_step(const DetectorModel& model, const Window& window);

/// Stride-1 sliding windows; scores[i] belongs to timestep w - 1 + i.
ScoreSeries score_episode(const DetectorModel& model, const EpisodeMatrix& episode);

std::vector<ScoreSeries> score_episodes(const DetectorModel& model,
                                        std::span<const EpisodeMatrix> episodes);

/// {0.1, 0.25, 0.5, 1, 2, 5, 10} times the mean per-dimension standard
/// deviation of the pooled training data.
std::vector<double> default_sigma_grid(std::span<const EpisodeMatrix> train_episodes);

struct SigmaTuning {
  double sigma = 0.0;
  // (sigma, pooled validation AUROC) for every grid point, in grid order.
  std::vector<std::pair<double, double>> table;
};

/// Trains once per grid value and keeps the sigma with the highest pooled
/// validation AUROC; ties go to the smaller sigma.
SigmaTuning tune_sigma(std::span<const EpisodeMatrix> train_episodes,
                       std::span<const EpisodeMatrix> validation_episodes,
                       std::span<const double> grid, const DetectorConfig& config);

/// Page CUSUM calibration: target is the mean training-episode score, slack
/// `slack_factor` times their standard deviation, and the threshold the
/// (1 - false_alarm_rate) quantile of the per-episode peak statistic over
/// held-out clean episodes.
CusumParams calibrate_cusum(const DetectorModel& model,
                            std::span<const EpisodeMatrix> train_episodes,
                            std::span<const EpisodeMatrix> heldout_episodes,
                            double false_alarm_rate, double slack_factor = 0.25);

}  // namespace rmood
