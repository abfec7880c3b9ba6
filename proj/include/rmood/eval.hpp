#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rmood/core.hpp"
#include "rmood/detector.hpp"

namespace rmood {

/// Probability that a random positive outscores a random negative, ties
/// counted one half. Exact, via midranks (Mann-Whitney U).
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Labels of the scored timesteps of `series`: each score takes the label of
/// its window's end time.
LabelSeries aligned_labels(const ScoreSeries& series, const LabelSeries& labels);

struct PooledAuroc {
  double pooled = 0.0;
  // Empty where an episode's scored steps hold a single class.
  std::vector<std::optional<double>> per_episode;
  double per_episode_mean = 0.0;  // mean over defined entries, NaN if none
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

/// Concatenates aligned scores and labels across episodes before ranking.
PooledAuroc pooled_auroc(std::span<const ScoreSeries> series,
                         std::span<const LabelSeries> labels);

/// Smallest score whose empirical CDF exceeds 1 - fpr (the maximum when no
/// score does); at most a fraction fpr of the sample lies strictly above it.
double calibrate_threshold(std::span<const double> in_distribution_scores, double fpr);

/// Steps from `onset` to the first scored timestep t >= onset whose score
/// exceeds `threshold`.
std::optional<std::size_t> detection_delay(const ScoreSeries& series, std::size_t onset,
                                           double threshold);

struct ScalingCell {
  std::size_t n_dims = 0;
  std::size_t n_steps = 0;
  std::size_t repeats = 0;
  std::size_t batch = 0;  // pipeline runs inside one timed repeat
  double extraction_median = 0.0;  // seconds per single extraction pass
  double extraction_mean = 0.0;
  double extraction_min = 0.0;
  // Seconds per pass in each repeat; repeat r of every cell ran in the same
  // round-robin sweep.
  std::vector<double> extraction_samples;
  double training_median = 0.0;    // seconds per single training run
  double training_mean = 0.0;
};

struct ScalingReport {
  std::vector<ScalingCell> cells;

  const ScalingCell* find(std::size_t n_dims, std::size_t n_steps) const;
  // Least-squares slope of log extraction time against log T over the cells
  // with the given N (or against log N at the given T). NaN with fewer than
  // two such cells.
  double extraction_slope_t(std::size_t n_dims) const;
  double extraction_slope_n(std::size_t n_steps) const;
};

struct ScalingRequest {
  // (N, T) cells to time, in order.
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  std::size_t repeats = 5;
  // The extraction batch size is sized once, on the smallest cell, so that a
  // timed repeat lasts at least this long; every cell then uses that batch.
  double min_batch_seconds = 0.02;
  bool include_training = true;
  DetectorConfig config{};
  std::uint64_t seed = 0;
};

/// Cross product of the given N and T values.
std::vector<std::pair<std::size_t, std::size_t>> scaling_grid(
    std::span<const std::size_t> n_dims, std::span<const std::size_t> n_steps);

/// Times sliding-window feature extraction over every (N, T) cell of the
/// request, and training on the same data, reporting median and mean
/// over repeats. Runs sequentially.
ScalingReport measure_scaling(const ScalingRequest& request);

}  // namespace rmood
