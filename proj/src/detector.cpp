#include "rmood/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rmood/error.hpp"
#include "rmood/eval.hpp"

namespace rmood {

void DetectorConfig::validate() const {
  if (window < 2) throw ConfigError("window size must be >= 2");
  kernel.validate();
  forest.validate();
}

FeatureMatrix training_features(std::span<const EpisodeMatrix> episodes, std::size_t dim,
                                const DetectorConfig& config) {
  FeatureMatrix features(feature_dim(config.variant));
  std::size_t total = 0;
  for (const auto& e : episodes) total += e.n_steps() / config.window;
  features.reserve(total);
  for (const auto& episode : episodes) {
    for (auto segment : partition_windows(episode.row(dim), config.window)) {
      features.push_back(extract_features(segment, config.kernel, config.variant).span());
    }
  }
  return features;
}

DetectorModel train(std::span<const EpisodeMatrix> episodes, const DetectorConfig& config) {
  config.validate();
  if (episodes.empty()) throw InsufficientDataError("no training episodes");
  const std::size_t n_dims = episodes.front().n_dims();
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    if (episodes[i].n_dims() != n_dims) {
      throw ShapeError("training episode " + std::to_string(i) + " has N=" +
                       std::to_string(episodes[i].n_dims()) + ", expected " +
                       std::to_string(n_dims));
    }
    if (episodes[i].onset()) {
      throw ContaminationError("training episode " + std::to_string(i) +
                               " has an anomaly onset; training data must be clean");
    }
  }

  DetectorModel model;
  model.config = config;
  model.forests.reserve(n_dims);
  // Every dimension uses the same forest seed, so relabelling the dimensions
  // only permutes the forests.
  for (std::size_t n = 0; n < n_dims; ++n) {
    model.forests.push_back(fit_forest(training_features(episodes, n, config), config.forest));
  }
  return model;
}

namespace {

void check_width(const DetectorModel& model, std::size_t n_dims) {
  if (n_dims != model.n_dims()) {
    throw ShapeError("input has N=" + std::to_string(n_dims) + " but the model has " +
                     std::to_string(model.n_dims()) + " dimensions");
  }
}

// Mean forest score over the windows ending at t; rows are full episode rows.
template <typename RowFn>
double aggregate(const DetectorModel& model, RowFn&& window_row) {
  double total = 0.0;
  for (std::size_t n = 0; n < model.n_dims(); ++n) {
    const auto f = extract_features(window_row(n), model.config.kernel, model.config.variant);
    total += anomaly_score(model.forests[n], f.span());
  }
  return total / static_cast<double>(model.n_dims());
}

}  // namespace

double score_step(const DetectorModel& model, const Window& window) {
  check_width(model, window.n_dims());
  if (window.width() != model.config.window) {
    throw ShapeError("window width " + std::to_string(window.width()) +
                     " differs from the model's w=" + std::to_string(model.config.window));
  }
  return aggregate(model, [&](std::size_t n) { return window.row(n); });
}

ScoreSeries score_episode(const DetectorModel& model, const EpisodeMatrix& episode) {
  check_width(model, episode.n_dims());
  const std::size_t w = model.config.window;
  if (episode.n_steps() < w) {
    throw SizeError("episode of length " + std::to_string(episode.n_steps()) +
                    " is shorter than the window w=" + std::to_string(w));
  }
  ScoreSeries out;
  out.first_scored = w - 1;
  const std::size_t count = episode.n_steps() - w + 1;
  // Dimension by dimension, adding in the same order as score_step.
  out.scores.assign(count, 0.0);
  for (std::size_t n = 0; n < model.n_dims(); ++n) {
    const auto row = episode.row(n);
    FeatureMatrix features(feature_dim(model.config.variant));
    features.reserve(count);
    for (std::size_t t = w - 1; t < episode.n_steps(); ++t) {
      features.push_back(
          extract_features(row.subspan(t + 1 - w, w), model.config.kernel, model.config.variant)
              .span());
    }
    const auto scores = anomaly_scores(model.forests[n], features);
    for (std::size_t i = 0; i < count; ++i) out.scores[i] += scores[i];
  }
  for (auto& a : out.scores) a /= static_cast<double>(model.n_dims());
  return out;
}

std::vector<ScoreSeries> score_episodes(const DetectorModel& model,
                                        std::span<const EpisodeMatrix> episodes) {
  std::vector<ScoreSeries> out;
  out.reserve(episodes.size());
  for (const auto& e : episodes) out.push_back(score_episode(model, e));
  return out;
}

std::vector<double> default_sigma_grid(std::span<const EpisodeMatrix> train_episodes) {
  if (train_episodes.empty()) throw InsufficientDataError("no training episodes");
  const std::size_t n_dims = train_episodes.front().n_dims();
  double std_sum = 0.0;
  for (std::size_t n = 0; n < n_dims; ++n) {
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    for (const auto& e : train_episodes) {
      if (e.n_dims() != n_dims) throw ShapeError("training episodes disagree on N");
      for (double v : e.row(n)) {
        sum += v;
        sq += v * v;
        ++count;
      }
    }
    const double mean = sum / static_cast<double>(count);
    std_sum += std::sqrt(std::max(0.0, sq / static_cast<double>(count) - mean * mean));
  }
  double scale = std_sum / static_cast<double>(n_dims);
  if (!(scale > 0.0)) scale = 1.0;
  std::vector<double> grid;
  for (double m : {0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0}) grid.push_back(m * scale);
  return grid;
}

SigmaTuning tune_sigma(std::span<const EpisodeMatrix> train_episodes,
                       std::span<const EpisodeMatrix> validation_episodes,
                       std::span<const double> grid, const DetectorConfig& config) {
  if (grid.empty()) throw ConfigError("sigma grid is empty");
  if (validation_episodes.empty()) throw InsufficientDataError("no validation episodes");
  std::vector<LabelSeries> labels;
  for (const auto& e : validation_episodes) {
    if (!e.onset()) throw DataError("validation episodes must carry an anomaly onset");
    labels.push_back(labels_from_onset(e.n_steps(), e.onset()));
  }

  SigmaTuning result;
  double best = -1.0;
  for (double sigma : grid) {
    DetectorConfig candidate = config;
    candidate.kernel.sigma = sigma;
    const auto model = train(train_episodes, candidate);
    const auto scores = score_episodes(model, validation_episodes);
    const double a = pooled_auroc(scores, labels).pooled;
    result.table.emplace_back(sigma, a);
    if (a > best || (a == best && sigma < result.sigma)) {
      best = a;
      result.sigma = sigma;
    }
  }
  return result;
}

CusumParams calibrate_cusum(const DetectorModel& model,
                            std::span<const EpisodeMatrix> train_episodes,
                            std::span<const EpisodeMatrix> heldout_episodes,
                            double false_alarm_rate, double slack_factor) {
  if (train_episodes.empty() || heldout_episodes.empty()) {
    throw InsufficientDataError("CUSUM calibration needs training and held-out episodes");
  }
  if (!(slack_factor >= 0.0)) throw ConfigError("CUSUM slack factor must be >= 0");
  double sum = 0.0, sq = 0.0;
  std::size_t count = 0;
  for (const auto& series : score_episodes(model, train_episodes)) {
    for (double a : series.scores) {
      sum += a;
      sq += a * a;
      ++count;
    }
  }
  const double mean = sum / static_cast<double>(count);
  const double sd = std::sqrt(std::max(0.0, sq / static_cast<double>(count) - mean * mean));

  CusumParams params{.target = mean, .slack = slack_factor * sd, .threshold = 1.0};
  std::vector<double> peaks;
  for (const auto& e : heldout_episodes) {
    if (e.onset()) throw ContaminationError("held-out CUSUM episodes must be clean");
    const auto series = score_episode(model, e);
    const auto trace = cusum_run(series.scores, series.first_scored, params);
    peaks.push_back(*std::max_element(trace.statistic.begin(), trace.statistic.end()));
  }
  // An alarm needs S > h, so at most a fraction false_alarm_rate of the
  // held-out episodes would have alarmed.
  params.threshold = std::max(calibrate_threshold(peaks, false_alarm_rate), 1e-9);
  return params;
}

}  // namespace rmood
