#include "rmood/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "rmood/error.hpp"
#include "rmood/rng.hpp"

namespace rmood {

double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("auroc: " + std::to_string(scores.size()) + " scores vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Ranks are kept doubled (2 * midrank) so they stay integers.
  std::uint64_t pos_rank_sum2 = 0;
  std::uint64_t n_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const std::uint64_t midrank2 = (i + 1) + (j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]]) {
        pos_rank_sum2 += midrank2;
        ++n_pos;
      }
    }
    i = j + 1;
  }
  const std::uint64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw UndefinedMetricError("auroc needs both classes (positives " + std::to_string(n_pos) +
                               ", negatives " + std::to_string(n_neg) + ")");
  }
  // U = sum of positive ranks - P (P + 1) / 2, in doubled units.
  const std::uint64_t u2 = pos_rank_sum2 - n_pos * (n_pos + 1);
  return static_cast<double>(u2) / (2.0 * static_cast<double>(n_pos) *
                                    static_cast<double>(n_neg));
}

LabelSeries aligned_labels(const ScoreSeries& series, const LabelSeries& labels) {
  if (series.first_scored + series.scores.size() > labels.size()) {
    throw ShapeError("score series extends past the label series");
  }
  auto first = labels.begin() + static_cast<std::ptrdiff_t>(series.first_scored);
  return LabelSeries(first, first + static_cast<std::ptrdiff_t>(series.scores.size()));
}

PooledAuroc pooled_auroc(std::span<const ScoreSeries> series,
                         std::span<const LabelSeries> labels) {
  if (series.size() != labels.size()) {
    throw ShapeError("pooled_auroc: score and label episode counts differ");
  }
  PooledAuroc out;
  std::vector<double> all_scores;
  LabelSeries all_labels;
  double sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t e = 0; e < series.size(); ++e) {
    const auto aligned = aligned_labels(series[e], labels[e]);
    all_scores.insert(all_scores.end(), series[e].scores.begin(), series[e].scores.end());
    all_labels.insert(all_labels.end(), aligned.begin(), aligned.end());
    const auto pos = static_cast<std::size_t>(std::count(aligned.begin(), aligned.end(), 1));
    if (pos > 0 && pos < aligned.size()) {
      const double a = auroc(series[e].scores, aligned);
      out.per_episode.emplace_back(a);
      sum += a;
      ++defined;
    } else {
      out.per_episode.emplace_back(std::nullopt);
    }
  }
  out.pooled = auroc(all_scores, all_labels);
  out.n_pos = static_cast<std::size_t>(std::count(all_labels.begin(), all_labels.end(), 1));
  out.n_neg = all_labels.size() - out.n_pos;
  out.per_episode_mean =
      defined ? sum / static_cast<double>(defined) : std::numeric_limits<double>::quiet_NaN();
  return out;
}

double calibrate_threshold(std::span<const double> in_distribution_scores, double fpr) {
  if (in_distribution_scores.empty()) throw DataError("no in-distribution scores");
  if (!(fpr > 0.0 && fpr < 1.0)) throw ConfigError("false-positive rate must be in (0, 1)");
  std::vector<double> sorted(in_distribution_scores.begin(), in_distribution_scores.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  // Sorted position k has CDF (k + 1) / n, which exceeds 1 - fpr first at
  // k = floor((1 - fpr) n). The epsilon absorbs representation error in
  // products such as 0.95 * 100.
  auto k = static_cast<std::size_t>(std::floor((1.0 - fpr) * n + 1e-9));
  k = std::min(k, sorted.size() - 1);
  return sorted[k];
}

std::optional<std::size_t> detection_delay(const ScoreSeries& series, std::size_t onset,
                                           double threshold) {
  for (std::size_t i = 0; i < series.scores.size(); ++i) {
    const std::size_t t = series.timestep(i);
    if (t >= onset && series.scores[i] > threshold) return t - onset;
  }
  return std::nullopt;
}

double log_slope(const std::vector<std::pair<double, double>>& xy);

const ScalingCell* ScalingReport::find(std::size_t n_dims, std::size_t n_steps) const {
  for (const auto& c : cells) {
    if (c.n_dims == n_dims && c.n_steps == n_steps) return &c;
  }
  return nullptr;
}

double ScalingReport::extraction_slope_t(std::size_t n_dims) const {
  std::vector<std::pair<double, double>> xy;
  for (const auto& c : cells) {
    if (c.n_dims == n_dims) xy.emplace_back(c.n_steps, c.extraction_median);
  }
  return log_slope(xy);
}

double ScalingReport::extraction_slope_n(std::size_t n_steps) const {
  std::vector<std::pair<double, double>> xy;
  for (const auto& c : cells) {
    if (c.n_steps == n_steps) xy.emplace_back(c.n_dims, c.extraction_median);
  }
  return log_slope(xy);
}

std::vector<std::pair<std::size_t, std::size_t>> scaling_grid(
    std::span<const std::size_t> n_dims, std::span<const std::size_t> n_steps) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t n : n_dims) {
    for (std::size_t t : n_steps) out.emplace_back(n, t);
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

EpisodeMatrix random_episode(std::size_t n_dims, std::size_t n_steps, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> data(n_dims * n_steps);
  for (auto& v : data) v = rng.normal();
  return EpisodeMatrix(n_dims, n_steps, std::move(data));
}

// One full sliding-window extraction pass; returns a checksum so the work
// cannot be elided.
double extraction_pass(const EpisodeMatrix& episode, const DetectorConfig& config) {
  double sink = 0.0;
  const std::size_t w = config.window;
  for (std::size_t n = 0; n < episode.n_dims(); ++n) {
    const auto row = episode.row(n);
    for (std::size_t t = w - 1; t < episode.n_steps(); ++t) {
      const auto f = extract_features(row.subspan(t + 1 - w, w), config.kernel, config.variant);
      sink += f[0];
    }
  }
  return sink;
}

}  // namespace

double log_slope(const std::vector<std::pair<double, double>>& xy) {
  if (xy.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0, my = 0;
  for (auto [x, y] : xy) {
    mx += std::log(x);
    my += std::log(y);
  }
  mx /= static_cast<double>(xy.size());
  my /= static_cast<double>(xy.size());
  double sxy = 0, sxx = 0;
  for (auto [x, y] : xy) {
    sxy += (std::log(x) - mx) * (std::log(y) - my);
    sxx += (std::log(x) - mx) * (std::log(x) - mx);
  }
  return sxx > 0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

ScalingReport measure_scaling(const ScalingRequest& request) {
  request.config.validate();
  if (request.cells.empty()) throw ConfigError("scaling grid needs at least one cell");
  if (request.repeats == 0) throw ConfigError("scaling repeats must be >= 1");
  for (auto [n, t] : request.cells) {
    if (n == 0) throw ConfigError("scaling N must be >= 1");
    if (t < request.config.window) {
      throw ConfigError("scaling length T=" + std::to_string(t) + " shorter than window");
    }
  }

  const auto smallest = *std::min_element(
      request.cells.begin(), request.cells.end(),
      [](const auto& a, const auto& b) { return a.first * a.second < b.first * b.second; });
  std::size_t batch = 1;
  {
    const auto probe = random_episode(smallest.first, smallest.second, request.seed);
    volatile double sink = extraction_pass(probe, request.config);  // warm-up
    for (;;) {
      const auto start = Clock::now();
      for (std::size_t b = 0; b < batch; ++b) sink = sink + extraction_pass(probe, request.config);
      if (seconds_since(start) >= request.min_batch_seconds || batch >= (1u << 20)) break;
      batch *= 2;
    }
  }

  // Repeats go round-robin over the cells so that slow drift in machine
  // speed lands on every cell alike.
  const std::size_t cells = request.cells.size();
  std::vector<EpisodeMatrix> episodes;
  for (auto [n, t] : request.cells) {
    episodes.push_back(random_episode(n, t, derive_seed(request.seed, n * 1000003 + t)));
  }
  std::vector<std::vector<double>> extraction(cells), training(cells);
  volatile double sink = 0.0;
  for (std::size_t r = 0; r < request.repeats; ++r) {
    for (std::size_t c = 0; c < cells; ++c) {
      auto start = Clock::now();
      for (std::size_t b = 0; b < batch; ++b) sink = sink + extraction_pass(episodes[c], request.config);
      extraction[c].push_back(seconds_since(start) / static_cast<double>(batch));
      if (request.include_training) {
        start = Clock::now();
        const auto model = train(std::span<const EpisodeMatrix>(&episodes[c], 1), request.config);
        training[c].push_back(seconds_since(start));
        sink = sink + static_cast<double>(model.n_dims());
      }
    }
  }

  ScalingReport report;
  for (std::size_t c = 0; c < cells; ++c) {
    const auto [n, t] = request.cells[c];
    ScalingCell cell;
    cell.n_dims = n;
    cell.n_steps = t;
    cell.repeats = request.repeats;
    cell.batch = batch;
    cell.extraction_median = median(extraction[c]);
    cell.extraction_mean = mean(extraction[c]);
    cell.extraction_min = *std::min_element(extraction[c].begin(), extraction[c].end());
    cell.extraction_samples = extraction[c];
    if (!training[c].empty()) {
      cell.training_median = median(training[c]);
      cell.training_mean = mean(training[c]);
    }
    report.cells.push_back(cell);
  }
  return report;
}

}  // namespace rmood
