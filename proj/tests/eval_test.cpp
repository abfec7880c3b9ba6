#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "rmood/error.hpp"
#include "rmood/eval.hpp"
#include "rmood/rng.hpp"

namespace rmood {
namespace {

TEST(Auroc, Fixtures) {
  EXPECT_EQ(auroc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, LabelSeries{0, 0, 1, 1}), 1.0);
  EXPECT_EQ(auroc(std::vector<double>(6, 0.3), LabelSeries{0, 1, 0, 1, 1, 0}), 0.5);
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  const LabelSeries l{0, 0, 1, 1};
  EXPECT_EQ(auroc(s, l), 0.75);
  EXPECT_EQ(oracle::pairwise_auroc(s, l), 0.75);
}

TEST(Auroc, Errors) {
  EXPECT_THROW(auroc(std::vector<double>{0.1, 0.2}, LabelSeries{1, 1}), UndefinedMetricError);
  EXPECT_THROW(auroc(std::vector<double>{0.1, 0.2}, LabelSeries{0, 0}), UndefinedMetricError);
  EXPECT_THROW(auroc(std::vector<double>{0.1}, LabelSeries{0, 1}), ShapeError);
}

class AurocProperties : public ::testing::Test {
 protected:
  // Scores drawn from a small grid so ties are common.
  void draw(std::size_t n) {
    scores_.assign(n, 0.0);
    labels_.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      scores_[i] = static_cast<double>(rng_.index(12)) / 11.0;
      labels_[i] = static_cast<std::uint8_t>(rng_.index(2));
    }
    labels_[0] = 0;
    labels_[1] = 1;
  }
  Rng rng_{77};
  std::vector<double> scores_;
  LabelSeries labels_;
};

TEST_F(AurocProperties, MatchesPairwiseOracle) {
  for (int trial = 0; trial < 300; ++trial) {
    draw(2 + rng_.index(199));
    EXPECT_NEAR(auroc(scores_, labels_), oracle::pairwise_auroc(scores_, labels_), 1e-12);
  }
}

TEST_F(AurocProperties, InvariantUnderIncreasingTransform) {
  for (int trial = 0; trial < 100; ++trial) {
    draw(2 + rng_.index(100));
    auto transformed = scores_;
    for (auto& v : transformed) v = std::exp(3.0 * v) - 7.0;
    EXPECT_EQ(auroc(transformed, labels_), auroc(scores_, labels_));
  }
}

TEST_F(AurocProperties, ComplementSumsToOne) {
  for (int trial = 0; trial < 100; ++trial) {
    draw(2 + rng_.index(100));
    auto flipped = labels_;
    for (auto& l : flipped) l = 1 - l;
    EXPECT_NEAR(auroc(scores_, labels_) + auroc(scores_, flipped), 1.0, 1e-12);
  }
}

TEST(PooledAuroc, SingleEpisodeAndConcatenation) {
  const ScoreSeries a{2, {0.1, 0.2, 0.7, 0.9, 0.4}};
  const ScoreSeries b{2, {0.3, 0.6, 0.2, 0.8, 0.85}};
  const auto la = labels_from_onset(7, 4);
  const auto lb = labels_from_onset(7, 5);

  const std::vector<ScoreSeries> one{a};
  const std::vector<LabelSeries> one_l{la};
  const auto single = pooled_auroc(one, one_l);
  EXPECT_EQ(single.pooled, auroc(a.scores, aligned_labels(a, la)));
  ASSERT_EQ(single.per_episode.size(), 1u);
  EXPECT_EQ(*single.per_episode[0], single.pooled);

  const std::vector<ScoreSeries> two{a, b};
  const std::vector<LabelSeries> two_l{la, lb};
  std::vector<double> cat_s = a.scores;
  cat_s.insert(cat_s.end(), b.scores.begin(), b.scores.end());
  LabelSeries cat_l = aligned_labels(a, la);
  const auto alb = aligned_labels(b, lb);
  cat_l.insert(cat_l.end(), alb.begin(), alb.end());
  const auto pooled = pooled_auroc(two, two_l);
  EXPECT_EQ(pooled.pooled, oracle::pairwise_auroc(cat_s, cat_l));
  EXPECT_EQ(pooled.n_pos + pooled.n_neg, 10u);

  const std::vector<ScoreSeries> dup{a, b, a, b};
  const std::vector<LabelSeries> dup_l{la, lb, la, lb};
  EXPECT_NEAR(pooled_auroc(dup, dup_l).pooled, pooled.pooled, 1e-12);
}

TEST(PooledAuroc, SingleClassEpisodeHasNoPerEpisodeValue) {
  const ScoreSeries a{0, {0.1, 0.2, 0.7}};
  const ScoreSeries b{0, {0.3, 0.6, 0.2}};
  const std::vector<ScoreSeries> s{a, b};
  const std::vector<LabelSeries> l{labels_from_onset(3, 1), labels_from_onset(3, std::nullopt)};
  const auto r = pooled_auroc(s, l);
  EXPECT_TRUE(r.per_episode[0].has_value());
  EXPECT_FALSE(r.per_episode[1].has_value());
  EXPECT_EQ(r.per_episode_mean, *r.per_episode[0]);
}

TEST(CalibrateThreshold, Fixtures) {
  std::vector<double> one_to_hundred(100);
  for (std::size_t i = 0; i < 100; ++i) one_to_hundred[i] = static_cast<double>(i + 1);
  EXPECT_EQ(calibrate_threshold(one_to_hundred, 0.5), 51.0);
  EXPECT_EQ(calibrate_threshold(one_to_hundred, 0.05), 96.0);
  EXPECT_EQ(calibrate_threshold(one_to_hundred, 1e-9), 100.0);
  EXPECT_EQ(calibrate_threshold(std::vector<double>(10, 0.4), 0.2), 0.4);
  EXPECT_THROW(calibrate_threshold(one_to_hundred, 0.0), ConfigError);
  EXPECT_THROW(calibrate_threshold({}, 0.1), DataError);
}

TEST(CalibrateThreshold, ExceedanceAtMostFpr) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(1 + rng.index(300));
    for (auto& v : s) v = rng.normal();
    const double fpr = 0.01 + 0.98 * rng.uniform01();
    const double h = calibrate_threshold(s, fpr);
    const auto above = std::count_if(s.begin(), s.end(), [h](double v) { return v > h; });
    EXPECT_LE(static_cast<double>(above), fpr * static_cast<double>(s.size()) + 1e-9);
  }
}

TEST(DetectionDelay, Fixtures) {
  ScoreSeries jump{9, std::vector<double>(30, 0.2)};
  for (std::size_t i = 11; i < 30; ++i) jump.scores[i] = 0.9;  // t = 20 onwards
  EXPECT_EQ(detection_delay(jump, 20, 0.5), 0u);
  EXPECT_EQ(detection_delay(ScoreSeries{9, std::vector<double>(30, 0.2)}, 20, 0.5),
            std::nullopt);

  ScoreSeries ramp{9, {}};
  for (std::size_t t = 9; t < 60; ++t) {
    ramp.scores.push_back(t < 30 ? 0.3 : 0.3 + 0.02 * static_cast<double>(t - 30));
  }
  // 0.3 + 0.02 k > 0.39 first at k = 5.
  EXPECT_EQ(detection_delay(ramp, 30, 0.39), 5u);
}

TEST(DetectionDelay, MonotoneInThreshold) {
  Rng rng(12);
  ScoreSeries s{9, {}};
  for (int i = 0; i < 200; ++i) s.scores.push_back(rng.uniform01());
  std::size_t previous = 0;
  for (double h = 0.0; h < 1.0; h += 0.05) {
    const auto d = detection_delay(s, 50, h).value_or(1000);
    EXPECT_GE(d, previous);
    previous = d;
  }
}

TEST(MeasureScaling, SmokeOnTinyCell) {
  ScalingRequest request;
  request.cells = {{1, 10}};
  request.repeats = 2;
  request.min_batch_seconds = 0.0;
  request.config.forest.n_trees = 5;
  // A single window cannot train a forest; extraction is timed regardless.
  request.include_training = false;
  const auto report = measure_scaling(request);
  ASSERT_EQ(report.cells.size(), 1u);
  EXPECT_GT(report.cells[0].extraction_median, 0.0);
  EXPECT_TRUE(std::isnan(report.extraction_slope_t(1)));
}

TEST(MeasureScaling, GridAndSlopes) {
  ScalingRequest request;
  const std::vector<std::size_t> ns{2, 4}, ts{200, 400};
  request.cells = scaling_grid(ns, ts);
  request.repeats = 3;
  request.min_batch_seconds = 0.002;
  request.config.forest.n_trees = 5;
  const auto report = measure_scaling(request);
  EXPECT_EQ(report.cells.size(), 4u);
  ASSERT_NE(report.find(4, 400), nullptr);
  EXPECT_GT(report.find(4, 400)->training_median, 0.0);
  EXPECT_TRUE(std::isfinite(report.extraction_slope_t(2)));
  EXPECT_TRUE(std::isfinite(report.extraction_slope_n(400)));
}

}  // namespace
}  // namespace rmood
