#include <gtest/gtest.h>

#include <algorithm>

#include "rmood/detector.hpp"
#include "rmood/error.hpp"
#include "rmood/eval.hpp"
#include "test_util.hpp"

namespace rmood {
namespace {

using testing::gaussian_episode;
using testing::gaussian_episodes;
using testing::integer_episode;

DetectorConfig small_config(FeatureVariant variant = FeatureVariant::kFull) {
  DetectorConfig c;
  c.kernel.sigma = 2.0;
  c.variant = variant;
  c.forest.n_trees = 25;
  c.forest.seed = 17;
  return c;
}

TEST(Train, PoolsPartitionedWindowsAcrossEpisodes) {
  const auto episodes = gaussian_episodes(45, 4, 100, 1);
  const auto config = small_config();
  for (std::size_t n = 0; n < 4; ++n) {
    EXPECT_EQ(training_features(episodes, n, config).rows(), 450u);
  }
  const auto model = train(episodes, config);
  ASSERT_EQ(model.n_dims(), 4u);
  for (const auto& f : model.forests) {
    EXPECT_EQ(f.dim, 2u);
    EXPECT_EQ(f.psi, 256u);
    EXPECT_EQ(f.trees.size(), 25u);
  }
}

TEST(Train, Errors) {
  const auto config = small_config();
  const std::vector<EpisodeMatrix> one{gaussian_episode(1, 10, 3)};
  EXPECT_THROW(train(one, config), InsufficientDataError);

  const std::vector<EpisodeMatrix> mixed{gaussian_episode(2, 50, 1), gaussian_episode(3, 50, 2)};
  EXPECT_THROW(train(mixed, config), ShapeError);

  const std::vector<EpisodeMatrix> dirty{gaussian_episode(2, 50, 1),
                                         gaussian_episode(2, 50, 2, 20)};
  EXPECT_THROW(train(dirty, config), ContaminationError);

  const std::vector<EpisodeMatrix> short_eps{gaussian_episode(1, 9, 1),
                                             gaussian_episode(1, 9, 2)};
  EXPECT_THROW(train(short_eps, config), SizeError);

  EXPECT_THROW(train({}, config), InsufficientDataError);
  auto bad = config;
  bad.window = 1;
  EXPECT_THROW(train(gaussian_episodes(3, 1, 20, 1), bad), ConfigError);
}

TEST(Train, AblationVariantsHaveOneDimensionalForests) {
  for (auto v : {FeatureVariant::kMeanOnly, FeatureVariant::kRbfOnly}) {
    const auto model = train(gaussian_episodes(5, 2, 40, 4), small_config(v));
    for (const auto& f : model.forests) EXPECT_EQ(f.dim, 1u);
  }
}

TEST(ScoreStep, SingleDimensionEqualsForestScore) {
  const auto model = train(gaussian_episodes(10, 1, 50, 5), small_config());
  const auto probe = gaussian_episode(1, 30, 99);
  for (std::size_t t = 9; t < 30; ++t) {
    const auto window = window_at(probe, t, 10);
    const auto f = extract_features(window.row(0), model.config.kernel);
    EXPECT_EQ(score_step(model, window), anomaly_score(model.forests[0], f.span()));
  }
}

TEST(ScoreStep, ConstantForestsAverageToHalf) {
  DetectorModel model;
  model.config = small_config();
  IsolationForest constant;
  constant.psi = 8;
  constant.dim = 2;
  constant.trees.assign(3, IsolationTree{{TreeNode{.size = 8}}});
  model.forests = {constant, constant};
  const auto window = window_at(gaussian_episode(2, 12, 1), 11, 10);
  EXPECT_EQ(score_step(model, window), 0.5);
}

TEST(ScoreStep, MatchesCompositionalRecomputation) {
  const auto model = train(gaussian_episodes(20, 3, 60, 6), small_config());
  const auto probe = gaussian_episode(3, 40, 7, 20, 1.5, 2.0);
  for (std::size_t t = 9; t < 40; ++t) {
    const auto window = window_at(probe, t, 10);
    double total = 0.0;
    for (std::size_t n = 0; n < 3; ++n) {
      std::vector<double> row(probe.row(n).begin() + static_cast<std::ptrdiff_t>(t - 9),
                              probe.row(n).begin() + static_cast<std::ptrdiff_t>(t + 1));
      const double mean = [&] {
        double s = 0.0;
        for (double v : row) s += v;
        return s / 10.0;
      }();
      double d = 0.0;
      for (std::size_t i = 0; i < 9; ++i) d += (row[9] - row[i]) * (row[9] - row[i]);
      const std::vector<double> features{1.5 * std::exp(-d / 4.0), mean};
      total += anomaly_score(model.forests[n], features);
    }
    EXPECT_NEAR(score_step(model, window), total / 3.0, 1e-12);
  }
}

TEST(ScoreStep, ShapeErrors) {
  const auto model = train(gaussian_episodes(5, 2, 40, 4), small_config());
  EXPECT_THROW(score_step(model, window_at(gaussian_episode(3, 20, 1), 19, 10)), ShapeError);
  EXPECT_THROW(score_step(model, window_at(gaussian_episode(2, 20, 1), 19, 5)), ShapeError);
  EXPECT_THROW(score_episode(model, gaussian_episode(3, 20, 1)), ShapeError);
  EXPECT_THROW(score_episode(model, gaussian_episode(2, 9, 1)), SizeError);
}

TEST(ScoreEpisode, LengthsAndAlignment) {
  const auto model = train(gaussian_episodes(5, 2, 40, 4), small_config());
  const auto exact = score_episode(model, gaussian_episode(2, 10, 1));
  EXPECT_EQ(exact.scores.size(), 1u);
  EXPECT_EQ(exact.first_scored, 9u);

  const auto probe = gaussian_episode(2, 100, 2);
  const auto series = score_episode(model, probe);
  ASSERT_EQ(series.scores.size(), 91u);
  for (std::size_t i = 0; i < series.scores.size(); i += 13) {
    EXPECT_EQ(series.scores[i], score_step(model, window_at(probe, series.timestep(i), 10)));
  }
  for (double a : series.scores) {
    EXPECT_GT(a, 0.0);
    EXPECT_LT(a, 1.0);
  }
}

TEST(ScoreEpisode, ConstantEpisodesScoreIdentically) {
  std::vector<EpisodeMatrix> train_eps;
  for (int i = 0; i < 4; ++i) {
    train_eps.emplace_back(2, 30, std::vector<double>(60, 1.25));
  }
  const auto model = train(train_eps, small_config());
  const auto series = score_episode(model, EpisodeMatrix(2, 50, std::vector<double>(100, 1.25)));
  for (double a : series.scores) EXPECT_EQ(a, series.scores.front());
}

TEST(DetectorProperties, DimensionPermutationInvariance) {
  const auto config = small_config();
  const auto train_eps = gaussian_episodes(10, 3, 60, 8);
  const auto probe = gaussian_episode(3, 60, 9, 30, 1.0, 2.0);
  const std::vector<std::size_t> perm{2, 0, 1};
  auto permute = [&](const EpisodeMatrix& e) {
    std::vector<std::vector<double>> rows;
    for (std::size_t p : perm) rows.emplace_back(e.row(p).begin(), e.row(p).end());
    return EpisodeMatrix::from_rows(rows, e.onset());
  };
  std::vector<EpisodeMatrix> permuted_train;
  for (const auto& e : train_eps) permuted_train.push_back(permute(e));
  const auto a = score_episode(train(train_eps, config), probe);
  const auto b = score_episode(train(permuted_train, config), permute(probe));
  ASSERT_EQ(a.scores.size(), b.scores.size());
  for (std::size_t i = 0; i < a.scores.size(); ++i) EXPECT_NEAR(a.scores[i], b.scores[i], 1e-12);
}

TEST(DetectorProperties, MeanOnlyIgnoresWithinWindowOrder) {
  std::vector<EpisodeMatrix> train_eps;
  for (std::uint64_t s = 0; s < 8; ++s) train_eps.push_back(integer_episode(2, 50, s));
  const auto model = train(train_eps, small_config(FeatureVariant::kMeanOnly));
  const auto probe = integer_episode(2, 40, 100);
  Rng rng(5);
  for (std::size_t t = 9; t < 40; ++t) {
    const auto window = window_at(probe, t, 10);
    std::vector<double> shuffled;
    for (std::size_t n = 0; n < 2; ++n) {
      std::vector<double> row(window.row(n).begin(), window.row(n).end());
      for (std::size_t i = row.size() - 1; i > 0; --i) std::swap(row[i], row[rng.index(i + 1)]);
      shuffled.insert(shuffled.end(), row.begin(), row.end());
    }
    EXPECT_EQ(score_step(model, Window(2, 10, shuffled, t)), score_step(model, window));
  }
}

TEST(DetectorProperties, RbfOnlyIgnoresConstantOffsets) {
  auto shifted = [](const EpisodeMatrix& e, double c) {
    auto data = e.data();
    for (std::size_t t = 0; t < e.n_steps(); ++t) data[t] += c;  // dimension 0 only
    return EpisodeMatrix(e.n_dims(), e.n_steps(), data);
  };
  std::vector<EpisodeMatrix> train_a, train_b;
  for (std::uint64_t s = 0; s < 8; ++s) {
    train_a.push_back(integer_episode(2, 50, s));
    train_b.push_back(shifted(train_a.back(), 37.0));
  }
  const auto config = small_config(FeatureVariant::kRbfOnly);
  const auto probe = integer_episode(2, 40, 55);
  const auto a = score_episode(train(train_a, config), probe);
  const auto b = score_episode(train(train_b, config), shifted(probe, 37.0));
  EXPECT_EQ(a.scores, b.scores);
}

TEST(DetectorProperties, Deterministic) {
  const auto train_eps = gaussian_episodes(6, 2, 50, 21);
  const auto probe = gaussian_episode(2, 50, 22, 25, 2.0);
  const auto a = score_episode(train(train_eps, small_config()), probe);
  const auto b = score_episode(train(train_eps, small_config()), probe);
  EXPECT_EQ(a.scores, b.scores);
}

class SigmaTuningTest : public ::testing::Test {
 protected:
  void SetUp() override {
    train_ = gaussian_episodes(20, 1, 100, 31);
    for (std::uint64_t i = 0; i < 10; ++i) {
      // Roughness triples after the onset; the level stays put.
      validation_.push_back(gaussian_episode(1, 100, derive_seed(32, i), 40, 0.0, 3.0));
    }
    config_ = small_config(FeatureVariant::kRbfOnly);
  }
  std::vector<EpisodeMatrix> train_, validation_;
  DetectorConfig config_;
};

TEST_F(SigmaTuningTest, SingleValueGrid) {
  const std::vector<double> grid{0.7};
  EXPECT_EQ(tune_sigma(train_, validation_, grid, config_).sigma, 0.7);
}

TEST_F(SigmaTuningTest, PicksTheSeparatingBandwidth) {
  // sigma = 0.01 underflows every similarity to zero, leaving no signal.
  const std::vector<double> grid{0.01, 8.0};
  const auto result = tune_sigma(train_, validation_, grid, config_);
  EXPECT_EQ(result.sigma, 8.0);
  ASSERT_EQ(result.table.size(), 2u);
  EXPECT_EQ(result.table[0].second, 0.5);
  EXPECT_GT(result.table[1].second, 0.8);
}

TEST_F(SigmaTuningTest, TiesGoToTheSmallerSigma) {
  const std::vector<double> grid{0.01, 0.001};
  const auto result = tune_sigma(train_, validation_, grid, config_);
  EXPECT_EQ(result.table[0].second, result.table[1].second);
  EXPECT_EQ(result.sigma, 0.001);
}

TEST_F(SigmaTuningTest, Errors) {
  EXPECT_THROW(tune_sigma(train_, validation_, std::vector<double>{}, config_), ConfigError);
  EXPECT_THROW(tune_sigma(train_, train_, std::vector<double>{1.0}, config_), DataError);
}

TEST(DefaultSigmaGrid, ScalesWithDataSpread) {
  const auto eps = gaussian_episodes(10, 2, 200, 3);
  const auto grid = default_sigma_grid(eps);
  ASSERT_EQ(grid.size(), 7u);
  EXPECT_NEAR(grid[3], 1.0, 0.1);  // unit-variance data
  EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
}

TEST(CalibrateCusum, ControlsFalseAlarmsOnCleanData) {
  const auto config = small_config();
  const auto train_eps = gaussian_episodes(20, 2, 100, 40);
  const auto heldout = gaussian_episodes(40, 2, 100, 41);
  const auto model = train(train_eps, config);
  const auto params = calibrate_cusum(model, train_eps, heldout, 0.1);
  EXPECT_GT(params.threshold, 0.0);
  EXPECT_GT(params.target, 0.0);
  EXPECT_LT(params.target, 1.0);
  EXPECT_GE(params.slack, 0.0);
  std::size_t alarms = 0;
  for (const auto& e : heldout) {
    const auto s = score_episode(model, e);
    alarms += cusum_run(s.scores, s.first_scored, params).final_state.alarmed;
  }
  EXPECT_LE(alarms, 4u);

  const std::vector<EpisodeMatrix> dirty{gaussian_episode(2, 100, 1, 50, 3.0)};
  EXPECT_THROW(calibrate_cusum(model, train_eps, dirty, 0.1), ContaminationError);
}

}  // namespace
}  // namespace rmood
