#include <gtest/gtest.h>

#include "rmood/error.hpp"
#include "rmood/model_io.hpp"
#include "test_util.hpp"

namespace rmood {
namespace {

DetectorModel seeded_model() {
  DetectorConfig c;
  c.kernel = {1.5, 0.731};
  c.forest.n_trees = 30;
  c.forest.seed = 1234567890123ULL;
  auto model = train(testing::gaussian_episodes(12, 3, 80, 5), c);
  model.cusum = CusumParams{0.41, 0.013, 2.5};
  return model;
}

TEST(ModelIo, RoundTripScoresBitIdentical) {
  const auto model = seeded_model();
  const auto restored = load_model(save_model(model));
  ASSERT_EQ(restored.n_dims(), model.n_dims());
  for (std::size_t n = 0; n < model.n_dims(); ++n) {
    EXPECT_EQ(restored.forests[n], model.forests[n]);
  }
  EXPECT_EQ(restored.config.forest.seed, model.config.forest.seed);
  EXPECT_EQ(restored.config.kernel.sigma, model.config.kernel.sigma);
  ASSERT_TRUE(restored.cusum.has_value());
  EXPECT_EQ(restored.cusum->slack, 0.013);

  const auto probe = testing::gaussian_episode(3, 109, 77, 50, 1.0, 2.0);
  const auto a = score_episode(model, probe);
  const auto b = score_episode(restored, probe);
  ASSERT_EQ(a.scores.size(), 100u);
  EXPECT_EQ(a.scores, b.scores);
  // Saving again reproduces the same bytes.
  EXPECT_EQ(save_model(restored), save_model(model));
}

TEST(ModelIo, TruncatedPayload) {
  const auto bytes = save_model(seeded_model());
  EXPECT_THROW(load_model(bytes.substr(0, bytes.size() / 2)), LoadError);
  EXPECT_THROW(load_model(""), LoadError);
}

TEST(ModelIo, WrongVersion) {
  auto doc = nlohmann::json::parse(save_model(seeded_model()));
  doc["version"] = 2;
  EXPECT_THROW(load_model(doc.dump()), VersionError);
  doc.erase("version");
  EXPECT_THROW(load_model(doc.dump()), LoadError);
}

TEST(ModelIo, StructuralCorruption) {
  const auto doc = nlohmann::json::parse(save_model(seeded_model()));

  auto bad_link = doc;
  bad_link["forests"][0]["trees"][0]["left"][0] = 0;
  EXPECT_THROW(load_model(bad_link.dump()), LoadError);

  auto bad_count = doc;
  bad_count["n_dims"] = 4;
  EXPECT_THROW(load_model(bad_count.dump()), LoadError);

  auto bad_key = doc;
  bad_key["config"]["colour"] = "blue";
  EXPECT_THROW(load_model(bad_key.dump()), LoadError);

  auto bad_variant = doc;
  bad_variant["config"]["variant"] = "mean_only";
  EXPECT_THROW(load_model(bad_variant.dump()), LoadError);

  auto ragged = doc;
  ragged["forests"][1]["trees"][2]["split"].erase(0);
  EXPECT_THROW(load_model(ragged.dump()), LoadError);
}

TEST(DetectorConfigJson, DefaultsAndUnknownKeys) {
  const auto c = detector_config_from_json(nlohmann::json::object());
  EXPECT_EQ(c.window, 10u);
  EXPECT_EQ(c.kernel.scale, 1.5);
  const auto d = detector_config_from_json(
      {{"window", 5}, {"variant", "rbf_only"}, {"forest", {{"n_trees", 7}, {"max_depth", 3}}}});
  EXPECT_EQ(d.window, 5u);
  EXPECT_EQ(d.variant, FeatureVariant::kRbfOnly);
  EXPECT_EQ(d.forest.n_trees, 7u);
  EXPECT_EQ(d.forest.max_depth, 3u);
  EXPECT_THROW(detector_config_from_json({{"windw", 5}}), ConfigError);
  EXPECT_THROW(detector_config_from_json({{"forest", {{"trees", 5}}}}), ConfigError);
  EXPECT_THROW(detector_config_from_json({{"s", -1.0}}), ConfigError);
}

}  // namespace
}  // namespace rmood
