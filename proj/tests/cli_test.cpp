// Drives the rmood executable end to end. RMOOD_CLI is the binary's path.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"
#include "oracles.hpp"
#include "rmood/core.hpp"
#include "rmood/episode_io.hpp"
#include "rmood/fileio.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("rmood_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  CliResult cli(const std::string& args, const std::string& env = "") {
    const auto out = root_ / "stdout.txt";
    const auto err = root_ / "stderr.txt";
    const std::string cmd = env + " " + RMOOD_CLI + " " + args + " >" + out.string() + " 2>" +
                            err.string();
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = rmood::read_file(out);
    r.err = rmood::read_file(err);
    return r;
  }

  static std::size_t lines(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) n += !line.empty();
    return n;
  }

  static nlohmann::json error_record(const CliResult& r) {
    const auto last = r.err.substr(r.err.rfind('{', r.err.find("\"error\"")));
    return nlohmann::json::parse(last);
  }

  fs::path root_;
};

constexpr const char* kTiny =
    "--scenario cartpole-arno-strong-ar1 --train-episodes 6 --validation-episodes 4 "
    "--test-episodes 5 --length 60 --trees 20";

TEST_F(CliTest, GenerateDefaultsToFortyFiveTrainingEpisodes) {
  const auto ws = root_ / "ws";
  const auto r = cli("generate --out " + ws.string() + " --test-episodes 10");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto dir = ws / "cartpole-arno-medium-ar1" / "seed_0";
  EXPECT_EQ(lines(dir / "train.jsonl"), 45u);
  EXPECT_EQ(lines(dir / "validation.jsonl"), 100u);
  EXPECT_EQ(lines(dir / "test.jsonl"), 10u);
  const auto manifest = nlohmann::json::parse(rmood::read_file(ws / "manifest.json"));
  EXPECT_EQ(manifest["config"]["episodes"]["train"], 45);
  EXPECT_EQ(manifest["runs"][0]["spec"]["kind"], "arno");
}

TEST_F(CliTest, RefusesToOverwriteWithoutForce) {
  const auto ws = root_ / "ws";
  ASSERT_EQ(cli("generate --out " + ws.string() + " " + kTiny).code, 0);
  const auto again = cli("generate --out " + ws.string() + " " + kTiny);
  EXPECT_EQ(again.code, 8);
  const auto record = error_record(again);
  EXPECT_EQ(record["error"]["type"], "refused");
  EXPECT_EQ(record["error"]["code"], 8);
  EXPECT_EQ(cli("generate --force --out " + ws.string() + " " + kTiny).code, 0);
}

TEST_F(CliTest, PipelineIsByteIdenticalAcrossRuns) {
  std::string results[2];
  for (int k = 0; k < 2; ++k) {
    const auto ws = root_ / ("ws" + std::to_string(k));
    ASSERT_EQ(cli("generate --out " + ws.string() + " " + kTiny).code, 0);
    // Later stages read everything from the manifest.
    for (const char* stage : {"train", "score", "eval"}) {
      const auto r = cli(std::string(stage) + " --out " + ws.string());
      ASSERT_EQ(r.code, 0) << stage << ": " << r.err;
    }
    results[k] = rmood::read_file(ws / "results.csv");
    EXPECT_TRUE(fs::exists(ws / "summary.json"));
    EXPECT_TRUE(fs::exists(ws / "cartpole-arno-strong-ar1/seed_0/scores/test_004.csv"));
  }
  EXPECT_EQ(results[0], results[1]);
  EXPECT_NE(results[0].find("cartpole-arno-strong-ar1,cartpole,arno,strong,1,full,0,"),
            std::string::npos);
}

TEST_F(CliTest, StageErrorsHaveDistinctExitCodes) {
  const auto ws = root_ / "ws";
  // No workspace yet.
  EXPECT_EQ(cli("train --out " + ws.string()).code, 4);
  ASSERT_EQ(cli("generate --out " + ws.string() + " " + kTiny).code, 0);
  // Scoring before training: missing model file.
  const auto missing = cli("score --out " + ws.string());
  EXPECT_EQ(missing.code, 4);
  EXPECT_EQ(error_record(missing)["error"]["command"], "score");

  ASSERT_EQ(cli("train --out " + ws.string()).code, 0);
  const auto run = ws / "cartpole-arno-strong-ar1" / "seed_0";

  // A model whose version tag is wrong.
  auto model = nlohmann::json::parse(rmood::read_file(run / "model.json"));
  const auto good_model = model;
  model["version"] = 99;
  rmood::write_file_atomic(run / "model.json", model.dump());
  EXPECT_EQ(cli("score --out " + ws.string()).code, 7);
  rmood::write_file_atomic(run / "model.json", good_model.dump());

  // Test episodes with the wrong number of dimensions.
  const auto original = rmood::read_file(run / "test.jsonl");
  rmood::write_episodes(run / "test.jsonl",
                        {rmood::EpisodeMatrix(2, 60, std::vector<double>(120, 0.0), 30)});
  EXPECT_EQ(cli("score --out " + ws.string()).code, 5);

  // Malformed episode file.
  rmood::write_file_atomic(run / "test.jsonl", "{\"n\": 4,\n");
  EXPECT_EQ(cli("score --out " + ws.string()).code, 6);
  rmood::write_file_atomic(run / "test.jsonl", original);
  EXPECT_EQ(cli("score --out " + ws.string()).code, 0);
}

TEST_F(CliTest, ConfigAndUsageErrors) {
  const auto cfg = root_ / "bad.json";
  rmood::write_file_atomic(cfg, R"({"seeds": [1], "detectr": {}})");
  const auto r = cli("generate --out " + (root_ / "ws").string() + " --config " + cfg.string());
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(error_record(r)["error"]["message"].get<std::string>().find("detectr"),
            std::string::npos);
  EXPECT_FALSE(fs::exists(root_ / "ws"));  // nothing written on failure

  EXPECT_EQ(cli("generate --out x --scenario cartpole-meteor-strong").code, 3);
  EXPECT_EQ(cli("generate --out x --variant both").code, 3);
  EXPECT_EQ(cli("frobnicate --out x").code, 2);
  EXPECT_EQ(cli("generate").code, 2);  // --out is required
  EXPECT_EQ(cli("--help").code, 0);
}

TEST_F(CliTest, FlagsBeatEnvironmentBeatConfig) {
  const auto cfg = root_ / "cfg.json";
  rmood::write_file_atomic(cfg, R"({"seeds": [7], "episodes": {"train": 3, "validation": 2,
                                   "test": 2, "length": 40, "onset_min": 10, "onset_max": 20}})");
  const auto ws1 = root_ / "a";
  ASSERT_EQ(cli("generate --config " + cfg.string() + " --out " + ws1.string()).code, 0);
  EXPECT_TRUE(fs::exists(ws1 / "cartpole-arno-medium-ar1" / "seed_7"));

  const auto ws2 = root_ / "b";
  ASSERT_EQ(cli("generate --config " + cfg.string(), "RMOOD_SEED=11 RMOOD_OUT=" + ws2.string())
                .code,
            0);
  EXPECT_TRUE(fs::exists(ws2 / "cartpole-arno-medium-ar1" / "seed_11"));

  const auto ws3 = root_ / "c";
  ASSERT_EQ(cli("generate --seed 13 --config " + cfg.string() + " --out " + ws3.string(),
                  "RMOOD_SEED=11")
                .code,
            0);
  EXPECT_TRUE(fs::exists(ws3 / "cartpole-arno-medium-ar1" / "seed_13"));

  // The manifest reproduces the dataset byte for byte.
  const auto ws4 = root_ / "d";
  ASSERT_EQ(cli("generate --config " + (ws1 / "manifest.json").string() + " --out " +
                  ws4.string())
                .code,
            0);
  const auto run = fs::path("cartpole-arno-medium-ar1") / "seed_7";
  for (const char* split : {"train.jsonl", "validation.jsonl", "test.jsonl"}) {
    EXPECT_EQ(rmood::read_file(ws1 / run / split), rmood::read_file(ws4 / run / split)) << split;
  }
}

TEST_F(CliTest, EvalReproducesGoldenAuroc) {
  // Hand-written scores with ties; the expected value comes from the pairwise
  // oracle.
  const auto ws = root_ / "ws";
  const auto run = ws / "cartpole-arno-strong-ar1" / "seed_0" / "scores";
  fs::create_directories(run);
  rmood::write_file_atomic(ws / "manifest.json",
                           R"({"manifest_version": 1, "config": {
                                 "scenarios": ["cartpole-arno-strong-ar1"], "seeds": [0],
                                 "episodes": {"length": 14, "onset_min": 10, "onset_max": 12}},
                               "runs": []})");
  const std::vector<std::vector<double>> scores{{0.40, 0.42, 0.45, 0.60, 0.55},
                                                {0.41, 0.45, 0.50, 0.45, 0.70}};
  const std::vector<std::size_t> onsets{12, 11};
  std::vector<rmood::EpisodeMatrix> test;
  std::vector<double> all;
  std::vector<std::uint8_t> labels;
  for (std::size_t e = 0; e < 2; ++e) {
    test.emplace_back(1, 14, std::vector<double>(14, 0.0), onsets[e]);
    std::string csv = "t,score\n";
    for (std::size_t i = 0; i < scores[e].size(); ++i) {
      const std::size_t t = 9 + i;
      std::ostringstream line;
      line << t << "," << scores[e][i] << "\n";
      csv += line.str();
      all.push_back(scores[e][i]);
      labels.push_back(t >= onsets[e]);
    }
    rmood::write_file_atomic(run / ("test_00" + std::to_string(e) + ".csv"), csv);
  }
  rmood::write_episodes(run.parent_path() / "test.jsonl", test);

  const auto r = cli("eval --out " + ws.string());
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream results(rmood::read_file(ws / "results.csv"));
  std::string header, row;
  std::getline(results, header);
  std::getline(results, row);
  std::vector<std::string> cols;
  std::stringstream ss(row);
  for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
  ASSERT_GT(cols.size(), 8u);
  const double expected = rmood::oracle::pairwise_auroc(all, labels);
  EXPECT_NEAR(std::stod(cols[8]), expected, 1e-9);
  EXPECT_NEAR(expected, 0.96, 1e-12);  // 24 of 25 pairs, two ties
}

}  // namespace
