#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rmood/benchmark.hpp"
#include "rmood/detector.hpp"
#include "rmood/eval.hpp"

// Pipeline stages behind the rmood command-line tool. A workspace directory
// holds everything one experiment produces:
//
//   manifest.json                      resolved RunConfig plus the anomaly grid
//   <scenario>/seed_<s>/train.jsonl    clean training episodes
//   <scenario>/seed_<s>/validation.jsonl
//   <scenario>/seed_<s>/test.jsonl
//   <scenario>/seed_<s>/model.json     written by train
//   <scenario>/seed_<s>/scores/test_<j>.csv   written by score
//   results.csv, summary.json          written by eval
namespace rmood::app {

struct CusumSettings {
  double false_alarm_rate = 0.05;
  double slack_factor = 0.25;
};

struct BenchSettings {
  std::vector<std::size_t> n_dims{4, 8, 16};
  std::vector<std::size_t> n_steps{10000, 20000, 40000};
  // The scaling grid is the N sweep at anchor_steps plus the T sweep at
  // anchor_dims, not the full cross product.
  std::size_t anchor_dims = 8;
  std::size_t anchor_steps = 10000;
  std::size_t repeats = 5;
  double min_batch_seconds = 0.02;
  // Training-time protocol: `train_episodes` x `train_length` x `train_dims`.
  std::size_t train_dims = 23;
  std::size_t train_episodes = 45;
  std::size_t train_length = 100;
  std::size_t train_repeats = 3;
};

struct RunConfig {
  DetectorConfig detector{};
  SuiteCounts counts{};
  std::vector<Scenario> scenarios{Scenario{}};
  std::vector<std::uint64_t> seeds{0};
  // When false the detector's sigma is used as is.
  bool tune_sigma = true;
  // Empty means the data-scaled default grid.
  std::vector<double> sigma_grid;
  // False-positive rate that sets the detection-delay threshold.
  double delay_fpr = 0.05;
  CusumSettings cusum{};
  std::vector<FeatureVariant> ablation_variants{FeatureVariant::kFull, FeatureVariant::kRbfOnly,
                                                FeatureVariant::kMeanOnly};
  BenchSettings bench{};
  std::size_t jobs = 1;

  void validate() const;
};

/// Unknown keys are rejected at every level. "scenarios" may be a list or the
/// string "noise_grid".
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);

/// Accepts either a bare RunConfig document or a manifest written by generate.
RunConfig load_run_config(const std::filesystem::path& path);

/// Parses ids such as "cartpole-arno-strong-ar1" or "linear6-action_factor-severe".
Scenario scenario_from_id(const std::string& id);

/// Directory of one (scenario, seed) run inside a workspace.
std::filesystem::path run_dir(const std::filesystem::path& workspace, const Scenario& scenario,
                              std::uint64_t seed);

/// Manifest: {"manifest_version": 1, "config": RunConfig, "runs": [...]} where
/// each run lists its directory, scenario id, seed and the anomaly spec
/// (without onset) that its labeled episodes carry.
nlohmann::json make_manifest(const RunConfig& config);

struct StageOptions {
  std::filesystem::path workspace;
  bool force = false;
};

void cmd_generate(const RunConfig& config, const StageOptions& options);

struct TrainSummary {
  std::size_t runs = 0;
  double total_seconds = 0.0;
};
/// Trains one model per run; sigma is tuned on the validation split when
/// enabled, and the CUSUM layer is calibrated on the clean pre-onset prefixes
/// of the validation episodes. Wall times go to train_timing.csv.
TrainSummary cmd_train(const RunConfig& config, const StageOptions& options);

void cmd_score(const RunConfig& config, const StageOptions& options);

/// Writes results.csv (one row per scenario-seed) and summary.json.
void cmd_eval(const RunConfig& config, const StageOptions& options);

/// Generates every scenario-seed in memory and writes ablation.csv with one
/// row per (scenario, seed, variant) plus ablation_summary.json.
void cmd_ablate(const RunConfig& config, const StageOptions& options);

/// Scaling table (bench.csv) and the training-time protocol
/// (bench_training.json). Always sequential.
void cmd_bench(const RunConfig& config, const StageOptions& options);

/// Sigma grid search on each run's validation split; writes sigma.csv per run.
void cmd_tune_sigma(const RunConfig& config, const StageOptions& options);

// Lower-level pieces shared with the acceptance suite.

struct RunResult {
  Scenario scenario;
  std::uint64_t seed = 0;
  FeatureVariant variant = FeatureVariant::kFull;
  double sigma = 0.0;
  PooledAuroc auroc;
  std::size_t detected = 0;
  std::optional<double> delay_mean;
  std::size_t cusum_alarms = 0;
  std::size_t cusum_false_alarms = 0;
  std::optional<double> cusum_delay_mean;
  std::size_t episodes = 0;
};

/// Train (with optional sigma tuning), score and evaluate one run in memory.
DetectorModel fit_run(const RunConfig& config, const DetectorConfig& detector,
                      const ScenarioData& data);
RunResult evaluate_run(const RunConfig& config, const DetectorModel& model,
                       const std::vector<EpisodeMatrix>& test);

std::string results_csv_header();
std::string results_csv_row(const RunResult& r);

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. The first failure
/// by index is rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace rmood::app
