// rmood: generate benchmark suites, train and score the detector, evaluate,
// ablate and time it.
//
// Settings come from (lowest to highest precedence) built-in defaults, the
// --config JSON (or the workspace manifest), RMOOD_* environment variables,
// and command-line flags.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rmood/app.hpp"
#include "rmood/error.hpp"

namespace fs = std::filesystem;
using rmood::app::RunConfig;

namespace {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kConfig = 3,
  kIo = 4,
  kShape = 5,
  kData = 6,
  kLoad = 7,
  kRefused = 8,
  kMetric = 9,
};

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  bool force = false;

  std::vector<std::string> scenarios;
  std::optional<std::size_t> train_episodes;
  std::optional<std::size_t> validation_episodes;
  std::optional<std::size_t> test_episodes;
  std::optional<std::size_t> length;
  std::optional<std::string> variant;
  std::optional<double> sigma;
  bool no_tune = false;
  std::optional<std::size_t> trees;
  std::optional<std::size_t> window;
  std::optional<double> fpr;
  std::optional<std::size_t> repeats;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration or manifest")
      ->envname("RMOOD_CONFIG");
  cmd->add_option("--out", f.out, "Workspace / output directory")
      ->envname("RMOOD_OUT")
      ->required();
  cmd->add_option("--seed", f.seed, "Run a single seed instead of the configured list")
      ->envname("RMOOD_SEED");
  cmd->add_option("--jobs", f.jobs, "Scenario-level worker threads (0 = all cores)")
      ->envname("RMOOD_JOBS");
  cmd->add_flag("--force", f.force, "Overwrite existing outputs")->envname("RMOOD_FORCE");

  cmd->add_option("--scenario", f.scenarios,
                  "Scenario ids, e.g. cartpole-arno-strong-ar1, or noise_grid")
      ->delimiter(',');
  cmd->add_option("--train-episodes", f.train_episodes);
  cmd->add_option("--validation-episodes", f.validation_episodes);
  cmd->add_option("--test-episodes", f.test_episodes);
  cmd->add_option("--length", f.length, "Episode length T");
  cmd->add_option("--variant", f.variant, "full | rbf_only | mean_only");
  cmd->add_option("--sigma", f.sigma, "Fixed RBF bandwidth (disables tuning)");
  cmd->add_flag("--no-tune", f.no_tune, "Keep the configured sigma");
  cmd->add_option("--trees", f.trees, "Trees per forest");
  cmd->add_option("--window", f.window, "Window length w");
  cmd->add_option("--fpr", f.fpr, "False-positive rate of the delay threshold");
  cmd->add_option("--repeats", f.repeats, "Timing repeats for bench");
}

RunConfig resolve(const std::string& command, const Flags& f) {
  RunConfig c;
  const fs::path manifest = fs::path(f.out) / "manifest.json";
  const bool reads_workspace = command == "train" || command == "score" || command == "eval" ||
                               command == "tune-sigma";
  if (!f.config.empty()) {
    c = rmood::app::load_run_config(f.config);
  } else if (reads_workspace) {
    if (!fs::exists(manifest)) {
      throw rmood::IoError(manifest.string() + " not found; run generate or pass --config");
    }
    c = rmood::app::load_run_config(manifest);
  }

  if (!f.scenarios.empty()) {
    c.scenarios.clear();
    for (const auto& id : f.scenarios) {
      if (id == "noise_grid") {
        const auto grid = rmood::noise_grid();
        c.scenarios.insert(c.scenarios.end(), grid.begin(), grid.end());
      } else {
        c.scenarios.push_back(rmood::app::scenario_from_id(id));
      }
    }
  }
  if (f.seed) c.seeds = {*f.seed};
  if (f.jobs) c.jobs = *f.jobs;
  if (f.train_episodes) c.counts.train = *f.train_episodes;
  if (f.validation_episodes) c.counts.validation = *f.validation_episodes;
  if (f.test_episodes) c.counts.test = *f.test_episodes;
  if (f.length) c.counts.length = *f.length;
  if (f.variant) c.detector.variant = rmood::parse_variant(*f.variant);
  if (f.sigma) {
    c.detector.kernel.sigma = *f.sigma;
    c.tune_sigma = false;
  }
  if (f.no_tune) c.tune_sigma = false;
  if (f.trees) c.detector.forest.n_trees = *f.trees;
  if (f.window) c.detector.window = *f.window;
  if (f.fpr) c.delay_fpr = *f.fpr;
  if (f.repeats) c.bench.repeats = *f.repeats;
  c.validate();
  return c;
}

int exit_code_for(const std::exception& e, std::string& type) {
  // Most specific types first.
  if (dynamic_cast<const rmood::RefusalError*>(&e)) return type = "refused", kRefused;
  if (dynamic_cast<const rmood::ConfigError*>(&e)) return type = "config", kConfig;
  if (dynamic_cast<const rmood::IoError*>(&e)) return type = "io", kIo;
  if (dynamic_cast<const rmood::LoadError*>(&e)) return type = "load", kLoad;
  if (dynamic_cast<const rmood::ShapeError*>(&e) || dynamic_cast<const rmood::SizeError*>(&e) ||
      dynamic_cast<const rmood::BoundsError*>(&e)) {
    return type = "shape", kShape;
  }
  if (dynamic_cast<const rmood::DataError*>(&e)) return type = "data", kData;
  if (dynamic_cast<const rmood::UndefinedMetricError*>(&e)) return type = "metric", kMetric;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return type = "io", kIo;
  return type = "internal", kInternal;
}

int report(const std::string& command, const std::string& type, int code,
           const std::string& message) {
  const nlohmann::json record = {
      {"error", {{"command", command}, {"type", type}, {"code", code}, {"message", message}}}};
  std::cerr << record.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Isolation-forest OOD detection for multivariate episodes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rmood 0.1.0");

  Flags flags;
  std::string command;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"generate", "Write train/validation/test episode suites and a manifest"},
      {"train", "Fit one detector per scenario-seed (tunes sigma, calibrates CUSUM)"},
      {"score", "Write per-episode score CSVs (t, score, cusum, alarm)"},
      {"eval", "Write results.csv and summary.json from the score CSVs"},
      {"ablate", "Compare full, rbf_only and mean_only feature variants"},
      {"bench", "Scaling table and training-time measurement"},
      {"tune-sigma", "Grid-search the RBF bandwidth on the validation split"},
  };
  for (const auto& [name, help] : commands) {
    auto* cmd = app.add_subcommand(name, help);
    add_common(cmd, flags);
    cmd->callback([&command, name = name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "rmood: " << e.what() << " (see --help)\n";
    return report(command.empty() ? "rmood" : command, "usage", kUsage, e.what());
  }

  try {
    const RunConfig config = resolve(command, flags);
    const rmood::app::StageOptions options{fs::absolute(flags.out), flags.force};
    if (command == "generate") {
      rmood::app::cmd_generate(config, options);
    } else if (command == "train") {
      rmood::app::cmd_train(config, options);
    } else if (command == "score") {
      rmood::app::cmd_score(config, options);
    } else if (command == "eval") {
      rmood::app::cmd_eval(config, options);
    } else if (command == "ablate") {
      rmood::app::cmd_ablate(config, options);
    } else if (command == "bench") {
      rmood::app::cmd_bench(config, options);
    } else if (command == "tune-sigma") {
      rmood::app::cmd_tune_sigma(config, options);
    }
  } catch (const std::exception& e) {
    std::string type;
    const int code = exit_code_for(e, type);
    return report(command, type, code, e.what());
  }
  return kOk;
}
