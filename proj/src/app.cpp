#include "rmood/app.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "rmood/episode_io.hpp"
#include "rmood/error.hpp"
#include "rmood/fileio.hpp"
#include "rmood/model_io.hpp"

namespace rmood::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kManifestVersion = 1;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double v, int precision = 10) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : ""; }

template <typename T>
T get_checked(const json& j, const char* what) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid value for '") + what + "': " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

BenchSettings bench_from_json(const json& j) {
  reject_unknown(j,
                 {"n_dims", "n_steps", "anchor_dims", "anchor_steps", "repeats",
                  "min_batch_seconds", "train_dims", "train_episodes", "train_length",
                  "train_repeats"},
                 "bench");
  BenchSettings b;
  if (j.contains("n_dims")) b.n_dims = get_checked<std::vector<std::size_t>>(j["n_dims"], "n_dims");
  if (j.contains("n_steps")) {
    b.n_steps = get_checked<std::vector<std::size_t>>(j["n_steps"], "n_steps");
  }
  if (j.contains("anchor_dims")) b.anchor_dims = get_checked<std::size_t>(j["anchor_dims"], "anchor_dims");
  if (j.contains("anchor_steps")) {
    b.anchor_steps = get_checked<std::size_t>(j["anchor_steps"], "anchor_steps");
  }
  if (j.contains("repeats")) b.repeats = get_checked<std::size_t>(j["repeats"], "repeats");
  if (j.contains("min_batch_seconds")) {
    b.min_batch_seconds = get_checked<double>(j["min_batch_seconds"], "min_batch_seconds");
  }
  if (j.contains("train_dims")) b.train_dims = get_checked<std::size_t>(j["train_dims"], "train_dims");
  if (j.contains("train_episodes")) {
    b.train_episodes = get_checked<std::size_t>(j["train_episodes"], "train_episodes");
  }
  if (j.contains("train_length")) {
    b.train_length = get_checked<std::size_t>(j["train_length"], "train_length");
  }
  if (j.contains("train_repeats")) {
    b.train_repeats = get_checked<std::size_t>(j["train_repeats"], "train_repeats");
  }
  return b;
}

json to_json(const BenchSettings& b) {
  return {{"n_dims", b.n_dims},
          {"n_steps", b.n_steps},
          {"anchor_dims", b.anchor_dims},
          {"anchor_steps", b.anchor_steps},
          {"repeats", b.repeats},
          {"min_batch_seconds", b.min_batch_seconds},
          {"train_dims", b.train_dims},
          {"train_episodes", b.train_episodes},
          {"train_length", b.train_length},
          {"train_repeats", b.train_repeats}};
}

std::vector<std::pair<std::size_t, std::size_t>> bench_cells(const BenchSettings& b) {
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  auto add = [&](std::size_t n, std::size_t t) {
    if (std::find(cells.begin(), cells.end(), std::pair{n, t}) == cells.end()) {
      cells.emplace_back(n, t);
    }
  };
  for (std::size_t n : b.n_dims) add(n, b.anchor_steps);
  for (std::size_t t : b.n_steps) add(b.anchor_dims, t);
  return cells;
}

struct RunKey {
  Scenario scenario;
  std::uint64_t seed;
};

std::vector<RunKey> run_keys(const RunConfig& config) {
  std::vector<RunKey> out;
  for (const auto& s : config.scenarios) {
    for (auto seed : config.seeds) out.push_back({s, seed});
  }
  return out;
}

void refuse_if_exists(const fs::path& path, bool force) {
  if (!force && fs::exists(path)) {
    throw RefusalError(path.string() + " already exists (use --force to overwrite)");
  }
}

std::vector<EpisodeMatrix> read_split(const fs::path& dir, const char* split) {
  const auto path = dir / (std::string(split) + ".jsonl");
  if (!fs::exists(path)) throw IoError("missing " + path.string() + " (run generate first)");
  return read_episodes(path);
}

std::string episode_file_name(std::size_t j, std::size_t count) {
  const std::size_t width = std::max<std::size_t>(3, std::to_string(count).size());
  std::string idx = std::to_string(j);
  return "test_" + std::string(width - std::min(width, idx.size()), '0') + idx + ".csv";
}

// Per-episode score file contents, as written by score and read by eval.
struct ScoredEpisode {
  std::size_t n_steps = 0;
  std::optional<std::size_t> onset;
  ScoreSeries series;
  std::vector<double> cusum;
  std::optional<std::size_t> alarm_time;
};

ScoredEpisode score_one(const DetectorModel& model, const EpisodeMatrix& episode) {
  ScoredEpisode out;
  out.n_steps = episode.n_steps();
  out.onset = episode.onset();
  out.series = score_episode(model, episode);
  if (model.cusum) {
    const auto trace = cusum_run(out.series.scores, out.series.first_scored, *model.cusum);
    out.cusum = trace.statistic;
    out.alarm_time = trace.final_state.alarm_time;
  }
  return out;
}

std::string score_csv(const ScoredEpisode& e) {
  std::string out = e.cusum.empty() ? "t,score\n" : "t,score,cusum,alarm\n";
  for (std::size_t i = 0; i < e.series.scores.size(); ++i) {
    const std::size_t t = e.series.timestep(i);
    out += std::to_string(t) + "," + num(e.series.scores[i], 17);
    if (!e.cusum.empty()) {
      const bool alarmed = e.alarm_time && t >= *e.alarm_time;
      out += "," + num(e.cusum[i], 17) + (alarmed ? ",1" : ",0");
    }
    out += '\n';
  }
  return out;
}

ScoredEpisode parse_score_csv(const std::string& text, const fs::path& path,
                              const EpisodeMatrix& episode) {
  ScoredEpisode out;
  out.n_steps = episode.n_steps();
  out.onset = episode.onset();
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || (line != "t,score" && line != "t,score,cusum,alarm")) {
    throw DataError(path.string() + ": unexpected score CSV header");
  }
  const bool with_cusum = line != "t,score";
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != (with_cusum ? 4u : 2u)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": wrong column count");
    }
    char* end = nullptr;
    const auto t = std::strtoull(cells[0].c_str(), &end, 10);
    const double score = std::strtod(cells[1].c_str(), &end);
    if (*end != '\0') {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad number");
    }
    if (out.series.scores.empty()) {
      out.series.first_scored = t;
    } else if (t != out.series.timestep(out.series.scores.size())) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": timesteps not contiguous");
    }
    out.series.scores.push_back(score);
    if (with_cusum) {
      out.cusum.push_back(std::strtod(cells[2].c_str(), &end));
      if (cells[3] == "1" && !out.alarm_time) out.alarm_time = t;
    }
  }
  if (out.series.scores.empty()) throw DataError(path.string() + ": no scores");
  if (out.series.first_scored + out.series.scores.size() != episode.n_steps()) {
    throw ShapeError(path.string() + ": score rows do not cover the episode of length " +
                     std::to_string(episode.n_steps()));
  }
  return out;
}

RunResult summarize(const RunConfig& config, const std::vector<ScoredEpisode>& scored) {
  if (scored.empty()) throw InsufficientDataError("no test episodes to evaluate");
  RunResult r;
  r.episodes = scored.size();
  std::vector<ScoreSeries> series;
  std::vector<LabelSeries> labels;
  std::vector<double> in_distribution;
  for (const auto& e : scored) {
    series.push_back(e.series);
    labels.push_back(labels_from_onset(e.n_steps, e.onset));
    const auto aligned = aligned_labels(e.series, labels.back());
    for (std::size_t i = 0; i < aligned.size(); ++i) {
      if (!aligned[i]) in_distribution.push_back(e.series.scores[i]);
    }
  }
  r.auroc = pooled_auroc(series, labels);

  const double threshold = calibrate_threshold(in_distribution, config.delay_fpr);
  double delay_sum = 0.0, cusum_sum = 0.0;
  std::size_t cusum_detected = 0;
  for (const auto& e : scored) {
    if (e.onset) {
      if (auto d = detection_delay(e.series, *e.onset, threshold)) {
        ++r.detected;
        delay_sum += static_cast<double>(*d);
      }
    }
    if (!e.alarm_time) continue;
    ++r.cusum_alarms;
    if (!e.onset || *e.alarm_time < *e.onset) {
      ++r.cusum_false_alarms;
    } else {
      ++cusum_detected;
      cusum_sum += static_cast<double>(*e.alarm_time - *e.onset);
    }
  }
  if (r.detected) r.delay_mean = delay_sum / static_cast<double>(r.detected);
  if (cusum_detected) r.cusum_delay_mean = cusum_sum / static_cast<double>(cusum_detected);
  return r;
}

struct Stats {
  double mean = 0.0;
  double std = 0.0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double sq = 0.0;
    for (double x : v) sq += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(v.size() - 1));
  }
  return s;
}

// Aggregates results per (scenario, variant) in first-seen order.
json summary_json(const std::vector<RunResult>& results) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<const RunResult*>> groups;
  for (const auto& r : results) {
    std::pair key{r.scenario.id(), std::string(to_string(r.variant))};
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  json rows = json::array();
  std::map<std::string, std::vector<double>> by_variant;
  for (const auto& key : order) {
    std::vector<double> auc, per_episode, delay;
    for (const auto* r : groups[key]) {
      auc.push_back(r->auroc.pooled);
      if (!std::isnan(r->auroc.per_episode_mean)) per_episode.push_back(r->auroc.per_episode_mean);
      if (r->delay_mean) delay.push_back(*r->delay_mean);
    }
    by_variant[key.second].insert(by_variant[key.second].end(), auc.begin(), auc.end());
    const auto a = stats(auc);
    const auto p = stats(per_episode);
    json row = {{"scenario", key.first},
                {"variant", key.second},
                {"seeds", auc.size()},
                {"auroc_mean", a.mean},
                {"auroc_std", a.std},
                {"auroc_episode_mean", p.mean}};
    row["delay_mean"] = delay.empty() ? json(nullptr) : json(stats(delay).mean);
    rows.push_back(std::move(row));
  }
  json overall = json::object();
  for (const auto& [variant, aucs] : by_variant) {
    const auto s = stats(aucs);
    overall[variant] = {{"auroc_mean", s.mean}, {"auroc_std", s.std}, {"runs", aucs.size()}};
  }
  return {{"scenarios", rows}, {"overall", overall}};
}

std::string results_csv(const std::vector<RunResult>& results) {
  std::string out = results_csv_header();
  for (const auto& r : results) out += results_csv_row(r);
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

void RunConfig::validate() const {
  detector.validate();
  counts.validate();
  if (scenarios.empty()) throw ConfigError("at least one scenario is required");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (counts.onset_min < detector.window) {
    throw ConfigError("onset_min must be >= window so every onset has a clean scored prefix");
  }
  for (double s : sigma_grid) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("sigma grid values must be > 0");
  }
  if (!(delay_fpr > 0.0 && delay_fpr < 1.0)) throw ConfigError("delay_fpr must be in (0, 1)");
  if (!(cusum.false_alarm_rate > 0.0 && cusum.false_alarm_rate < 1.0)) {
    throw ConfigError("cusum.false_alarm_rate must be in (0, 1)");
  }
  if (!(cusum.slack_factor >= 0.0)) throw ConfigError("cusum.slack_factor must be >= 0");
  if (ablation_variants.empty()) throw ConfigError("ablation_variants must not be empty");
  if (bench.repeats == 0 || bench.train_repeats == 0) throw ConfigError("bench repeats must be >= 1");
  for (const auto& s : scenarios) {
    // Building the spec validates the scenario against its plant.
    auto spec = make_spec(s, ReferenceScale{std::vector<double>(s.plant_config().state_dim(), 1.0),
                                            std::vector<double>(s.plant_config().action_dim(), 1.0)},
                          counts.onset_min);
    spec.validate(s.plant_config());
  }
}

RunConfig run_config_from_json(const json& j) {
  reject_unknown(j,
                 {"detector", "episodes", "scenarios", "seeds", "tune_sigma", "sigma_grid",
                  "delay_fpr", "cusum", "ablation_variants", "bench", "jobs"},
                 "config");
  RunConfig c;
  if (j.contains("detector")) c.detector = detector_config_from_json(j["detector"]);
  if (j.contains("episodes")) c.counts = counts_from_json(j["episodes"]);
  if (j.contains("scenarios")) {
    const auto& s = j["scenarios"];
    if (s.is_string()) {
      if (s.get<std::string>() != "noise_grid") {
        throw ConfigError("scenarios must be a list or \"noise_grid\"");
      }
      c.scenarios = noise_grid();
    } else if (s.is_array()) {
      c.scenarios.clear();
      for (const auto& item : s) {
        c.scenarios.push_back(item.is_string() ? scenario_from_id(item.get<std::string>())
                                               : scenario_from_json(item));
      }
    } else {
      throw ConfigError("scenarios must be a list or \"noise_grid\"");
    }
  }
  if (j.contains("seeds")) c.seeds = get_checked<std::vector<std::uint64_t>>(j["seeds"], "seeds");
  if (j.contains("tune_sigma")) c.tune_sigma = get_checked<bool>(j["tune_sigma"], "tune_sigma");
  if (j.contains("sigma_grid")) {
    c.sigma_grid = get_checked<std::vector<double>>(j["sigma_grid"], "sigma_grid");
  }
  if (j.contains("delay_fpr")) c.delay_fpr = get_checked<double>(j["delay_fpr"], "delay_fpr");
  if (j.contains("cusum")) {
    reject_unknown(j["cusum"], {"false_alarm_rate", "slack_factor"}, "cusum");
    const auto& cu = j["cusum"];
    if (cu.contains("false_alarm_rate")) {
      c.cusum.false_alarm_rate = get_checked<double>(cu["false_alarm_rate"], "false_alarm_rate");
    }
    if (cu.contains("slack_factor")) {
      c.cusum.slack_factor = get_checked<double>(cu["slack_factor"], "slack_factor");
    }
  }
  if (j.contains("ablation_variants")) {
    c.ablation_variants.clear();
    for (const auto& v : get_checked<std::vector<std::string>>(j["ablation_variants"],
                                                               "ablation_variants")) {
      c.ablation_variants.push_back(parse_variant(v));
    }
  }
  if (j.contains("bench")) c.bench = bench_from_json(j["bench"]);
  if (j.contains("jobs")) c.jobs = get_checked<std::size_t>(j["jobs"], "jobs");
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  json scenarios = json::array();
  for (const auto& s : c.scenarios) scenarios.push_back(rmood::to_json(s));
  json variants = json::array();
  for (auto v : c.ablation_variants) variants.push_back(std::string(to_string(v)));
  return {{"detector", detector_config_to_json(c.detector)},
          {"episodes", rmood::to_json(c.counts)},
          {"scenarios", scenarios},
          {"seeds", c.seeds},
          {"tune_sigma", c.tune_sigma},
          {"sigma_grid", c.sigma_grid},
          {"delay_fpr", c.delay_fpr},
          {"cusum",
           {{"false_alarm_rate", c.cusum.false_alarm_rate},
            {"slack_factor", c.cusum.slack_factor}}},
          {"ablation_variants", variants},
          {"bench", to_json(c.bench)},
          {"jobs", c.jobs}};
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("config file " + path.string() + " does not exist");
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (doc.is_object() && doc.contains("manifest_version")) {
    if (doc["manifest_version"] != kManifestVersion) {
      throw ConfigError(path.string() + ": unsupported manifest version");
    }
    if (!doc.contains("config")) throw ConfigError(path.string() + ": manifest without config");
    return run_config_from_json(doc["config"]);
  }
  return run_config_from_json(doc);
}

Scenario scenario_from_id(const std::string& id) {
  std::vector<std::string> parts;
  std::stringstream ss(id);
  std::string part;
  while (std::getline(ss, part, '-')) parts.push_back(part);
  if (parts.size() < 3 || parts.size() > 4) {
    throw ConfigError("scenario id '" + id + "' is not plant-kind-level[-arK]");
  }
  Scenario s;
  if (parts[0].rfind("linear", 0) == 0) {
    s.plant = PlantKind::kLinear;
    const auto digits = parts[0].substr(6);
    if (!digits.empty()) {
      if (digits.find_first_not_of("0123456789") != std::string::npos) {
        throw ConfigError("scenario id '" + id + "': bad plant '" + parts[0] + "'");
      }
      s.linear_dims = std::stoul(digits);
    }
  } else {
    s.plant = parse_plant(parts[0]);
  }
  s.kind = parse_anomaly_kind(parts[1]);
  s.level = parts[2];
  level_multiplier(s.level);
  if (parts.size() == 4) {
    if (parts[3] != "ar1" && parts[3] != "ar2") {
      throw ConfigError("scenario id '" + id + "': AR order must be ar1 or ar2");
    }
    s.ar_order = parts[3] == "ar1" ? 1 : 2;
  }
  if (s.linear_dims == 0) throw ConfigError("scenario id '" + id + "': zero linear dims");
  return s;
}

fs::path run_dir(const fs::path& workspace, const Scenario& scenario, std::uint64_t seed) {
  return workspace / scenario.id() / ("seed_" + std::to_string(seed));
}

json make_manifest(const RunConfig& config) {
  json runs = json::array();
  std::map<std::string, json> specs;
  for (const auto& [scenario, seed] : run_keys(config)) {
    const auto id = scenario.id();
    if (!specs.count(id)) {
      const auto scale = reference_scale(scenario.plant_config(), config.counts.length);
      specs[id] = rmood::to_json(make_spec(scenario, scale, config.counts.onset_min));
    }
    runs.push_back({{"dir", run_dir("", scenario, seed).generic_string()},
                    {"scenario", id},
                    {"seed", seed},
                    {"spec", specs[id]}});
  }
  return {{"manifest_version", kManifestVersion}, {"config", to_json(config)}, {"runs", runs}};
}

void parallel_for(std::size_t count, std::size_t jobs,
                  const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, count);
  std::vector<std::exception_ptr> errors(count);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < count && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
            failed = true;
          }
        }
      });
    }
    for (auto& t : workers) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

DetectorModel fit_run(const RunConfig& config, const DetectorConfig& detector,
                      const ScenarioData& data) {
  DetectorConfig tuned = detector;
  if (config.tune_sigma && detector.variant != FeatureVariant::kMeanOnly) {
    const auto grid = config.sigma_grid.empty() ? default_sigma_grid(data.train)
                                                : config.sigma_grid;
    tuned.kernel.sigma = tune_sigma(data.train, data.validation, grid, detector).sigma;
  }
  auto model = train(data.train, tuned);

  // The validation prefixes before each onset are clean by construction.
  std::vector<EpisodeMatrix> heldout;
  for (const auto& e : data.validation) {
    if (!e.onset() || *e.onset() < tuned.window) continue;
    std::vector<double> prefix;
    for (std::size_t n = 0; n < e.n_dims(); ++n) {
      auto row = e.row(n).first(*e.onset());
      prefix.insert(prefix.end(), row.begin(), row.end());
    }
    heldout.emplace_back(e.n_dims(), *e.onset(), std::move(prefix));
  }
  if (!heldout.empty()) {
    model.cusum = calibrate_cusum(model, data.train, heldout, config.cusum.false_alarm_rate,
                                  config.cusum.slack_factor);
  }
  return model;
}

RunResult evaluate_run(const RunConfig& config, const DetectorModel& model,
                       const std::vector<EpisodeMatrix>& test) {
  std::vector<ScoredEpisode> scored;
  for (const auto& e : test) scored.push_back(score_one(model, e));
  auto r = summarize(config, scored);
  r.variant = model.config.variant;
  r.sigma = model.config.kernel.sigma;
  return r;
}

std::string results_csv_header() {
  return "scenario,plant,kind,level,ar_order,variant,seed,sigma,auroc,auroc_episode_mean,"
         "n_pos,n_neg,episodes,detected,delay_mean,cusum_alarms,cusum_false_alarms,"
         "cusum_delay_mean\n";
}

std::string results_csv_row(const RunResult& r) {
  std::string row = r.scenario.id();
  row += "," + std::string(to_string(r.scenario.plant));
  row += "," + std::string(to_string(r.scenario.kind));
  row += "," + r.scenario.level;
  row += "," + std::to_string(r.scenario.ar_order);
  row += "," + std::string(to_string(r.variant));
  row += "," + std::to_string(r.seed);
  row += "," + num(r.sigma);
  row += "," + num(r.auroc.pooled);
  row += "," + num(r.auroc.per_episode_mean);
  row += "," + std::to_string(r.auroc.n_pos);
  row += "," + std::to_string(r.auroc.n_neg);
  row += "," + std::to_string(r.episodes);
  row += "," + std::to_string(r.detected);
  row += "," + opt_num(r.delay_mean);
  row += "," + std::to_string(r.cusum_alarms);
  row += "," + std::to_string(r.cusum_false_alarms);
  row += "," + opt_num(r.cusum_delay_mean);
  return row + "\n";
}

void cmd_generate(const RunConfig& config, const StageOptions& options) {
  config.validate();
  const auto& ws = options.workspace;
  if (!options.force && fs::exists(ws) && !fs::is_empty(ws)) {
    throw RefusalError("output directory " + ws.string() +
                       " is not empty (use --force to overwrite)");
  }
  const auto manifest = make_manifest(config);
  const auto keys = run_keys(config);
  ensure_dir(ws);
  parallel_for(keys.size(), config.jobs, [&](std::size_t i) {
    const auto& [scenario, seed] = keys[i];
    const auto data = generate_scenario(scenario, seed, config.counts);
    const auto dir = run_dir(ws, scenario, seed);
    ensure_dir(dir);
    write_episodes(dir / "train.jsonl", data.train);
    write_episodes(dir / "validation.jsonl", data.validation);
    write_episodes(dir / "test.jsonl", data.test);
  });
  // Written last: a workspace with a manifest is complete.
  write_file_atomic(ws / "manifest.json", manifest.dump(2) + "\n");
}

TrainSummary cmd_train(const RunConfig& config, const StageOptions& options) {
  config.validate();
  const auto keys = run_keys(config);
  std::vector<ScenarioData> inputs(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto dir = run_dir(options.workspace, keys[i].scenario, keys[i].seed);
    refuse_if_exists(dir / "model.json", options.force);
    inputs[i].train = read_split(dir, "train");
    inputs[i].validation = read_split(dir, "validation");
  }
  refuse_if_exists(options.workspace / "train_timing.csv", options.force);

  std::vector<DetectorModel> models(keys.size());
  std::vector<double> seconds(keys.size());
  parallel_for(keys.size(), config.jobs, [&](std::size_t i) {
    const auto start = Clock::now();
    models[i] = fit_run(config, config.detector, inputs[i]);
    seconds[i] = seconds_since(start);
  });

  TrainSummary summary;
  std::string timing = "scenario,seed,variant,sigma,train_seconds\n";
  for (std::size_t i = 0; i < keys.size(); ++i) {
    save_model_file(run_dir(options.workspace, keys[i].scenario, keys[i].seed) / "model.json",
                    models[i]);
    timing += keys[i].scenario.id() + "," + std::to_string(keys[i].seed) + "," +
              std::string(to_string(models[i].config.variant)) + "," +
              num(models[i].config.kernel.sigma) + "," + num(seconds[i], 6) + "\n";
    std::cout << keys[i].scenario.id() << " seed=" << keys[i].seed
              << " sigma=" << num(models[i].config.kernel.sigma, 6)
              << " wall_seconds=" << num(seconds[i], 4) << "\n";
    summary.total_seconds += seconds[i];
  }
  write_file_atomic(options.workspace / "train_timing.csv", timing);
  summary.runs = keys.size();
  std::cout << "trained " << summary.runs << " model(s) in " << num(summary.total_seconds, 4)
            << " s\n";
  return summary;
}

void cmd_score(const RunConfig& config, const StageOptions& options) {
  config.validate();
  const auto keys = run_keys(config);
  std::vector<DetectorModel> models(keys.size());
  std::vector<std::vector<EpisodeMatrix>> tests(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto dir = run_dir(options.workspace, keys[i].scenario, keys[i].seed);
    refuse_if_exists(dir / "scores", options.force);
    if (!fs::exists(dir / "model.json")) {
      throw IoError("missing " + (dir / "model.json").string() + " (run train first)");
    }
    models[i] = load_model_file(dir / "model.json");
    tests[i] = read_split(dir, "test");
    for (const auto& e : tests[i]) {
      if (e.n_dims() != models[i].n_dims()) {
        throw ShapeError(dir.string() + ": test episodes have N=" + std::to_string(e.n_dims()) +
                         " but the model has " + std::to_string(models[i].n_dims()) +
                         " dimensions");
      }
    }
  }
  std::vector<std::vector<std::string>> files(keys.size());
  parallel_for(keys.size(), config.jobs, [&](std::size_t i) {
    for (const auto& e : tests[i]) files[i].push_back(score_csv(score_one(models[i], e)));
  });
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto dir = run_dir(options.workspace, keys[i].scenario, keys[i].seed) / "scores";
    ensure_dir(dir);
    for (std::size_t j = 0; j < files[i].size(); ++j) {
      write_file_atomic(dir / episode_file_name(j, files[i].size()), files[i][j]);
    }
  }
}

void cmd_eval(const RunConfig& config, const StageOptions& options) {
  config.validate();
  refuse_if_exists(options.workspace / "results.csv", options.force);
  refuse_if_exists(options.workspace / "summary.json", options.force);
  const auto keys = run_keys(config);
  std::vector<RunResult> results(keys.size());
  parallel_for(keys.size(), config.jobs, [&](std::size_t i) {
    const auto dir = run_dir(options.workspace, keys[i].scenario, keys[i].seed);
    const auto test = read_split(dir, "test");
    std::vector<ScoredEpisode> scored;
    for (std::size_t j = 0; j < test.size(); ++j) {
      const auto path = dir / "scores" / episode_file_name(j, test.size());
      if (!fs::exists(path)) throw IoError("missing " + path.string() + " (run score first)");
      scored.push_back(parse_score_csv(read_file(path), path, test[j]));
    }
    auto r = summarize(config, scored);
    r.scenario = keys[i].scenario;
    r.seed = keys[i].seed;
    // The model supplies the variant and tuned sigma when present.
    r.variant = config.detector.variant;
    r.sigma = config.detector.kernel.sigma;
    if (fs::exists(dir / "model.json")) {
      const auto model = load_model_file(dir / "model.json");
      r.variant = model.config.variant;
      r.sigma = model.config.kernel.sigma;
    }
    results[i] = std::move(r);
  });
  write_file_atomic(options.workspace / "results.csv", results_csv(results));
  write_file_atomic(options.workspace / "summary.json", summary_json(results).dump(2) + "\n");
  for (const auto& r : results) {
    std::cout << r.scenario.id() << " seed=" << r.seed << " auroc=" << num(r.auroc.pooled, 4)
              << "\n";
  }
}

void cmd_ablate(const RunConfig& config, const StageOptions& options) {
  config.validate();
  refuse_if_exists(options.workspace / "ablation.csv", options.force);
  refuse_if_exists(options.workspace / "ablation_summary.json", options.force);
  const auto keys = run_keys(config);
  const std::size_t v = config.ablation_variants.size();
  std::vector<RunResult> results(keys.size() * v);
  parallel_for(keys.size(), config.jobs, [&](std::size_t i) {
    const auto data = generate_scenario(keys[i].scenario, keys[i].seed, config.counts);
    for (std::size_t k = 0; k < v; ++k) {
      auto detector = config.detector;
      detector.variant = config.ablation_variants[k];
      auto r = evaluate_run(config, fit_run(config, detector, data), data.test);
      r.scenario = keys[i].scenario;
      r.seed = keys[i].seed;
      results[i * v + k] = std::move(r);
    }
  });
  ensure_dir(options.workspace);
  write_file_atomic(options.workspace / "ablation.csv", results_csv(results));
  const auto summary = summary_json(results);
  write_file_atomic(options.workspace / "ablation_summary.json", summary.dump(2) + "\n");
  for (const auto& [variant, s] : summary["overall"].items()) {
    std::cout << variant << " mean_auroc=" << num(s["auroc_mean"].get<double>(), 4) << "\n";
  }
}

void cmd_bench(const RunConfig& config, const StageOptions& options) {
  config.validate();
  refuse_if_exists(options.workspace / "bench.csv", options.force);
  refuse_if_exists(options.workspace / "bench_training.json", options.force);
  ScalingRequest request;
  request.cells = bench_cells(config.bench);
  request.repeats = config.bench.repeats;
  request.min_batch_seconds = config.bench.min_batch_seconds;
  request.config = config.detector;
  request.seed = config.seeds.front();
  const auto report = measure_scaling(request);

  std::string csv =
      "n_dims,n_steps,repeats,batch,extraction_median_s,extraction_mean_s,extraction_min_s,"
      "training_median_s,"
      "training_mean_s\n";
  for (const auto& c : report.cells) {
    csv += std::to_string(c.n_dims) + "," + std::to_string(c.n_steps) + "," +
           std::to_string(c.repeats) + "," + std::to_string(c.batch) + "," +
           num(c.extraction_median, 6) + "," + num(c.extraction_mean, 6) + "," +
           num(c.extraction_min, 6) + "," +
           num(c.training_median, 6) + "," + num(c.training_mean, 6) + "\n";
  }

  // Training-time protocol on the linear plant.
  PlantConfig plant;
  plant.kind = PlantKind::kLinear;
  plant.linear = LinearPlantParams::make_default(config.bench.train_dims);
  std::vector<EpisodeMatrix> episodes;
  for (std::size_t j = 0; j < config.bench.train_episodes; ++j) {
    episodes.push_back(simulate(plant, config.bench.train_length,
                                derive_seed(config.seeds.front(), j)));
  }
  std::vector<double> times;
  for (std::size_t r = 0; r < config.bench.train_repeats; ++r) {
    const auto start = Clock::now();
    const auto model = train(episodes, config.detector);
    times.push_back(seconds_since(start));
  }
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size() / 2;
  const double median = sorted.size() % 2 ? sorted[m] : 0.5 * (sorted[m - 1] + sorted[m]);
  const json training = {{"episodes", config.bench.train_episodes},
                         {"length", config.bench.train_length},
                         {"n_dims", config.bench.train_dims},
                         {"repeats", times.size()},
                         {"median_s", median},
                         {"mean_s", stats(times).mean},
                         {"slope_t", report.extraction_slope_t(config.bench.anchor_dims)},
                         {"slope_n", report.extraction_slope_n(config.bench.anchor_steps)}};

  ensure_dir(options.workspace);
  write_file_atomic(options.workspace / "bench.csv", csv);
  write_file_atomic(options.workspace / "bench_training.json", training.dump(2) + "\n");
  std::cout << csv;
  std::cout << "training " << config.bench.train_episodes << "x" << config.bench.train_length
            << "x" << config.bench.train_dims << ": median " << num(median, 4) << " s over "
            << times.size() << " repeat(s)\n";
}

void cmd_tune_sigma(const RunConfig& config, const StageOptions& options) {
  config.validate();
  const auto keys = run_keys(config);
  std::vector<ScenarioData> inputs(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto dir = run_dir(options.workspace, keys[i].scenario, keys[i].seed);
    refuse_if_exists(dir / "sigma.csv", options.force);
    inputs[i].train = read_split(dir, "train");
    inputs[i].validation = read_split(dir, "validation");
  }
  std::vector<SigmaTuning> tunings(keys.size());
  parallel_for(keys.size(), config.jobs, [&](std::size_t i) {
    const auto grid = config.sigma_grid.empty() ? default_sigma_grid(inputs[i].train)
                                                : config.sigma_grid;
    tunings[i] = tune_sigma(inputs[i].train, inputs[i].validation, grid, config.detector);
  });
  for (std::size_t i = 0; i < keys.size(); ++i) {
    std::string csv = "sigma,auroc,selected\n";
    for (const auto& [sigma, auc] : tunings[i].table) {
      csv += num(sigma) + "," + num(auc) + (sigma == tunings[i].sigma ? ",1\n" : ",0\n");
    }
    write_file_atomic(run_dir(options.workspace, keys[i].scenario, keys[i].seed) / "sigma.csv",
                      csv);
    std::cout << keys[i].scenario.id() << " seed=" << keys[i].seed
              << " sigma=" << num(tunings[i].sigma, 6) << "\n";
  }
}

}  // namespace rmood::app
