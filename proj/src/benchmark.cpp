#include "rmood/benchmark.hpp"

#include <cmath>
#include <numeric>

#include "rmood/error.hpp"
#include "rmood/rng.hpp"

namespace rmood {

using nlohmann::json;

void SuiteCounts::validate() const {
  if (train < 1) throw ConfigError("need at least one training episode");
  if (length < 2) throw ConfigError("episode length must be >= 2");
  if (onset_min < 1 || onset_min > onset_max || onset_max >= length) {
    throw ConfigError("onset range must satisfy 1 <= onset_min <= onset_max < length");
  }
}

std::string Scenario::id() const {
  std::string out(to_string(plant));
  if (plant == PlantKind::kLinear) out += std::to_string(linear_dims);
  out += "-";
  out += to_string(kind);
  out += "-" + level;
  if (kind == AnomalyKind::kArno || kind == AnomalyKind::kArns) {
    out += "-ar" + std::to_string(ar_order);
  }
  return out;
}

PlantConfig Scenario::plant_config() const {
  PlantConfig config;
  config.kind = plant;
  if (plant == PlantKind::kLinear) config.linear = LinearPlantParams::make_default(linear_dims);
  return config;
}

double level_multiplier(const std::string& level) {
  if (level == "light") return 0.25;
  if (level == "medium") return 1.0;
  if (level == "strong") return 2.0;
  if (level == "minor") return 0.5;
  if (level == "severe") return 2.0;
  throw ConfigError("unknown anomaly level '" + level + "'");
}

ReferenceScale reference_scale(const PlantConfig& plant, std::size_t length,
                               std::size_t episodes) {
  constexpr std::uint64_t kCalibrationSeed = 0x5CA1EULL;
  const std::size_t n = plant.state_dim();
  const std::size_t m = plant.action_dim();
  std::vector<double> s_sum(n, 0.0), s_sq(n, 0.0), a_sum(m, 0.0), a_sq(m, 0.0);
  std::size_t count = 0;
  for (std::size_t e = 0; e < episodes; ++e) {
    const auto r = rollout(plant, length, derive_seed(kCalibrationSeed, e));
    for (std::size_t t = 0; t < length; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        const double v = r.observations(i, t);
        s_sum[i] += v;
        s_sq[i] += v * v;
      }
      for (std::size_t j = 0; j < m; ++j) {
        const double v = r.actions[j][t];
        a_sum[j] += v;
        a_sq[j] += v * v;
      }
    }
    count += length;
  }
  auto finish = [count](const std::vector<double>& sum, const std::vector<double>& sq) {
    std::vector<double> out(sum.size());
    const auto c = static_cast<double>(count);
    for (std::size_t i = 0; i < sum.size(); ++i) {
      const double mean = sum[i] / c;
      out[i] = std::sqrt(std::max(0.0, sq[i] / c - mean * mean));
    }
    return out;
  };
  return {finish(s_sum, s_sq), finish(a_sum, a_sq)};
}

AnomalySpec make_spec(const Scenario& scenario, const ReferenceScale& scale,
                      std::size_t onset) {
  const double mult = level_multiplier(scenario.level);
  auto scaled = [mult](const std::vector<double>& v) {
    std::vector<double> out(v);
    for (auto& x : out) x *= mult;
    return out;
  };
  AnomalySpec spec;
  spec.kind = scenario.kind;
  spec.level = scenario.level;
  spec.onset = onset;
  spec.ar_coefs = default_ar_process(scenario.ar_order).coefs;
  const double mean_action_std =
      std::accumulate(scale.action_std.begin(), scale.action_std.end(), 0.0) /
      static_cast<double>(scale.action_std.size());
  switch (scenario.kind) {
    case AnomalyKind::kArno:
      spec.amplitude = scaled(scale.state_std);
      break;
    case AnomalyKind::kArns:
      spec.amplitude = scaled(scale.state_std);
      spec.action_amplitude = scaled(scale.action_std);
      break;
    case AnomalyKind::kActionFactor:
      spec.factor = 1.0 / (1.0 + mult);
      break;
    case AnomalyKind::kActionNoise:
      spec.noise_std = mult * mean_action_std;
      break;
    case AnomalyKind::kActionOffset:
      spec.offset = scaled(scale.action_std);
      break;
    case AnomalyKind::kBodyMassFactor:
      spec.factor = 1.0 + mult;
      break;
    case AnomalyKind::kForceVector:
      spec.offset = scaled(scenario.plant == PlantKind::kCartpole ? scale.action_std
                                                                  : scale.state_std);
      break;
    case AnomalyKind::kObservationOffset:
      spec.offset = scaled(scale.state_std);
      break;
  }
  return spec;
}

ScenarioData generate_scenario(const Scenario& scenario, std::uint64_t seed,
                               const SuiteCounts& counts) {
  counts.validate();
  const PlantConfig plant = scenario.plant_config();
  const ReferenceScale scale = reference_scale(plant, counts.length);
  ScenarioData data;

  auto labeled = [&](std::size_t split, std::size_t count) {
    std::vector<EpisodeMatrix> out;
    out.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
      Rng onset_rng(seed, 3'000'000 + split * 100'000 + j);
      const std::size_t onset =
          counts.onset_min + onset_rng.index(counts.onset_max - counts.onset_min + 1);
      auto episode = simulate(plant, counts.length, derive_seed(seed, split * 1'000'000 + j),
                              make_spec(scenario, scale, onset));
      episode.meta()["scenario"] = scenario.id();
      out.push_back(std::move(episode));
    }
    return out;
  };

  data.train.reserve(counts.train);
  for (std::size_t j = 0; j < counts.train; ++j) {
    auto episode = simulate(plant, counts.length, derive_seed(seed, j));
    episode.meta()["scenario"] = scenario.id();
    data.train.push_back(std::move(episode));
  }
  data.validation = labeled(1, counts.validation);
  data.test = labeled(2, counts.test);
  return data;
}

std::vector<Scenario> noise_grid() {
  std::vector<Scenario> out;
  for (auto plant : {PlantKind::kCartpole, PlantKind::kLinear}) {
    for (auto kind : {AnomalyKind::kArno, AnomalyKind::kArns}) {
      for (const char* level : {"light", "medium", "strong"}) {
        for (std::size_t order : {1u, 2u}) {
          out.push_back(Scenario{.plant = plant, .kind = kind, .level = level,
                                 .ar_order = order});
        }
      }
    }
  }
  return out;
}

json to_json(const Scenario& scenario) {
  json j = {{"plant", std::string(to_string(scenario.plant))},
            {"kind", std::string(to_string(scenario.kind))},
            {"level", scenario.level},
            {"ar_order", scenario.ar_order}};
  if (scenario.plant == PlantKind::kLinear) j["linear_dims"] = scenario.linear_dims;
  return j;
}

Scenario scenario_from_json(const json& j) {
  try {
    for (const auto& [key, value] : j.items()) {
      if (key != "plant" && key != "kind" && key != "level" && key != "ar_order" &&
          key != "linear_dims") {
        throw ConfigError("unknown key '" + key + "' in scenario");
      }
    }
    Scenario s;
    s.plant = parse_plant(j.at("plant").get<std::string>());
    s.kind = parse_anomaly_kind(j.at("kind").get<std::string>());
    s.level = j.value("level", std::string("medium"));
    level_multiplier(s.level);
    s.ar_order = j.value("ar_order", std::size_t{1});
    if (s.ar_order != 1 && s.ar_order != 2) throw ConfigError("ar_order must be 1 or 2");
    s.linear_dims = j.value("linear_dims", std::size_t{6});
    if (s.linear_dims == 0) throw ConfigError("linear_dims must be >= 1");
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid scenario: ") + e.what());
  }
}

json to_json(const SuiteCounts& c) {
  return {{"train", c.train},         {"validation", c.validation}, {"test", c.test},
          {"length", c.length},       {"onset_min", c.onset_min},   {"onset_max", c.onset_max}};
}

SuiteCounts counts_from_json(const json& j) {
  SuiteCounts c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "train") c.train = value.get<std::size_t>();
      else if (key == "validation") c.validation = value.get<std::size_t>();
      else if (key == "test") c.test = value.get<std::size_t>();
      else if (key == "length") c.length = value.get<std::size_t>();
      else if (key == "onset_min") c.onset_min = value.get<std::size_t>();
      else if (key == "onset_max") c.onset_max = value.get<std::size_t>();
      else throw ConfigError("unknown key '" + key + "' in episodes");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid episode counts: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const AnomalySpec& spec) {
  return {{"kind", std::string(to_string(spec.kind))},
          {"level", spec.level},
          {"ar_coefs", spec.ar_coefs},
          {"amplitude", spec.amplitude},
          {"action_amplitude", spec.action_amplitude},
          {"factor", spec.factor},
          {"noise_std", spec.noise_std},
          {"offset", spec.offset}};
}

}  // namespace rmood
