#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "rmood/core.hpp"
#include "rmood/envgen.hpp"

namespace rmood {

/// Episode counts and lengths of one benchmark suite. Defaults follow the
/// reference protocol: 45 clean training episodes, 100 labeled validation
/// episodes for sigma selection and 100 labeled test episodes.
struct SuiteCounts {
  std::size_t train = 45;
  std::size_t validation = 100;
  std::size_t test = 100;
  std::size_t length = 100;
  // Onsets are drawn uniformly from [onset_min, onset_max] (timesteps).
  std::size_t onset_min = 30;
  std::size_t onset_max = 50;

  void validate() const;
};

/// One cell of a benchmark grid. `level` is light/medium/strong or
/// minor/severe and maps to a magnitude multiplier (0.25, 1, 2, 0.5, 2).
struct Scenario {
  PlantKind plant = PlantKind::kCartpole;
  std::size_t linear_dims = 6;
  AnomalyKind kind = AnomalyKind::kArno;
  std::string level = "medium";
  std::size_t ar_order = 1;

  std::string id() const;
  PlantConfig plant_config() const;
};

double level_multiplier(const std::string& level);

/// Per-dimension standard deviations of clean observations and actions.
struct ReferenceScale {
  std::vector<double> state_std;
  std::vector<double> action_std;
};

/// Estimated from `episodes` clean rollouts on a fixed calibration seed range
/// that no suite uses.
ReferenceScale reference_scale(const PlantConfig& plant, std::size_t length,
                               std::size_t episodes = 10);

/// Concrete anomaly for a scenario: noise amplitudes and offsets are the level
/// multiplier times the reference std of the affected dimension; factors are
/// 1 / (1 + multiplier) for actions and 1 + multiplier for body mass.
AnomalySpec make_spec(const Scenario& scenario, const ReferenceScale& scale,
                      std::size_t onset);

struct ScenarioData {
  std::vector<EpisodeMatrix> train;
  std::vector<EpisodeMatrix> validation;
  std::vector<EpisodeMatrix> test;
};

/// Episode j of split k (train 0, validation 1, test 2) is simulated with seed
/// derive_seed(seed, k * 1'000'000 + j), so the splits never share a seed.
/// Train episodes are clean; the others carry the scenario's anomaly with an
/// onset drawn from Rng(seed, 3'000'000 + k * 100'000 + j).
ScenarioData generate_scenario(const Scenario& scenario, std::uint64_t seed,
                               const SuiteCounts& counts);

/// 2 plants x {arno, arns} x {light, medium, strong} x AR orders {1, 2}.
std::vector<Scenario> noise_grid();

nlohmann::json to_json(const Scenario& scenario);
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SuiteCounts& counts);
SuiteCounts counts_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AnomalySpec& spec);

}  // namespace rmood
