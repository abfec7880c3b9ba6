#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "rmood/detector.hpp"

namespace rmood {

inline constexpr int kModelFormatVersion = 1;

nlohmann::json detector_config_to_json(const DetectorConfig& config);
/// Unknown keys are rejected; absent keys keep their defaults.
DetectorConfig detector_config_from_json(const nlohmann::json& j,
                                         const DetectorConfig& defaults = {});

nlohmann::json forest_to_json(const IsolationForest& forest);
IsolationForest forest_from_json(const nlohmann::json& j);

/// JSON document {"version": 1, "config": {...}, "n_dims": N, "forests": [...]}
/// with an optional "cusum" block. Split values are written with shortest
/// round-trip precision, so loading reproduces every double exactly.
std::string save_model(const DetectorModel& model);

/// Throws VersionError on a version mismatch and LoadError on any malformed
/// or truncated payload.
DetectorModel load_model(std::string_view bytes);

void save_model_file(const std::filesystem::path& path, const DetectorModel& model);
DetectorModel load_model_file(const std::filesystem::path& path);

}  // namespace rmood
