#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "rmood/core.hpp"

namespace rmood {

// JSON-lines record: {"n": N, "t": T, "onset": t_a|null, "meta": {...},
// "data": [[row 0], ..., [row N-1]]}, one episode per line.
nlohmann::json episode_to_json(const EpisodeMatrix& episode);
EpisodeMatrix episode_from_json(const nlohmann::json& record);

std::string episodes_to_jsonl(const std::vector<EpisodeMatrix>& episodes);
std::vector<EpisodeMatrix> episodes_from_jsonl(std::string_view text);

void write_episodes(const std::filesystem::path& path,
                    const std::vector<EpisodeMatrix>& episodes);
std::vector<EpisodeMatrix> read_episodes(const std::filesystem::path& path);

/// CSV export: one line per timestep, header dim_0..dim_{N-1}. Labels go to
/// a `<stem>.labels.csv` sidecar with columns t,label.
std::string episode_to_csv(const EpisodeMatrix& episode);
std::string labels_to_csv(const LabelSeries& labels);
void write_episode_csv(const std::filesystem::path& path, const EpisodeMatrix& episode);

}  // namespace rmood
