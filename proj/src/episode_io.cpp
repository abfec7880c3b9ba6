#include "rmood/episode_io.hpp"

#include <sstream>

#include "rmood/error.hpp"
#include "rmood/fileio.hpp"

namespace rmood {

using nlohmann::json;

json episode_to_json(const EpisodeMatrix& episode) {
  json rows = json::array();
  for (std::size_t n = 0; n < episode.n_dims(); ++n) {
    auto r = episode.row(n);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  json record;
  record["n"] = episode.n_dims();
  record["t"] = episode.n_steps();
  record["onset"] = episode.onset() ? json(*episode.onset()) : json(nullptr);
  record["meta"] = episode.meta();
  record["data"] = std::move(rows);
  return record;
}

EpisodeMatrix episode_from_json(const json& record) {
  try {
    if (!record.is_object()) throw DataError("episode record must be a JSON object");
    const auto n = record.at("n").get<std::size_t>();
    const auto t = record.at("t").get<std::size_t>();
    std::optional<std::size_t> onset;
    if (record.contains("onset") && !record.at("onset").is_null()) {
      onset = record.at("onset").get<std::size_t>();
    }
    EpisodeMatrix::Meta meta;
    if (record.contains("meta")) meta = record.at("meta").get<EpisodeMatrix::Meta>();
    const auto& rows = record.at("data");
    if (!rows.is_array() || rows.size() != n) {
      throw ShapeError("episode data must hold n=" + std::to_string(n) + " rows");
    }
    std::vector<double> data;
    data.reserve(n * t);
    for (const auto& row : rows) {
      if (!row.is_array() || row.size() != t) {
        throw ShapeError("episode row length differs from t=" + std::to_string(t));
      }
      for (const auto& v : row) data.push_back(v.get<double>());
    }
    return EpisodeMatrix(n, t, std::move(data), onset, std::move(meta));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed episode record: ") + e.what());
  }
}

std::string episodes_to_jsonl(const std::vector<EpisodeMatrix>& episodes) {
  std::string out;
  for (const auto& e : episodes) {
    out += episode_to_json(e).dump();
    out += '\n';
  }
  return out;
}

std::vector<EpisodeMatrix> episodes_from_jsonl(std::string_view text) {
  std::vector<EpisodeMatrix> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(episode_from_json(record));
  }
  return out;
}

void write_episodes(const std::filesystem::path& path,
                    const std::vector<EpisodeMatrix>& episodes) {
  write_file_atomic(path, episodes_to_jsonl(episodes));
}

std::vector<EpisodeMatrix> read_episodes(const std::filesystem::path& path) {
  return episodes_from_jsonl(read_file(path));
}

std::string episode_to_csv(const EpisodeMatrix& episode) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t n = 0; n < episode.n_dims(); ++n) {
    if (n) out << ',';
    out << "dim_" << n;
  }
  out << '\n';
  for (std::size_t t = 0; t < episode.n_steps(); ++t) {
    for (std::size_t n = 0; n < episode.n_dims(); ++n) {
      if (n) out << ',';
      out << episode(n, t);
    }
    out << '\n';
  }
  return out.str();
}

std::string labels_to_csv(const LabelSeries& labels) {
  std::string out = "t,label\n";
  for (std::size_t t = 0; t < labels.size(); ++t) {
    out += std::to_string(t) + ',' + std::to_string(labels[t]) + '\n';
  }
  return out;
}

void write_episode_csv(const std::filesystem::path& path, const EpisodeMatrix& episode) {
  write_file_atomic(path, episode_to_csv(episode));
  auto sidecar = path;
  sidecar.replace_extension(".labels.csv");
  write_file_atomic(sidecar, labels_to_csv(labels_from_onset(episode.n_steps(),
                                                             episode.onset())));
}

}  // namespace rmood
