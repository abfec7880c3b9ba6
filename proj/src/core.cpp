#include "rmood/core.hpp"

#include <cmath>
#include <string>

#include "rmood/error.hpp"

namespace rmood {

EpisodeMatrix::EpisodeMatrix(std::size_t n_dims, std::size_t n_steps,
                             std::vector<double> data,
                             std::optional<std::size_t> onset, Meta meta)
    : n_dims_(n_dims),
      n_steps_(n_steps),
      data_(std::move(data)),
      onset_(onset),
      meta_(std::move(meta)) {
  if (n_dims_ == 0 || n_steps_ == 0) {
    throw ShapeError("episode must have N >= 1 and T >= 1");
  }
  if (data_.size() != n_dims_ * n_steps_) {
    throw ShapeError("episode data has " + std::to_string(data_.size()) +
                     " entries, expected N*T = " + std::to_string(n_dims_ * n_steps_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw DataError("non-finite entry at dim " + std::to_string(i / n_steps_) +
                      ", t " + std::to_string(i % n_steps_));
    }
  }
  if (onset_ && *onset_ >= n_steps_) {
    throw BoundsError("onset " + std::to_string(*onset_) + " outside [0, " +
                      std::to_string(n_steps_) + ")");
  }
}

EpisodeMatrix EpisodeMatrix::from_rows(const std::vector<std::vector<double>>& rows,
                                       std::optional<std::size_t> onset, Meta meta) {
  if (rows.empty()) throw ShapeError("episode must have at least one row");
  const std::size_t steps = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * steps);
  for (std::size_t n = 0; n < rows.size(); ++n) {
    if (rows[n].size() != steps) {
      throw ShapeError("ragged episode: row " + std::to_string(n) + " has length " +
                       std::to_string(rows[n].size()) + ", expected " +
                       std::to_string(steps));
    }
    data.insert(data.end(), rows[n].begin(), rows[n].end());
  }
  return EpisodeMatrix(rows.size(), steps, std::move(data), onset, std::move(meta));
}

Window::Window(std::size_t n_dims, std::size_t width, std::vector<double> data,
               std::size_t end_time)
    : n_dims_(n_dims), width_(width), data_(std::move(data)), end_time_(end_time) {
  if (width_ < 2) throw SizeError("window width must be >= 2");
  if (data_.size() != n_dims_ * width_) throw ShapeError("window data size mismatch");
}

Window window_at(const EpisodeMatrix& episode, std::size_t t, std::size_t w) {
  if (w < 2) throw BoundsError("window size w=" + std::to_string(w) + " must be >= 2");
  if (t >= episode.n_steps()) {
    throw BoundsError("window end t=" + std::to_string(t) + " beyond episode length " +
                      std::to_string(episode.n_steps()));
  }
  if (t + 1 < w) {
    throw BoundsError("window end t=" + std::to_string(t) + " < w-1=" +
                      std::to_string(w - 1));
  }
  std::vector<double> data;
  data.reserve(episode.n_dims() * w);
  for (std::size_t n = 0; n < episode.n_dims(); ++n) {
    auto r = episode.row(n).subspan(t + 1 - w, w);
    data.insert(data.end(), r.begin(), r.end());
  }
  return Window(episode.n_dims(), w, std::move(data), t);
}

std::vector<std::span<const double>> partition_windows(std::span<const double> series,
                                                       std::size_t w) {
  if (w == 0) throw SizeError("window size must be positive");
  if (series.size() < w) {
    throw SizeError("series of length " + std::to_string(series.size()) +
                    " yields no window of size " + std::to_string(w));
  }
  std::vector<std::span<const double>> out;
  out.reserve(series.size() / w);
  for (std::size_t start = 0; start + w <= series.size(); start += w) {
    out.push_back(series.subspan(start, w));
  }
  return out;
}

LabelSeries labels_from_onset(std::size_t n_steps, std::optional<std::size_t> onset) {
  if (onset && *onset >= n_steps) {
    throw BoundsError("onset " + std::to_string(*onset) + " outside [0, " +
                      std::to_string(n_steps) + ")");
  }
  LabelSeries labels(n_steps, 0);
  if (onset) {
    for (std::size_t t = *onset; t < n_steps; ++t) labels[t] = 1;
  }
  return labels;
}

}  // namespace rmood
