#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rmood {

/// N x T observation matrix of one episode. Row n is the time series of state
/// dimension n; column t is the observation at timestep t. Stored row-major so
/// each dimension's series is contiguous.
class EpisodeMatrix {
 public:
  using Meta = std::map<std::string, std::string>;

  EpisodeMatrix() = default;
  /// Throws ShapeError on an empty shape, DataError on non-finite entries and
  /// BoundsError when onset is outside [0, T).
  EpisodeMatrix(std::size_t n_dims, std::size_t n_steps, std::vector<double> data,
                std::optional<std::size_t> onset = std::nullopt, Meta meta = {});

  static EpisodeMatrix from_rows(const std::vector<std::vector<double>>& rows,
                                 std::optional<std::size_t> onset = std::nullopt,
                                 Meta meta = {});

  std::size_t n_dims() const noexcept { return n_dims_; }
  std::size_t n_steps() const noexcept { return n_steps_; }
  const std::optional<std::size_t>& onset() const noexcept { return onset_; }
  const Meta& meta() const noexcept { return meta_; }
  Meta& meta() noexcept { return meta_; }

  double operator()(std::size_t n, std::size_t t) const noexcept {
    return data_[n * n_steps_ + t];
  }
  std::span<const double> row(std::size_t n) const noexcept {
    return {data_.data() + n * n_steps_, n_steps_};
  }
  const std::vector<double>& data() const noexcept { return data_; }

 private:
  std::size_t n_dims_ = 0;
  std::size_t n_steps_ = 0;
  std::vector<double> data_;
  std::optional<std::size_t> onset_;
  Meta meta_;
};

/// Contiguous N x w slab of an episode ending at end_time.
class Window {
 public:
  Window(std::size_t n_dims, std::size_t width, std::vector<double> data,
         std::size_t end_time);

  std::size_t n_dims() const noexcept { return n_dims_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t end_time() const noexcept { return end_time_; }
  double operator()(std::size_t n, std::size_t j) const noexcept {
    return data_[n * width_ + j];
  }
  std::span<const double> row(std::size_t n) const noexcept {
    return {data_.data() + n * width_, width_};
  }

 private:
  std::size_t n_dims_;
  std::size_t width_;
  std::vector<double> data_;
  std::size_t end_time_;
};

/// Per-timestep OOD flags: 0 in-distribution, 1 out-of-distribution.
using LabelSeries = std::vector<std::uint8_t>;

/// Columns t-w+1 .. t of `episode`.
Window window_at(const EpisodeMatrix& episode, std::size_t t, std::size_t w);

/// Non-overlapping length-w segments starting at index 0; a shorter trailing
/// remainder is dropped.
std::vector<std::span<const double>> partition_windows(std::span<const double> series,
                                                       std::size_t w);

LabelSeries labels_from_onset(std::size_t n_steps, std::optional<std::size_t> onset);

}  // namespace rmood
