#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace rmood {

/// One-sided upper Page CUSUM on the anomaly-score stream.
struct CusumParams {
  double target = 0.5;     // in-distribution reference mean
  double slack = 0.0;      // allowance subtracted from every deviation
  double threshold = 1.0;  // alarm when the statistic exceeds this

  void validate() const;
};

struct CusumState {
  double statistic = 0.0;
  bool alarmed = false;
  std::optional<std::size_t> alarm_time;
};

/// S <- max(0, S + score - target - slack); the first S > threshold latches
/// an alarm at timestep t.
CusumState cusum_update(const CusumState& state, double score, std::size_t t,
                        const CusumParams& params);

struct CusumTrace {
  std::vector<double> statistic;
  CusumState final_state;
};

/// Folds cusum_update over `scores`, score i belonging to timestep
/// first_timestep + i.
CusumTrace cusum_run(std::span<const double> scores, std::size_t first_timestep,
                     const CusumParams& params);

}  // namespace rmood
