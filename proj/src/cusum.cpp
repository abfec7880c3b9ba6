#include "rmood/cusum.hpp"

#include <algorithm>
#include <cmath>

#include "rmood/error.hpp"

namespace rmood {

void CusumParams::validate() const {
  if (!std::isfinite(target)) throw ConfigError("CUSUM target must be finite");
  if (!std::isfinite(slack) || slack < 0.0) throw ConfigError("CUSUM slack must be >= 0");
  if (!std::isfinite(threshold) || threshold <= 0.0) {
    throw ConfigError("CUSUM threshold must be > 0");
  }
}

CusumState cusum_update(const CusumState& state, double score, std::size_t t,
                        const CusumParams& params) {
  CusumState next = state;
  next.statistic = std::max(0.0, state.statistic + (score - params.target - params.slack));
  if (!next.alarmed && next.statistic > params.threshold) {
    next.alarmed = true;
    next.alarm_time = t;
  }
  return next;
}

CusumTrace cusum_run(std::span<const double> scores, std::size_t first_timestep,
                     const CusumParams& params) {
  params.validate();
  CusumTrace trace;
  trace.statistic.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    trace.final_state = cusum_update(trace.final_state, scores[i], first_timestep + i, params);
    trace.statistic.push_back(trace.final_state.statistic);
  }
  return trace;
}

}  // namespace rmood
