#include <gtest/gtest.h>

#include <vector>

#include "rmood/cusum.hpp"
#include "rmood/error.hpp"
#include "rmood/rng.hpp"

namespace rmood {
namespace {

TEST(Cusum, DriftExactlyCancelledNeverAlarms) {
  const CusumParams p{.target = 0.5, .slack = 0.125, .threshold = 0.01};
  CusumState s;
  for (std::size_t t = 0; t < 10'000; ++t) s = cusum_update(s, 0.625, t, p);
  EXPECT_EQ(s.statistic, 0.0);
  EXPECT_FALSE(s.alarmed);
}

TEST(Cusum, AlarmOnEleventhUpdate) {
  const CusumParams p{.target = 0.5, .slack = 0.0, .threshold = 1.0};
  CusumState s;
  for (std::size_t t = 0; t < 20; ++t) {
    s = cusum_update(s, 0.6, t, p);
    if (s.alarmed) break;
  }
  ASSERT_TRUE(s.alarmed);
  EXPECT_EQ(*s.alarm_time, 10u);  // the 11th update
  EXPECT_NEAR(s.statistic, 1.1, 1e-12);
}

TEST(Cusum, BelowTargetClampsAtZero) {
  const CusumParams p{.target = 0.5, .slack = 0.0, .threshold = 1.0};
  CusumState s;
  Rng rng(1);
  for (std::size_t t = 0; t < 1000; ++t) {
    s = cusum_update(s, 0.5 * rng.uniform_open(), t, p);
    EXPECT_EQ(s.statistic, 0.0);
  }
}

TEST(Cusum, AlarmLatches) {
  const CusumParams p{.target = 0.5, .slack = 0.0, .threshold = 0.05};
  CusumState s;
  s = cusum_update(s, 0.9, 3, p);
  ASSERT_TRUE(s.alarmed);
  for (std::size_t t = 4; t < 100; ++t) s = cusum_update(s, 0.1, t, p);
  EXPECT_TRUE(s.alarmed);
  EXPECT_EQ(*s.alarm_time, 3u);
}

TEST(Cusum, AlarmTimeNonDecreasingInThreshold) {
  Rng rng(9);
  std::vector<double> stream(2000);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    stream[i] = 0.45 + (i > 500 ? 0.05 : 0.0) + 0.05 * rng.normal();
  }
  std::size_t previous = 0;
  for (double h : {0.1, 0.3, 0.5, 1.0, 2.0, 4.0}) {
    const auto trace = cusum_run(stream, 0, {.target = 0.45, .slack = 0.01, .threshold = h});
    const std::size_t alarm = trace.final_state.alarm_time.value_or(stream.size());
    EXPECT_GE(alarm, previous) << "h=" << h;
    previous = alarm;
  }
}

TEST(Cusum, RunMatchesFold) {
  Rng rng(4);
  std::vector<double> stream(300);
  for (auto& v : stream) v = rng.uniform_open();
  const CusumParams p{.target = 0.4, .slack = 0.05, .threshold = 3.0};
  const auto trace = cusum_run(stream, 9, p);
  CusumState s;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    s = cusum_update(s, stream[i], 9 + i, p);
    EXPECT_EQ(trace.statistic[i], s.statistic);
  }
  EXPECT_EQ(trace.final_state.alarm_time, s.alarm_time);
}

TEST(Cusum, ParamValidation) {
  EXPECT_THROW((CusumParams{.target = 0.5, .slack = -1.0, .threshold = 1.0}.validate()),
               ConfigError);
  EXPECT_THROW((CusumParams{.target = 0.5, .slack = 0.0, .threshold = 0.0}.validate()),
               ConfigError);
}

}  // namespace
}  // namespace rmood
