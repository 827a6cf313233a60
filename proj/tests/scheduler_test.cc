/*
 * Copyright 2026 The FedGBF Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fedgbf/scheduler.h"

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "fedgbf/types.h"

namespace fedgbf {
namespace {

ScheduleSpec decay(double lo, double hi, int rounds, double k = 1.0,
                   ScheduleRounding rounding = ScheduleRounding::kNearest) {
  ScheduleSpec s;
  s.v_min = lo;
  s.v_max = hi;
  s.total_rounds = rounds;
  s.k = k;
  s.rounding = rounding;
  return s;
}

ScheduleSpec growth(double lo, double hi, int rounds, double k = 1.0) {
  ScheduleSpec s = decay(lo, hi, rounds, k, ScheduleRounding::kNone);
  s.direction = ScheduleDirection::kGrowth;
  return s;
}

TEST(ScheduleValue, DecayFiftyToFifteenOverElevenRounds) {
  const ScheduleSpec s = decay(15, 50, 11);
  EXPECT_EQ(schedule_value(s, 1), 50);
  EXPECT_EQ(schedule_value(s, 11), 15);
}

TEST(ScheduleValue, HalfSpeedHoldsFromRoundSix) {
  const ScheduleSpec s = decay(15, 50, 11, 0.5);
  EXPECT_EQ(schedule_value(s, 1), 50);
  for (int t = 6; t <= 11; ++t) EXPECT_EQ(schedule_value(s, t), 15) << t;
  EXPECT_GT(schedule_value(s, 5), 15);
}

TEST(ScheduleValue, SingleRound) {
  EXPECT_EQ(schedule_value(decay(15, 50, 1), 1), 50);
  EXPECT_EQ(schedule_value(growth(0.1, 0.3, 1), 1), 0.1);
}

TEST(ScheduleValue, GrowthSampleRate) {
  const ScheduleSpec s = growth(0.1, 0.3, 100);
  EXPECT_DOUBLE_EQ(schedule_value(s, 1), 0.1);
  EXPECT_DOUBLE_EQ(schedule_value(s, 100), 0.3);
  const double mid = 0.1 + 0.2 * std::sin(std::numbers::pi * 49 / (2.0 * 99));
  EXPECT_DOUBLE_EQ(schedule_value(s, 50), mid);
}

TEST(ScheduleValue, RoundOutOfRange) {
  const ScheduleSpec s = decay(15, 50, 11);
  EXPECT_THROW(schedule_value(s, 0), Error);
  EXPECT_THROW(schedule_value(s, 12), Error);
}

TEST(ScheduleValue, InvalidSpecs) {
  EXPECT_THROW(schedule_value(decay(50, 15, 11), 1), Error);
  EXPECT_THROW(schedule_value(decay(15, 50, 11, 0.0), 1), Error);
  EXPECT_THROW(schedule_value(decay(15, 50, 0), 1), Error);
  EXPECT_THROW(parse_direction("up"), Error);
  EXPECT_THROW(parse_rounding("floor"), Error);
}

TEST(ScheduleTable, ThreeRoundOracle) {
  const double mid = std::round(15 + 35 * std::cos(std::numbers::pi / 4));
  EXPECT_EQ(mid, 40);
  EXPECT_EQ(schedule_table(decay(15, 50, 3)), (std::vector<double>{50, mid, 15}));
}

TEST(ScheduleTable, TwoRoundGrowth) {
  EXPECT_EQ(schedule_table(growth(0.1, 0.3, 2)), (std::vector<double>{0.1, 0.3}));
}

TEST(ScheduleTable, ZeroAmplitude) {
  for (double v : schedule_table(decay(7, 7, 9))) EXPECT_EQ(v, 7);
  for (double v : schedule_table(ScheduleSpec::constant(0.4, 5))) EXPECT_EQ(v, 0.4);
}

TEST(ScheduleTable, MonotoneAndInRange) {
  for (int rounds : {2, 5, 20, 100}) {
    for (double k : {0.25, 0.5, 1.0}) {
      const auto d = schedule_table(decay(2, 5, rounds, k, ScheduleRounding::kNone));
      const auto g = schedule_table(growth(0.1, 0.3, rounds, k));
      for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_GE(d[i], 2);
        EXPECT_LE(d[i], 5);
        EXPECT_GE(g[i], 0.1);
        EXPECT_LE(g[i], 0.3 + 1e-15);
        if (i > 0) {
          EXPECT_LE(d[i], d[i - 1]);
          EXPECT_GE(g[i], g[i - 1]);
        }
      }
    }
  }
}

// First round at which Decay sits at v_min.
int first_floor_round(const ScheduleSpec& s) {
  const auto t = schedule_table(s);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == s.v_min) return static_cast<int>(i) + 1;
  }
  return -1;
}

TEST(ScheduleTable, SpeedStretchesTheRamp) {
  for (int rounds : {11, 21, 40}) {
    for (double k : {0.25, 0.3, 0.5}) {
      const ScheduleSpec s = decay(15, 50, rounds, k, ScheduleRounding::kNone);
      EXPECT_EQ(first_floor_round(s), static_cast<int>(std::ceil(k * (rounds - 1))) + 1)
          << rounds << " " << k;
      ScheduleSpec doubled = s;
      doubled.k = 2 * k;
      EXPECT_GE(first_floor_round(doubled), first_floor_round(s));
    }
  }
}

TEST(ScheduleTable, CeilRounding) {
  const auto t = schedule_table(decay(2, 5, 20, 1.0, ScheduleRounding::kCeil));
  EXPECT_EQ(t.front(), 5);
  EXPECT_EQ(t.back(), 2);
  const auto raw = schedule_table(decay(2, 5, 20, 1.0, ScheduleRounding::kNone));
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t[i], std::ceil(raw[i]));
}

TEST(Names, RoundTrip) {
  for (auto r : {ScheduleRounding::kNone, ScheduleRounding::kNearest, ScheduleRounding::kCeil}) {
    EXPECT_EQ(parse_rounding(to_string(r)), r);
  }
  EXPECT_EQ(parse_direction(to_string(ScheduleDirection::kGrowth)), ScheduleDirection::kGrowth);
}

}  // namespace
}  // namespace fedgbf
