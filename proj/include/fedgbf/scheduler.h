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

// Per-round parameter ramps. Decay follows a quarter cosine from v_max down
// to v_min, Growth a quarter sine from v_min up to v_max; both reach their
// end value at round k*(b_T-1)+1 and hold it afterwards.

#pragma once

#include <string>
#include <vector>

namespace fedgbf {

enum class ScheduleDirection { kGrowth, kDecay };
enum class ScheduleRounding { kNone, kNearest, kCeil };

std::string to_string(ScheduleDirection direction);
ScheduleDirection parse_direction(const std::string& name);
std::string to_string(ScheduleRounding rounding);
ScheduleRounding parse_rounding(const std::string& name);

struct ScheduleSpec {
  double v_min = 0.0;
  double v_max = 0.0;
  double k = 1.0;
  int total_rounds = 1;
  ScheduleDirection direction = ScheduleDirection::kDecay;
  ScheduleRounding rounding = ScheduleRounding::kNone;

  // Holds v_min everywhere; used for fixed parameters.
  static ScheduleSpec constant(double value, int total_rounds,
                               ScheduleRounding rounding = ScheduleRounding::kNone);

  // Throws if v_min > v_max, k <= 0 or total_rounds < 1.
  void validate() const;
};

// round is 1-based. Rounded values are returned as whole-number doubles.
double schedule_value(const ScheduleSpec& spec, int round);

std::vector<double> schedule_table(const ScheduleSpec& spec);

}  // namespace fedgbf
