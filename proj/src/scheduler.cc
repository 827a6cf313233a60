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

#include "fedgbf/types.h"

namespace fedgbf {

std::string to_string(ScheduleDirection direction) {
  return direction == ScheduleDirection::kGrowth ? "growth" : "decay";
}

ScheduleDirection parse_direction(const std::string& name) {
  if (name == "growth") return ScheduleDirection::kGrowth;
  if (name == "decay") return ScheduleDirection::kDecay;
  throw Error("unknown schedule direction '" + name + "'");
}

std::string to_string(ScheduleRounding rounding) {
  switch (rounding) {
    case ScheduleRounding::kNone:
      return "none";
    case ScheduleRounding::kNearest:
      return "nearest";
    case ScheduleRounding::kCeil:
      return "ceil";
  }
  return "none";
}

ScheduleRounding parse_rounding(const std::string& name) {
  if (name == "none") return ScheduleRounding::kNone;
  if (name == "nearest") return ScheduleRounding::kNearest;
  if (name == "ceil") return ScheduleRounding::kCeil;
  throw Error("unknown rounding '" + name + "'");
}

ScheduleSpec ScheduleSpec::constant(double value, int total_rounds,
                                    ScheduleRounding rounding) {
  ScheduleSpec s;
  s.v_min = s.v_max = value;
  s.total_rounds = total_rounds;
  s.rounding = rounding;
  return s;
}

void ScheduleSpec::validate() const {
  if (!(v_min <= v_max)) throw Error("schedule needs v_min <= v_max");
  if (!(k > 0.0)) throw Error("schedule speed k must be positive");
  if (total_rounds < 1) throw Error("schedule needs at least one round");
}

namespace {

double raw_value(const ScheduleSpec& s, int round) {
  const bool decay = s.direction == ScheduleDirection::kDecay;
  if (s.total_rounds == 1) return decay ? s.v_max : s.v_min;
  const double span = s.k * static_cast<double>(s.total_rounds - 1);
  const double t = static_cast<double>(round - 1);
  if (t >= span) return decay ? s.v_min : s.v_max;
  const double phase = std::numbers::pi * t / (2.0 * span);
  const double amplitude = s.v_max - s.v_min;
  return decay ? s.v_min + amplitude * std::cos(phase)
               : s.v_min + amplitude * std::sin(phase);
}

}  // namespace

double schedule_value(const ScheduleSpec& spec, int round) {
  spec.validate();
  if (round < 1 || round > spec.total_rounds) {
    throw Error("round " + std::to_string(round) + " outside [1, " +
                std::to_string(spec.total_rounds) + "]");
  }
  const double v = raw_value(spec, round);
  switch (spec.rounding) {
    case ScheduleRounding::kNearest:
      return std::round(v);
    case ScheduleRounding::kCeil:
      return std::ceil(v);
    case ScheduleRounding::kNone:
      break;
  }
  return v;
}

std::vector<double> schedule_table(const ScheduleSpec& spec) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(spec.total_rounds));
  for (int r = 1; r <= spec.total_rounds; ++r) out.push_back(schedule_value(spec, r));
  return out;
}

}  // namespace fedgbf
