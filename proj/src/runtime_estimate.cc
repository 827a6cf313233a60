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

#include "fedgbf/runtime_estimate.h"

#include <cmath>
#include <string>

#include "fedgbf/types.h"

namespace fedgbf {

namespace {

void check_layer(const LayerCost& l) {
  if (!(l.alpha > 0.0 && l.alpha <= 1.0) || !(l.beta > 0.0 && l.beta <= 1.0)) {
    throw Error("sampling rates must be in (0, 1]");
  }
  if (l.trees < 1) throw Error("a layer needs at least one tree");
}

}  // namespace

RuntimeEstimate estimate_runtime(double t_unit, double t_0, std::span<const LayerCost> layers,
                                 std::span<const LayerCost> baseline) {
  if (!(t_unit > 0.0)) throw Error("T_unit must be positive");
  if (!(t_0 >= 0.0)) throw Error("T_0 must not be negative");
  RuntimeEstimate e;
  e.t_unit = t_unit;
  e.t_0 = t_0;
  e.lower = e.upper = t_0;
  for (const LayerCost& l : layers) {
    check_layer(l);
    const double single = l.alpha * l.beta * t_unit;
    e.lower += single;
    e.upper += l.trees * single;
  }
  e.sequential = t_0;
  if (baseline.empty()) {
    e.sequential += static_cast<double>(layers.size()) * t_unit;
  } else {
    for (const LayerCost& l : baseline) {
      check_layer(l);
      e.sequential += l.alpha * l.beta * t_unit;
    }
  }
  return e;
}

double error_rate(double estimate, double real) {
  if (!(real > 0.0)) throw Error("real time must be positive");
  return std::abs(1.0 - estimate / real);
}

double complexity_ratio(double n, double alpha) {
  if (!(n >= 2.0)) throw Error("n must be at least 2");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("alpha must be in (0, 1]");
  return alpha + std::log2(alpha) / std::log2(n);
}

double exact_complexity_ratio(double n, double alpha) {
  if (!(n >= 2.0)) throw Error("n must be at least 2");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("alpha must be in (0, 1]");
  return alpha * (1.0 + std::log2(alpha) / std::log2(n));
}

UnitTimes fit_unit_times(std::span<const int> rounds, std::span<const double> sequential) {
  if (rounds.size() != sequential.size() || rounds.size() < 2) {
    throw Error("need at least two (rounds, time) pairs");
  }
  const double k = static_cast<double>(rounds.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    const double x = rounds[i];
    sx += x;
    sy += sequential[i];
    sxx += x * x;
    sxy += x * sequential[i];
  }
  const double denom = k * sxx - sx * sx;
  if (denom == 0.0) throw Error("round counts must differ");
  UnitTimes u;
  u.t_unit = (k * sxy - sx * sy) / denom;
  u.t_0 = (sy - u.t_unit * sx) / k;
  return u;
}

}  // namespace fedgbf
