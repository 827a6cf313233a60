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

// Runtime model built from the time of one full-data tree (T_unit) and the
// pre-training overhead (T_0). A tree on a fraction alpha of the rows and
// beta of the features is assumed to cost alpha * beta * T_unit.

#pragma once

#include <span>
#include <vector>

namespace fedgbf {

struct LayerCost {
  double alpha = 1.0;  // row sampling rate
  double beta = 1.0;   // feature sampling rate
  int trees = 1;
};

struct RuntimeEstimate {
  double t_unit = 0.0;
  double t_0 = 0.0;
  double lower = 0.0;       // trees of a layer fully parallel
  double upper = 0.0;       // trees of a layer one after another
  double sequential = 0.0;  // the baseline, one tree per layer

  // lower <= sequential <= upper
  bool ordered() const { return lower <= sequential && sequential <= upper; }
};

// `baseline` describes the one-tree-per-layer model; when empty it is
// alpha = beta = 1 for as many layers as `layers` has.
// Throws if t_unit <= 0, t_0 < 0, a rate is outside (0, 1] or trees < 1.
RuntimeEstimate estimate_runtime(double t_unit, double t_0, std::span<const LayerCost> layers,
                                 std::span<const LayerCost> baseline = {});

// abs(1 - estimate / real). Throws if real <= 0.
double error_rate(double estimate, double real);

// Tree-cost ratio under row sampling, exactly as printed:
// alpha + log2(alpha) / log2(n). Can be negative for small n * alpha.
double complexity_ratio(double n, double alpha);
// (alpha n log2(alpha n)) / (n log2 n) = alpha (1 + log2(alpha) / log2(n)).
double exact_complexity_ratio(double n, double alpha);

struct UnitTimes {
  double t_unit = 0.0;
  double t_0 = 0.0;
};

// Least-squares fit of sequential = t_0 + rounds * t_unit.
UnitTimes fit_unit_times(std::span<const int> rounds, std::span<const double> sequential);

}  // namespace fedgbf
