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

#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace fedgbf {

// Probability that a random positive scores above a random negative, ties
// counting one half. Throws unless both classes are present.
double auc(std::span<const std::uint8_t> labels, std::span<const double> scores);

struct AccF1 {
  double acc = 0.0;
  double f1 = 0.0;
};

// Predicts positive when score >= threshold. F1 is 0 when there are no true
// positives.
AccF1 acc_f1(std::span<const std::uint8_t> labels, std::span<const double> scores,
             double threshold = 0.5);

struct MetricReport {
  std::string model;
  std::string split;  // "train" or "test"
  int rounds = 0;
  double auc = 0.0;
  double acc = 0.0;
  double f1 = 0.0;
};

MetricReport evaluate_scores(std::span<const std::uint8_t> labels,
                             std::span<const double> scores, std::string model,
                             std::string split, int rounds);

}  // namespace fedgbf
