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

#include "fedgbf/metrics.h"

#include <algorithm>
#include <numeric>
#include <vector>

#include "fedgbf/types.h"

namespace fedgbf {

double auc(std::span<const std::uint8_t> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw Error("labels and scores differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of positive ranks, averaging ranks over tied groups.
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        positive_rank_sum += mid_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) throw Error("AUC needs both classes");
  const double np = static_cast<double>(positives);
  const double nn = static_cast<double>(negatives);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

AccF1 acc_f1(std::span<const std::uint8_t> labels, std::span<const double> scores,
             double threshold) {
  if (labels.size() != scores.size()) throw Error("labels and scores differ in length");
  if (labels.empty()) throw Error("no predictions to score");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i]) {
      predicted ? ++tp : ++fn;
    } else {
      predicted ? ++fp : ++tn;
    }
  }
  AccF1 out;
  out.acc = static_cast<double>(tp + tn) / static_cast<double>(labels.size());
  if (tp > 0) {
    out.f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  }
  return out;
}

MetricReport evaluate_scores(std::span<const std::uint8_t> labels,
                             std::span<const double> scores, std::string model,
                             std::string split, int rounds) {
  MetricReport r;
  r.model = std::move(model);
  r.split = std::move(split);
  r.rounds = rounds;
  r.auc = auc(labels, scores);
  const AccF1 af = acc_f1(labels, scores);
  r.acc = af.acc;
  r.f1 = af.f1;
  return r;
}

}  // namespace fedgbf
