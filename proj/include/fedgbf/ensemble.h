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

// Boosted forest layers. Each layer is N_m trees grown on independent row
// and feature subsamples, averaged, scaled by the learning rate and added to
// the running margins. N_m = 1 with full sampling is a plain boosted tree
// sequence.

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "fedgbf/scheduler.h"
#include "fedgbf/tree.h"

namespace fedgbf {

struct SamplingPlan {
  double rho_id = 1.0;
  double rho_feat = 1.0;
  RowList rows;                       // ascending
  std::vector<FeatureCode> features;  // ascending
};

// Draws round(n * rho_id) of `rows` and round(d * rho_feat) of `features`
// without replacement. Throws when a rate is outside (0, 1] or a count
// rounds to zero.
SamplingPlan draw_sampling_plan(std::span<const RowIndex> rows,
                                std::span<const FeatureCode> features, double rho_id,
                                double rho_feat, std::mt19937_64& rng);

// Generator for tree `index` of `layer`; independent of build order.
std::mt19937_64 tree_rng(std::uint64_t seed, std::uint32_t layer, std::uint32_t index);

struct LayerConfig {
  int trees = 1;
  double rho_id = 1.0;
  double rho_feat = 1.0;

  bool operator==(const LayerConfig&) const = default;
};

struct BoostingParams {
  double learning_rate = 0.1;
  TreeParams tree;
  int bins = kDefaultBinCount;
  std::uint64_t seed = 0;
  // Concurrent tree builders per layer.
  int threads = 1;
};

struct ForestLayer {
  std::uint32_t index = 0;  // 1-based boosting round
  LayerConfig config;
  std::vector<TreeModel> trees;
};

struct GbfModel {
  std::vector<ForestLayer> layers;
  double learning_rate = 0.1;
  double base_margin = 0.0;
  nlohmann::json config = nlohmann::json::object();

  static constexpr int kFormatVersion = 1;

  nlohmann::json to_json() const;
  static GbfModel from_json(const nlohmann::json& j);
  // Canonical text form; equal models give equal strings.
  std::string serialize() const { return to_json().dump(); }
};

struct LayerReport {
  std::uint32_t layer = 0;
  LayerConfig config;
  double train_loss = 0.0;
  double seconds = 0.0;
  std::vector<std::size_t> rows_per_tree;
};

using LayerObserver = std::function<void(const LayerReport&)>;

// Grows one layer on gradients computed from `margins` (indexed by RowIndex).
// Bins are recomputed on the union of sampled rows when rho_id < 1.
ForestLayer train_layer(Coordinator& ctx, std::uint32_t layer,
                        std::span<const RowIndex> train_rows, const LayerConfig& config,
                        const BoostingParams& params, std::span<const double> margins);

// Runs one boosting round per entry of `layers`. Bins are initialized on
// `train_rows` first.
GbfModel train_layers(Coordinator& ctx, std::span<const RowIndex> train_rows,
                      std::span<const LayerConfig> layers, const BoostingParams& params,
                      const LayerObserver& observer = {});

struct FedGbfConfig {
  int rounds = 20;
  LayerConfig layer;
};

GbfModel train_fedgbf(Coordinator& ctx, std::span<const RowIndex> train_rows,
                      const FedGbfConfig& config, const BoostingParams& params,
                      const LayerObserver& observer = {});

struct DynamicConfig {
  int rounds = 20;
  ScheduleSpec trees;   // rounded per trees.rounding (nearest if none), at least 1
  ScheduleSpec rho_id;
  ScheduleSpec rho_feat = ScheduleSpec::constant(1.0, 1);
};

// The schedules are evaluated with b_T = rounds, whatever their own
// total_rounds says.
std::vector<LayerConfig> plan_dynamic_layers(const DynamicConfig& config);

GbfModel train_dynamic_fedgbf(Coordinator& ctx, std::span<const RowIndex> train_rows,
                              const DynamicConfig& config, const BoostingParams& params,
                              const LayerObserver& observer = {});

// Mean tree output of one layer (before the learning rate).
std::vector<double> layer_output(const ForestLayer& layer, Coordinator& ctx,
                                 std::span<const RowIndex> rows);
std::vector<double> predict_margins(const GbfModel& model, Coordinator& ctx,
                                    std::span<const RowIndex> rows);
std::vector<double> predict(const GbfModel& model, Coordinator& ctx,
                            std::span<const RowIndex> rows);

// Mean binary log loss of probabilities sigmoid(margins[r]) over `rows`.
double log_loss(std::span<const std::uint8_t> labels, std::span<const double> margins,
                std::span<const RowIndex> rows);

}  // namespace fedgbf
