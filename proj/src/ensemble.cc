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

#include "fedgbf/ensemble.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

namespace fedgbf {

namespace {

std::size_t sample_count(std::size_t n, double rate, const char* what) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw Error(std::string(what) + " rate must be in (0, 1]");
  }
  const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(n) * rate));
  if (k == 0) {
    throw Error(std::string(what) + " sample of " + std::to_string(n) + " at rate " +
                std::to_string(rate) + " is empty");
  }
  return std::min(k, n);
}

// First k elements of a Fisher-Yates shuffle, sorted.
template <typename T>
std::vector<T> draw(std::span<const T> pool, std::size_t k, std::mt19937_64& rng) {
  std::vector<T> v(pool.begin(), pool.end());
  if (k < v.size()) {
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, v.size() - 1);
      std::swap(v[i], v[pick(rng)]);
    }
    v.resize(k);
  }
  std::sort(v.begin(), v.end());
  return v;
}

// Runs job(i) for i in [0, count) on up to `threads` workers. The first
// failure by index is rethrown.
template <typename Job>
void run_indexed(std::size_t count, int threads, Job&& job) {
  const auto workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<FeatureCode> feature_codes(const Coordinator& ctx) {
  std::vector<FeatureCode> out;
  for (const FeatureRef& f : ctx.features()) out.push_back(f.code);
  return out;
}

}  // namespace

SamplingPlan draw_sampling_plan(std::span<const RowIndex> rows,
                                std::span<const FeatureCode> features, double rho_id,
                                double rho_feat, std::mt19937_64& rng) {
  const std::size_t n_rows = sample_count(rows.size(), rho_id, "row");
  const std::size_t n_feats = sample_count(features.size(), rho_feat, "feature");
  SamplingPlan plan;
  plan.rho_id = rho_id;
  plan.rho_feat = rho_feat;
  plan.rows = draw(rows, n_rows, rng);
  plan.features = draw(features, n_feats, rng);
  return plan;
}

std::mt19937_64 tree_rng(std::uint64_t seed, std::uint32_t layer, std::uint32_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    layer, index};
  return std::mt19937_64(seq);
}

nlohmann::json GbfModel::to_json() const {
  nlohmann::json j;
  j["format"] = "fedgbf-model";
  j["version"] = kFormatVersion;
  j["learning_rate"] = learning_rate;
  j["base_margin"] = base_margin;
  j["config"] = config;
  nlohmann::json layers_json = nlohmann::json::array();
  for (const ForestLayer& l : layers) {
    nlohmann::json lj;
    lj["index"] = l.index;
    lj["trees_planned"] = l.config.trees;
    lj["rho_id"] = l.config.rho_id;
    lj["rho_feat"] = l.config.rho_feat;
    nlohmann::json trees = nlohmann::json::array();
    for (const TreeModel& t : l.trees) trees.push_back(t.to_json());
    lj["trees"] = std::move(trees);
    layers_json.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers_json);
  return j;
}

GbfModel GbfModel::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "fedgbf-model") throw DataError("not a model file");
  if (j.at("version").get<int>() != kFormatVersion) {
    throw DataError("unsupported model version " + j.at("version").dump());
  }
  GbfModel m;
  m.learning_rate = j.at("learning_rate").get<double>();
  m.base_margin = j.at("base_margin").get<double>();
  m.config = j.value("config", nlohmann::json::object());
  for (const auto& lj : j.at("layers")) {
    ForestLayer l;
    l.index = lj.at("index").get<std::uint32_t>();
    l.config.trees = lj.at("trees_planned").get<int>();
    l.config.rho_id = lj.at("rho_id").get<double>();
    l.config.rho_feat = lj.at("rho_feat").get<double>();
    for (const auto& tj : lj.at("trees")) l.trees.push_back(TreeModel::from_json(tj));
    if (l.trees.empty()) throw DataError("model layer without trees");
    m.layers.push_back(std::move(l));
  }
  return m;
}

ForestLayer train_layer(Coordinator& ctx, std::uint32_t layer,
                        std::span<const RowIndex> train_rows, const LayerConfig& config,
                        const BoostingParams& params, std::span<const double> margins) {
  if (config.trees < 1) throw Error("a layer needs at least one tree");
  if (margins.size() != ctx.row_count()) throw Error("margins are not row-aligned");

  const std::vector<GradPair> pairs = compute_grad_pairs(ctx.labels(), margins);
  const FixedGrads grads = encode_grads(pairs, ctx.codec());
  const std::vector<FeatureCode> all_features = feature_codes(ctx);

  const auto count = static_cast<std::size_t>(config.trees);
  std::vector<TreeTask> tasks(count);
  RowList union_rows;
  for (std::size_t j = 0; j < count; ++j) {
    auto rng = tree_rng(params.seed, layer, static_cast<std::uint32_t>(j));
    SamplingPlan plan =
        draw_sampling_plan(train_rows, all_features, config.rho_id, config.rho_feat, rng);
    tasks[j].key = {layer, static_cast<std::uint32_t>(j)};
    tasks[j].rows = std::move(plan.rows);
    tasks[j].features = std::move(plan.features);
    union_rows.insert(union_rows.end(), tasks[j].rows.begin(), tasks[j].rows.end());
  }
  std::sort(union_rows.begin(), union_rows.end());
  union_rows.erase(std::unique(union_rows.begin(), union_rows.end()), union_rows.end());

  ctx.open_layer(layer, union_rows, config.rho_id < 1.0, grads);

  ForestLayer out;
  out.index = layer;
  out.config = config;
  out.trees.resize(count);
  run_indexed(count, params.threads, [&](std::size_t j) {
    ctx.notify_samples(tasks[j].key, tasks[j].rows, tasks[j].features);
    out.trees[j] = grow_tree(ctx, tasks[j], grads, params.tree);
  });
  return out;
}

GbfModel train_layers(Coordinator& ctx, std::span<const RowIndex> train_rows,
                      std::span<const LayerConfig> layers, const BoostingParams& params,
                      const LayerObserver& observer) {
  if (train_rows.empty()) throw Error("no training rows");
  GbfModel model;
  model.learning_rate = params.learning_rate;
  model.config = {{"learning_rate", params.learning_rate},
                  {"max_depth", params.tree.max_depth},
                  {"lambda", params.tree.split.lambda},
                  {"gamma", params.tree.split.gamma},
                  {"min_rows_leaf", params.tree.split.min_rows_leaf},
                  {"min_child_hessian", params.tree.split.min_child_hessian},
                  {"bins", params.bins},
                  {"seed", params.seed},
                  {"rounds", layers.size()}};

  ctx.initialize_bins(train_rows, params.bins);
  std::vector<double> margins(ctx.row_count(), model.base_margin);

  for (std::size_t m = 0; m < layers.size(); ++m) {
    const auto start = std::chrono::steady_clock::now();
    const auto index = static_cast<std::uint32_t>(m + 1);
    ForestLayer layer = train_layer(ctx, index, train_rows, layers[m], params, margins);
    const std::vector<double> f = layer_output(layer, ctx, train_rows);
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      margins[train_rows[i]] += params.learning_rate * f[i];
    }
    if (observer) {
      LayerReport report;
      report.layer = index;
      report.config = layers[m];
      report.train_loss = log_loss(ctx.labels(), margins, train_rows);
      report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      report.rows_per_tree.assign(
          layer.trees.size(), static_cast<std::size_t>(std::llround(
                                  static_cast<double>(train_rows.size()) * layers[m].rho_id)));
      observer(report);
    }
    model.layers.push_back(std::move(layer));
  }
  return model;
}

GbfModel train_fedgbf(Coordinator& ctx, std::span<const RowIndex> train_rows,
                      const FedGbfConfig& config, const BoostingParams& params,
                      const LayerObserver& observer) {
  if (config.rounds < 0) throw Error("negative round count");
  const std::vector<LayerConfig> layers(static_cast<std::size_t>(config.rounds), config.layer);
  return train_layers(ctx, train_rows, layers, params, observer);
}

std::vector<LayerConfig> plan_dynamic_layers(const DynamicConfig& config) {
  if (config.rounds < 1) throw Error("a dynamic schedule needs at least one round");
  ScheduleSpec trees = config.trees;
  ScheduleSpec rho_id = config.rho_id;
  ScheduleSpec rho_feat = config.rho_feat;
  trees.total_rounds = rho_id.total_rounds = rho_feat.total_rounds = config.rounds;
  if (trees.rounding == ScheduleRounding::kNone) trees.rounding = ScheduleRounding::kNearest;
  std::vector<LayerConfig> out;
  for (int m = 1; m <= config.rounds; ++m) {
    LayerConfig l;
    l.trees = std::max(1, static_cast<int>(schedule_value(trees, m)));
    l.rho_id = schedule_value(rho_id, m);
    l.rho_feat = schedule_value(rho_feat, m);
    out.push_back(l);
  }
  return out;
}

GbfModel train_dynamic_fedgbf(Coordinator& ctx, std::span<const RowIndex> train_rows,
                              const DynamicConfig& config, const BoostingParams& params,
                              const LayerObserver& observer) {
  const std::vector<LayerConfig> layers = plan_dynamic_layers(config);
  return train_layers(ctx, train_rows, layers, params, observer);
}

std::vector<double> layer_output(const ForestLayer& layer, Coordinator& ctx,
                                 std::span<const RowIndex> rows) {
  std::vector<double> sum(rows.size(), 0.0);
  for (const TreeModel& t : layer.trees) {
    const std::vector<double> v = predict_tree(t, ctx, rows);
    for (std::size_t i = 0; i < v.size(); ++i) sum[i] += v[i];
  }
  const double n = static_cast<double>(layer.trees.size());
  for (double& s : sum) s /= n;
  return sum;
}

std::vector<double> predict_margins(const GbfModel& model, Coordinator& ctx,
                                    std::span<const RowIndex> rows) {
  std::vector<double> out(rows.size(), model.base_margin);
  for (const ForestLayer& layer : model.layers) {
    const std::vector<double> f = layer_output(layer, ctx, rows);
    for (std::size_t i = 0; i < f.size(); ++i) out[i] += model.learning_rate * f[i];
  }
  return out;
}

std::vector<double> predict(const GbfModel& model, Coordinator& ctx,
                            std::span<const RowIndex> rows) {
  std::vector<double> out = predict_margins(model, ctx, rows);
  for (double& v : out) v = sigmoid(v);
  return out;
}

double log_loss(std::span<const std::uint8_t> labels, std::span<const double> margins,
                std::span<const RowIndex> rows) {
  if (rows.empty()) return 0.0;
  double total = 0.0;
  for (RowIndex r : rows) {
    const double p = std::clamp(sigmoid(margins[r]), 1e-15, 1.0 - 1e-15);
    total -= labels[r] ? std::log(p) : std::log1p(-p);
  }
  return total / static_cast<double>(rows.size());
}

}  // namespace fedgbf
