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

// Second-order histogram trees grown from the active party's point of view.
//
// The builder never touches feature values. It sees per-bin gradient sums
// for every selected feature (plaintext for its own, decrypted for the
// passive parties'), picks the best split and asks the feature's owner to
// record it and partition the node rows. All of that goes through a
// Coordinator, so the same builder runs over the message protocol or over a
// single centralized table.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "fedgbf/crypto.h"
#include "fedgbf/dataset.h"
#include "fedgbf/types.h"

namespace fedgbf {

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

struct GradPair {
  double g = 0.0;
  double h = 0.0;
};

// Binary logistic loss on margins: g = p - y, h = p (1 - p).
std::vector<GradPair> compute_grad_pairs(std::span<const std::uint8_t> labels,
                                         std::span<const double> margins);

// Per-row fixed-point gradients kept by the active party, indexed by RowIndex.
struct FixedGrads {
  std::vector<std::int64_t> g;
  std::vector<std::int64_t> h;

  std::size_t size() const { return g.size(); }
};

FixedGrads encode_grads(std::span<const GradPair> grads,
                        const FixedPointCodec& codec);

struct BinStats {
  Fixed g = 0;
  Fixed h = 0;
  std::int64_t count = 0;

  BinStats& operator+=(const BinStats& o) {
    g += o.g;
    h += o.h;
    count += o.count;
    return *this;
  }
  friend BinStats operator-(BinStats a, const BinStats& b) {
    a.g -= b.g;
    a.h -= b.h;
    a.count -= b.count;
    return a;
  }
  bool operator==(const BinStats&) const = default;
};

// Per-bin sums for one feature over one node's rows. The last bin is the
// missing-value bin; the one before it is the overflow bin.
struct FeatureHistogram {
  FeatureCode feature_code = 0;
  PartyId owner;
  std::vector<BinStats> bins;

  BinStats total() const;
};

FeatureHistogram build_histogram(const BinnedDataset& binned, FeatureCode code,
                                 PartyId owner, std::span<const RowIndex> rows,
                                 const FixedGrads& grads);

struct SplitParams {
  double lambda = 1.0;
  double gamma = 0.0;
  int min_rows_leaf = 10;
  double min_child_hessian = 1e-3;
};

// 1/2 [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)] - gamma
double split_score(double GL, double HL, double GR, double HR, double lambda,
                   double gamma);

struct SplitCandidate {
  FeatureCode feature_code = 0;
  PartyId owner;
  std::uint16_t bin = 0;  // rows with bin <= this go left
  bool missing_left = true;
  double gain = 0.0;
};

// Best admissible split with score > 0 (gamma already subtracted), or none.
// Ties resolve to the lower feature code, then the lower bin, then missing
// going left.
std::optional<SplitCandidate> best_split(std::span<const FeatureHistogram> histograms,
                                         const SplitParams& params,
                                         const FixedPointCodec& codec);

// -G / (H + lambda). Throws when H + lambda <= 0.
double leaf_weight(double G, double H, double lambda);

// What the active party keeps about a split. The threshold stays with the
// owner, behind lookup_id.
struct SplitRecord {
  PartyId owner;
  FeatureCode feature_code = 0;
  LookupId lookup_id = 0;
  double gain = 0.0;
  bool default_left = true;
};

struct TreeNode {
  bool is_leaf = true;
  double weight = 0.0;
  SplitRecord split;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint32_t depth = 0;
};

struct TreeParams {
  int max_depth = 3;
  SplitParams split;
};

struct TreeModel {
  std::vector<TreeNode> nodes;
  int max_depth = 0;
  double lambda = 0.0;
  double gamma = 0.0;

  std::size_t leaf_count() const;
  nlohmann::json to_json() const;
  static TreeModel from_json(const nlohmann::json& j);
};

struct TreeKey {
  std::uint32_t layer = 0;
  std::uint32_t index = 0;

  auto operator<=>(const TreeKey&) const = default;
};

// Deterministic so that concurrently built trees get reproducible ids.
LookupId make_lookup_id(TreeKey key, std::uint32_t node);

// Owner-side record behind a lookup id.
struct LookupEntry {
  FeatureCode feature_code = 0;
  std::uint16_t bin = 0;
  double threshold = 0.0;  // value <= threshold goes left
  bool missing_left = true;
};

class LookupTable {
 public:
  void add(LookupId id, const LookupEntry& entry);
  // Throws ProtocolError on an unknown id.
  LookupEntry at(LookupId id) const;
  bool contains(LookupId id) const;
  std::size_t size() const;

  nlohmann::json to_json() const;
  static LookupTable from_json(const nlohmann::json& j);
  LookupTable(const LookupTable& other);
  LookupTable& operator=(const LookupTable& other);
  LookupTable() = default;

 private:
  mutable std::mutex mu_;
  std::map<LookupId, LookupEntry> entries_;
};

struct Partition {
  RowList left;
  RowList right;
};

// Routes rows by the owner's raw values: value <= threshold goes left,
// missing values follow missing_left.
Partition partition_rows(const PartyTable& table, const LookupEntry& entry,
                         std::span<const RowIndex> rows);

struct FeatureRef {
  FeatureCode code = 0;
  PartyId owner;
};

// Everything the active party needs from the federation while boosting.
// Implementations must tolerate concurrent calls for different trees.
class Coordinator {
 public:
  virtual ~Coordinator() = default;

  virtual std::size_t row_count() const = 0;
  // All features, ascending by code.
  virtual std::vector<FeatureRef> features() const = 0;
  virtual const std::vector<std::uint8_t>& labels() const = 0;
  virtual const FixedPointCodec& codec() const = 0;

  // Global quantile bins computed on `rows` at every party.
  virtual void initialize_bins(std::span<const RowIndex> rows, int bin_count) = 0;
  // Starts a boosting layer: optional re-binning on `rows` and delivery of
  // the layer's gradients for `rows`.
  virtual void open_layer(std::uint32_t layer, std::span<const RowIndex> rows,
                          bool rebin, const FixedGrads& grads) = 0;
  virtual void notify_samples(TreeKey tree, std::span<const RowIndex> rows,
                              std::span<const FeatureCode> features) = 0;
  virtual std::vector<FeatureHistogram> histograms(
      TreeKey tree, std::uint32_t node, std::span<const RowIndex> rows,
      std::span<const FeatureCode> features) = 0;
  virtual Partition apply_split(TreeKey tree, std::uint32_t node,
                                const SplitCandidate& split, LookupId lookup,
                                std::span<const RowIndex> rows) = 0;
  virtual Partition route(const SplitRecord& split,
                          std::span<const RowIndex> rows) = 0;

  // Owner-held lookup tables, for persisting a model next to its parties.
  virtual std::map<PartyId, LookupTable> export_lookup_tables() const = 0;
  virtual void import_lookup_tables(const std::map<PartyId, LookupTable>& tables) = 0;
};

struct TreeTask {
  TreeKey key;
  RowList rows;
  std::vector<FeatureCode> features;
};

TreeModel grow_tree(Coordinator& ctx, const TreeTask& task,
                    const FixedGrads& grads, const TreeParams& params);

// Leaf values for `rows`, in the same order.
std::vector<double> predict_tree(const TreeModel& tree, Coordinator& ctx,
                                 std::span<const RowIndex> rows);
double predict_row(const TreeModel& tree, Coordinator& ctx, RowIndex row);

}  // namespace fedgbf
