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

#include "fedgbf/local_coordinator.h"

namespace fedgbf {

LocalCoordinator::LocalCoordinator(const std::vector<PartyTable>& parties,
                                   FixedPointCodec codec)
    : codec_(codec) {
  if (parties.empty()) throw Error("no party tables");
  const Eigen::Index n = parties.front().rows();
  Eigen::Index total = 0;
  for (const PartyTable& p : parties) {
    if (p.rows() != n) throw Error("party tables are not aligned");
    total += p.values.cols();
  }
  union_.partition.party = {0, Role::kActive};
  union_.partition.column_count = static_cast<std::size_t>(total);
  union_.ids = parties.front().ids;
  union_.values.resize(n, total);
  Eigen::Index col = 0;
  for (const PartyTable& p : parties) {
    union_.values.middleCols(col, p.values.cols()) = p.values;
    col += p.values.cols();
    for (std::size_t c = 0; c < p.partition.feature_codes.size(); ++c) {
      union_.partition.feature_codes.push_back(p.partition.feature_codes[c]);
      union_.feature_names.push_back(p.feature_names[c]);
      owners_[p.partition.feature_codes[c]] = p.party();
    }
    if (p.party().is_active()) union_.labels = p.labels;
    lookups_[p.party()];
  }
}

std::size_t LocalCoordinator::row_count() const {
  return static_cast<std::size_t>(union_.rows());
}

std::vector<FeatureRef> LocalCoordinator::features() const {
  std::vector<FeatureRef> out;
  for (const auto& [code, owner] : owners_) out.push_back({code, owner});
  return out;
}

void LocalCoordinator::initialize_bins(std::span<const RowIndex> rows, int bin_count) {
  bin_count_ = bin_count;
  global_bins_ = apply_bins(union_, compute_bins(union_, bin_count, rows));
  current_bins_ = &*global_bins_;
}

void LocalCoordinator::open_layer(std::uint32_t, std::span<const RowIndex> rows,
                                  bool rebin, const FixedGrads& grads) {
  if (!global_bins_) throw Error("bins not initialized");
  if (rebin) {
    layer_bins_ = apply_bins(union_, compute_bins(union_, bin_count_, rows));
    current_bins_ = &*layer_bins_;
  } else {
    current_bins_ = &*global_bins_;
  }
  grads_ = grads;
}

std::vector<FeatureHistogram> LocalCoordinator::histograms(
    TreeKey, std::uint32_t, std::span<const RowIndex> rows,
    std::span<const FeatureCode> features) {
  if (!current_bins_) throw Error("no layer is open");
  std::vector<FeatureHistogram> out;
  out.reserve(features.size());
  for (FeatureCode code : features) {
    out.push_back(build_histogram(*current_bins_, code, owners_.at(code), rows, grads_));
  }
  return out;
}

Partition LocalCoordinator::apply_split(TreeKey, std::uint32_t,
                                        const SplitCandidate& split, LookupId lookup,
                                        std::span<const RowIndex> rows) {
  const QuantileBins& bins = current_bins_->bins_of(split.feature_code);
  const LookupEntry entry{split.feature_code, split.bin, bins.upper_edge(split.bin),
                          split.missing_left};
  lookups_.at(owners_.at(split.feature_code)).add(lookup, entry);
  return partition_rows(union_, entry, rows);
}

Partition LocalCoordinator::route(const SplitRecord& split,
                                  std::span<const RowIndex> rows) {
  auto it = lookups_.find(split.owner);
  if (it == lookups_.end()) throw ProtocolError("unknown split owner " + split.owner.str());
  return partition_rows(union_, it->second.at(split.lookup_id), rows);
}

std::map<PartyId, LookupTable> LocalCoordinator::export_lookup_tables() const {
  return lookups_;
}

void LocalCoordinator::import_lookup_tables(const std::map<PartyId, LookupTable>& tables) {
  for (const auto& [party, table] : tables) lookups_[party] = table;
}

}  // namespace fedgbf
