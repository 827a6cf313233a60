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

#include <map>
#include <optional>

#include "fedgbf/tree.h"

namespace fedgbf {

// Single-context builder over the union of all parties' columns. No
// encryption and no messages; feature ownership is kept only so that split
// records and lookup tables come out the same as under the protocol.
class LocalCoordinator final : public Coordinator {
 public:
  explicit LocalCoordinator(const std::vector<PartyTable>& parties,
                            FixedPointCodec codec = FixedPointCodec());

  std::size_t row_count() const override;
  std::vector<FeatureRef> features() const override;
  const std::vector<std::uint8_t>& labels() const override { return union_.labels; }
  const FixedPointCodec& codec() const override { return codec_; }

  void initialize_bins(std::span<const RowIndex> rows, int bin_count) override;
  void open_layer(std::uint32_t layer, std::span<const RowIndex> rows, bool rebin,
                  const FixedGrads& grads) override;
  void notify_samples(TreeKey, std::span<const RowIndex>,
                      std::span<const FeatureCode>) override {}
  std::vector<FeatureHistogram> histograms(TreeKey tree, std::uint32_t node,
                                           std::span<const RowIndex> rows,
                                           std::span<const FeatureCode> features) override;
  Partition apply_split(TreeKey tree, std::uint32_t node, const SplitCandidate& split,
                        LookupId lookup, std::span<const RowIndex> rows) override;
  Partition route(const SplitRecord& split, std::span<const RowIndex> rows) override;

  std::map<PartyId, LookupTable> export_lookup_tables() const override;
  void import_lookup_tables(const std::map<PartyId, LookupTable>& tables) override;

  const PartyTable& union_table() const { return union_; }

 private:
  PartyTable union_;
  std::map<FeatureCode, PartyId> owners_;
  FixedPointCodec codec_;
  int bin_count_ = kDefaultBinCount;
  std::optional<BinnedDataset> global_bins_;
  std::optional<BinnedDataset> layer_bins_;
  const BinnedDataset* current_bins_ = nullptr;
  FixedGrads grads_;
  std::map<PartyId, LookupTable> lookups_;
};

}  // namespace fedgbf
