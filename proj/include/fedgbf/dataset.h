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

// Tabular ingestion, vertical partitioning, sample alignment and quantile
// binning. Missing cells are carried as NaN throughout.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fedgbf/types.h"

namespace fedgbf {

inline constexpr int kDefaultBinCount = 32;

struct ColumnSchema {
  std::string label_column;
  // Empty: ids are row numbers. "#<k>": the k-th column, whatever its header.
  std::string id_column;
  std::vector<std::string> ignore_columns;
};

struct RawTable {
  std::vector<std::int64_t> ids;
  std::vector<std::string> feature_names;
  Matrix<double> values;  // rows x features, NaN = missing
  std::vector<std::uint8_t> labels;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index features() const { return values.cols(); }
  bool has_labels() const { return !labels.empty(); }
  bool is_missing(Eigen::Index row, Eigen::Index col) const {
    return std::isnan(values(row, col));
  }
};

RawTable load_csv(const std::string& path, const ColumnSchema& schema);
RawTable parse_csv(std::istream& in, const ColumnSchema& schema,
                   const std::string& source = "<stream>");

struct SyntheticSpec {
  std::size_t rows = 2000;
  std::size_t features = 10;
  std::uint64_t seed = 7;
  double missing_rate = 0.02;
};

// Binary classification data with a nonlinear logit, a few integer-valued
// (tied) columns and randomly missing cells. Ids are 0..rows-1.
RawTable synthetic_table(const SyntheticSpec& spec);

struct VerticalPartition {
  PartyId party;
  std::vector<FeatureCode> feature_codes;
  std::size_t column_count = 0;
};

// One party's private slice of the data. Only the active party holds labels.
struct PartyTable {
  VerticalPartition partition;
  std::vector<std::int64_t> ids;
  std::vector<std::string> feature_names;
  Matrix<double> values;
  std::vector<std::uint8_t> labels;

  const PartyId& party() const { return partition.party; }
  Eigen::Index rows() const { return values.rows(); }
  // Local column of a feature code owned by this party; throws otherwise.
  Eigen::Index column_of(FeatureCode code) const;
  bool owns(FeatureCode code) const;
};

// plan[p] = number of feature columns for party p, taken in column order.
// Party 0 is active and receives the label.
std::vector<PartyTable> partition_vertically(const RawTable& table,
                                             std::span<const int> plan);

struct AlignedIndex {
  std::vector<std::int64_t> sample_ids;
  std::size_t row_count() const { return sample_ids.size(); }
};

// Intersects sample ids (compared through a salted hash, standing in for PSI)
// and reorders every table to the common ascending order, dropping the rest.
AlignedIndex align_ids(std::vector<PartyTable>& tables,
                       std::uint64_t salt = 0x5bd1e995u);

// Empirical quantiles at fractions i/L, i = 1..L-1, by linear interpolation
// between order statistics. Input need not be sorted.
template <typename Scalar>
std::vector<Scalar> interpolated_quantiles(std::vector<Scalar> values, int L) {
  std::vector<Scalar> out;
  if (values.empty() || L < 2) return out;
  std::sort(values.begin(), values.end());
  const Scalar last = static_cast<Scalar>(values.size() - 1);
  for (int i = 1; i < L; ++i) {
    const Scalar pos = last * static_cast<Scalar>(i) / static_cast<Scalar>(L);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const Scalar frac = pos - static_cast<Scalar>(lo);
    out.push_back(values[lo] + frac * (values[hi] - values[lo]));
  }
  return out;
}

// Bin layout: [0, cuts) value bins closed on the right, then the overflow bin
// (value > last cut), then the missing bin.
struct QuantileBins {
  FeatureCode feature_code = 0;
  std::vector<double> cut_points;

  std::uint16_t overflow_bin() const {
    return static_cast<std::uint16_t>(cut_points.size());
  }
  std::uint16_t missing_bin() const {
    return static_cast<std::uint16_t>(cut_points.size() + 1);
  }
  std::uint16_t bin_count() const {
    return static_cast<std::uint16_t>(cut_points.size() + 2);
  }
  std::uint16_t bin_of(double value) const;
  // Largest value routed to bins <= bin; +inf for the overflow bin.
  double upper_edge(std::uint16_t bin) const {
    return bin < cut_points.size() ? cut_points[bin]
                                   : std::numeric_limits<double>::infinity();
  }
};

std::vector<QuantileBins> compute_bins(const PartyTable& table, int L,
                                       std::span<const RowIndex> rows);

struct BinnedDataset {
  std::vector<QuantileBins> bins;  // one per column, in table column order
  BinMatrix matrix;                // rows x columns

  Eigen::Index rows() const { return matrix.rows(); }
  Eigen::Index column_of(FeatureCode code) const;
  const QuantileBins& bins_of(FeatureCode code) const {
    return bins[static_cast<std::size_t>(column_of(code))];
  }
};

BinnedDataset apply_bins(const PartyTable& table,
                         std::vector<QuantileBins> bins);

}  // namespace fedgbf
