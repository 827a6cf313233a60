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

#include "fedgbf/dataset.h"

#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace fedgbf {

std::string PartyId::str() const {
  return (role == Role::kActive ? "A" : "P") + std::to_string(index);
}

PartyId PartyId::parse(const std::string& text) {
  if (text.size() < 2 || (text[0] != 'A' && text[0] != 'P')) {
    throw Error("bad party id '" + text + "'");
  }
  PartyId id;
  id.role = text[0] == 'A' ? Role::kActive : Role::kPassive;
  id.index = static_cast<std::uint32_t>(std::stoul(text.substr(1)));
  return id;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// RFC-4180-ish: double quotes group commas, "" escapes a quote.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

bool is_missing_token(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" ||
         s == "null" || s == "NULL" || s == "?";
}

double parse_number(const std::string& cell, std::size_t row,
                    const std::string& column, const std::string& source) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw DataError(source + ": row " + std::to_string(row) + ", column '" +
                    column + "': cannot parse '" + cell + "' as a number");
  }
  return v;
}

}  // namespace

RawTable parse_csv(std::istream& in, const ColumnSchema& schema,
                   const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty file");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    line.erase(0, 3);
  }
  const std::vector<std::string> header = split_csv_line(line);

  int id_col = -1;
  if (!schema.id_column.empty()) {
    if (schema.id_column[0] == '#') {
      id_col = std::stoi(schema.id_column.substr(1));
    } else {
      auto it = std::find(header.begin(), header.end(), schema.id_column);
      if (it == header.end()) {
        throw DataError(source + ": id column '" + schema.id_column +
                        "' not in header");
      }
      id_col = static_cast<int>(it - header.begin());
    }
    if (id_col < 0 || id_col >= static_cast<int>(header.size())) {
      throw DataError(source + ": id column index out of range");
    }
  }
  int label_col = -1;
  if (!schema.label_column.empty()) {
    auto it = std::find(header.begin(), header.end(), schema.label_column);
    if (it == header.end()) {
      throw DataError(source + ": label column '" + schema.label_column +
                      "' not in header");
    }
    label_col = static_cast<int>(it - header.begin());
  }

  RawTable table;
  std::vector<int> feature_cols;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    if (c == id_col || c == label_col) continue;
    if (std::find(schema.ignore_columns.begin(), schema.ignore_columns.end(),
                  header[c]) != schema.ignore_columns.end()) {
      continue;
    }
    feature_cols.push_back(c);
    table.feature_names.push_back(header[c]);
  }

  std::vector<double> cells;  // row-major staging
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> parts = split_csv_line(line);
    if (parts.size() != header.size()) {
      throw DataError(source + ": row " + std::to_string(row) + " has " +
                      std::to_string(parts.size()) + " cells, header has " +
                      std::to_string(header.size()));
    }
    if (id_col >= 0) {
      const std::string& cell = parts[static_cast<std::size_t>(id_col)];
      std::int64_t id = 0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), id);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw DataError(source + ": row " + std::to_string(row) + ", column '" +
                        header[static_cast<std::size_t>(id_col)] +
                        "': bad sample id '" + cell + "'");
      }
      table.ids.push_back(id);
    } else {
      table.ids.push_back(static_cast<std::int64_t>(row - 1));
    }
    if (label_col >= 0) {
      const std::string& cell = parts[static_cast<std::size_t>(label_col)];
      const std::string& name = header[static_cast<std::size_t>(label_col)];
      if (is_missing_token(cell)) {
        throw DataError(source + ": row " + std::to_string(row) + ", column '" +
                        name + "': missing label");
      }
      const double v = parse_number(cell, row, name, source);
      if (v != 0.0 && v != 1.0) {
        throw DataError(source + ": row " + std::to_string(row) + ", column '" +
                        name + "': label must be 0 or 1, got '" + cell + "'");
      }
      table.labels.push_back(static_cast<std::uint8_t>(v));
    }
    for (int c : feature_cols) {
      const std::string& cell = parts[static_cast<std::size_t>(c)];
      cells.push_back(is_missing_token(cell)
                          ? std::numeric_limits<double>::quiet_NaN()
                          : parse_number(cell, row, header[c], source));
    }
  }
  const auto n = static_cast<Eigen::Index>(row);
  const auto d = static_cast<Eigen::Index>(feature_cols.size());
  table.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                          Eigen::RowMajor>>(cells.data(), n, d);
  return table;
}

RawTable load_csv(const std::string& path, const ColumnSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_csv(in, schema, path);
}

Eigen::Index PartyTable::column_of(FeatureCode code) const {
  const auto& codes = partition.feature_codes;
  auto it = std::find(codes.begin(), codes.end(), code);
  if (it == codes.end()) {
    throw ProtocolError("feature code " + std::to_string(code) +
                        " is not owned by " + party().str());
  }
  return it - codes.begin();
}

bool PartyTable::owns(FeatureCode code) const {
  const auto& codes = partition.feature_codes;
  return std::find(codes.begin(), codes.end(), code) != codes.end();
}

RawTable synthetic_table(const SyntheticSpec& spec) {
  if (spec.rows == 0 || spec.features == 0) throw Error("empty synthetic table");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(spec.rows);
  const auto d = static_cast<Eigen::Index>(spec.features);

  RawTable t;
  t.values.resize(n, d);
  for (Eigen::Index c = 0; c < d; ++c) t.feature_names.push_back("x" + std::to_string(c));
  std::vector<double> weights(spec.features);
  for (double& w : weights) w = normal(rng);
  for (Eigen::Index r = 0; r < n; ++r) {
    double logit = -0.5;
    for (Eigen::Index c = 0; c < d; ++c) {
      double v = normal(rng);
      if (c % 3 == 2) v = std::round(2.0 * v);  // coarse column with ties
      t.values(r, c) = v;
      logit += weights[static_cast<std::size_t>(c)] * v / std::sqrt(static_cast<double>(d));
    }
    if (d >= 2) logit += 0.8 * t.values(r, 0) * t.values(r, 1);
    const double p = 1.0 / (1.0 + std::exp(-logit));
    t.labels.push_back(unit(rng) < p ? 1 : 0);
    t.ids.push_back(r);
    for (Eigen::Index c = 0; c < d; ++c) {
      if (unit(rng) < spec.missing_rate) {
        t.values(r, c) = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  return t;
}

std::vector<PartyTable> partition_vertically(const RawTable& table,
                                             std::span<const int> plan) {
  if (plan.empty()) throw Error("partition plan is empty");
  long total = 0;
  for (int k : plan) {
    if (k < 0) throw Error("partition plan has a negative column count");
    total += k;
  }
  if (total != table.features()) {
    throw Error("partition plan covers " + std::to_string(total) +
                " columns but the table has " +
                std::to_string(table.features()) + " features");
  }
  if (!table.has_labels()) throw Error("table has no label column");

  std::vector<PartyTable> parties;
  Eigen::Index col = 0;
  for (std::size_t p = 0; p < plan.size(); ++p) {
    PartyTable part;
    part.partition.party = {static_cast<std::uint32_t>(p),
                            p == 0 ? Role::kActive : Role::kPassive};
    part.partition.column_count = static_cast<std::size_t>(plan[p]);
    part.ids = table.ids;
    part.values = table.values.middleCols(col, plan[p]);
    for (int c = 0; c < plan[p]; ++c) {
      part.partition.feature_codes.push_back(static_cast<FeatureCode>(col + c));
      part.feature_names.push_back(
          table.feature_names[static_cast<std::size_t>(col + c)]);
    }
    if (p == 0) part.labels = table.labels;
    col += plan[p];
    parties.push_back(std::move(part));
  }
  return parties;
}

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

AlignedIndex align_ids(std::vector<PartyTable>& tables, std::uint64_t salt) {
  if (tables.empty()) throw Error("no tables to align");
  // Each party publishes salted hashes only.
  std::vector<std::unordered_map<std::uint64_t, std::int64_t>> published;
  for (const PartyTable& t : tables) {
    std::unordered_map<std::uint64_t, std::int64_t> h;
    for (std::int64_t id : t.ids) {
      h.emplace(mix64(static_cast<std::uint64_t>(id) ^ salt), id);
    }
    published.push_back(std::move(h));
  }
  std::vector<std::int64_t> common;
  for (const auto& [hash, id] : published.front()) {
    bool everywhere = true;
    for (std::size_t p = 1; p < published.size() && everywhere; ++p) {
      everywhere = published[p].contains(hash);
    }
    if (everywhere) common.push_back(id);
  }
  if (common.empty()) throw DataError("sample id intersection is empty");
  std::sort(common.begin(), common.end());

  for (PartyTable& t : tables) {
    std::unordered_map<std::int64_t, Eigen::Index> pos;
    for (std::size_t r = 0; r < t.ids.size(); ++r) {
      pos.emplace(t.ids[r], static_cast<Eigen::Index>(r));
    }
    Matrix<double> values(static_cast<Eigen::Index>(common.size()),
                          t.values.cols());
    std::vector<std::uint8_t> labels;
    for (std::size_t r = 0; r < common.size(); ++r) {
      const Eigen::Index src = pos.at(common[r]);
      values.row(static_cast<Eigen::Index>(r)) = t.values.row(src);
      if (!t.labels.empty()) labels.push_back(t.labels[static_cast<std::size_t>(src)]);
    }
    t.values = std::move(values);
    t.labels = std::move(labels);
    t.ids = common;
  }
  return AlignedIndex{std::move(common)};
}

std::uint16_t QuantileBins::bin_of(double value) const {
  if (std::isnan(value)) return missing_bin();
  auto it = std::lower_bound(cut_points.begin(), cut_points.end(), value);
  return static_cast<std::uint16_t>(it - cut_points.begin());
}

std::vector<QuantileBins> compute_bins(const PartyTable& table, int L,
                                       std::span<const RowIndex> rows) {
  if (L < 1) throw Error("bin count L must be >= 1");
  if (L > 65000) throw Error("bin count L too large");
  if (rows.empty()) throw Error("cannot bin an empty row set");
  std::vector<QuantileBins> out;
  out.reserve(static_cast<std::size_t>(table.values.cols()));
  std::vector<double> column;
  for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
    column.clear();
    for (RowIndex r : rows) {
      if (r >= table.rows()) throw Error("bin row index out of range");
      const double v = table.values(r, c);
      if (!std::isnan(v)) column.push_back(v);
    }
    QuantileBins bins;
    bins.feature_code = table.partition.feature_codes[static_cast<std::size_t>(c)];
    if (!column.empty()) {
      // L == 1 yields no cuts: every value lands in the overflow bin.
      bins.cut_points = interpolated_quantiles(std::move(column), L);
      bins.cut_points.erase(
          std::unique(bins.cut_points.begin(), bins.cut_points.end()),
          bins.cut_points.end());
    }
    out.push_back(std::move(bins));
  }
  return out;
}

Eigen::Index BinnedDataset::column_of(FeatureCode code) const {
  for (std::size_t c = 0; c < bins.size(); ++c) {
    if (bins[c].feature_code == code) return static_cast<Eigen::Index>(c);
  }
  throw ProtocolError("no bins for feature code " + std::to_string(code));
}

BinnedDataset apply_bins(const PartyTable& table,
                         std::vector<QuantileBins> bins) {
  if (static_cast<Eigen::Index>(bins.size()) != table.values.cols()) {
    throw Error("bins do not match the table's columns");
  }
  BinnedDataset out;
  out.matrix.resize(table.rows(), table.values.cols());
  for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
    const QuantileBins& b = bins[static_cast<std::size_t>(c)];
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
      out.matrix(r, c) = b.bin_of(table.values(r, c));
    }
  }
  out.bins = std::move(bins);
  return out;
}

}  // namespace fedgbf
