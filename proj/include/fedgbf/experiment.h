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

// Experiment driver: config files, data preparation, training sessions and
// the run directory layout.
//
// Config files are "key = value" lines; '#' starts a comment. See
// README.md for the full key list.

#pragma once

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fedgbf/crypto.h"
#include "fedgbf/dataset.h"
#include "fedgbf/ensemble.h"
#include "fedgbf/metrics.h"
#include "fedgbf/protocol.h"
#include "fedgbf/runtime_estimate.h"
#include "fedgbf/scheduler.h"

namespace fedgbf {

enum class SessionMode { kFederated, kLocal };

struct ExperimentConfig {
  std::string dataset_name = "dataset";
  // CSV path, or "synthetic" for synthetic_table().
  std::string dataset_path;
  ColumnSchema schema;
  SyntheticSpec synthetic;
  // Feature columns per party in column order; the first party is active.
  std::vector<int> partition;
  double test_fraction = 0.3;
  std::uint64_t split_seed = 42;

  std::vector<int> rounds = {20};
  ScheduleSpec trees;
  ScheduleSpec rho_id;
  double rho_feat = 1.0;
  BoostingParams boosting;
  bool baseline = true;

  SessionMode mode = SessionMode::kFederated;
  CryptoBackend backend = CryptoBackend::kMock;
  int key_bits = 1024;
  std::uint64_t key_seed = 1;
  std::chrono::microseconds latency{0};

  std::optional<double> t_unit;
  std::optional<double> t_0;

  ExperimentConfig();
  // Effective settings as key/value pairs, in the config file syntax.
  std::map<std::string, std::string> to_map() const;
};

ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);
// Applies "key=value" overrides on top of `config`.
void apply_overrides(ExperimentConfig& config, const std::vector<std::string>& overrides);

struct PreparedData {
  std::vector<PartyTable> parties;
  RowList train_rows;
  RowList test_rows;
  double seconds = 0.0;  // loading, partitioning and alignment

  const std::vector<std::uint8_t>& labels() const { return parties.front().labels; }
};

// Throws DataError before reading anything if the dataset file is missing.
PreparedData prepare_data(const ExperimentConfig& config);

// One training context: a federation of parties behind a
// FederatedCoordinator, or a LocalCoordinator over the unioned columns.
class Session {
 public:
  Session(const ExperimentConfig& config, const std::vector<PartyTable>& parties);
  ~Session();

  Coordinator& coordinator() { return *coordinator_; }
  // Null in local mode.
  Transcript* transcript();

 private:
  std::unique_ptr<Federation> federation_;
  std::unique_ptr<Coordinator> coordinator_;
};

// model.json plus one lookup_<party>.json per party that owns splits.
void save_model(const std::filesystem::path& dir, const GbfModel& model,
                const std::map<PartyId, LookupTable>& lookups);
GbfModel load_model(const std::filesystem::path& dir,
                    std::map<PartyId, LookupTable>* lookups = nullptr);

std::vector<LayerCost> layer_costs(std::span<const LayerConfig> layers);

struct RoundEstimate {
  int rounds = 0;
  RuntimeEstimate estimate;
};

struct ExperimentResult {
  std::vector<MetricReport> metrics;
  std::vector<RoundEstimate> estimates;
  bool measured_units = false;
  std::size_t transcript_records = 0;
  std::size_t violations = 0;
};

// Trains one scheduled model per entry of config.rounds and, if enabled,
// the one-tree-per-layer baseline for the largest round count, then writes
// metrics.csv, auc_vs_round.csv, auc_vs_time.csv, estimate.txt,
// transcript.log, config.txt and models/ under out_dir.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir,
                                std::ostream* progress = nullptr);

}  // namespace fedgbf
