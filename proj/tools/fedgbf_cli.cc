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

// fedgbf: train, evaluate, schedule-preview, estimate-runtime, audit.

#include <fstream>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"

#include "fedgbf/experiment.h"

namespace {

using namespace fedgbf;

int cmd_train(const std::string& config_path, const std::string& out,
              const std::vector<std::string>& overrides) {
  ExperimentConfig config = load_config(config_path);
  apply_overrides(config, overrides);
  const ExperimentResult r = run_experiment(config, out, &std::cerr);
  std::cout << "model,rounds,split,auc,acc,f1\n";
  for (const MetricReport& m : r.metrics) {
    std::cout << m.model << ',' << m.rounds << ',' << m.split << ',' << std::setprecision(4)
              << std::fixed << m.auc << ',' << m.acc << ',' << m.f1 << '\n';
  }
  return r.violations == 0 ? 0 : 1;
}

int cmd_evaluate(const std::string& config_path, const std::string& model_dir,
                 const std::string& split, const std::vector<std::string>& overrides) {
  ExperimentConfig config = load_config(config_path);
  apply_overrides(config, overrides);
  std::map<PartyId, LookupTable> lookups;
  const GbfModel model = load_model(model_dir, &lookups);
  const PreparedData data = prepare_data(config);
  Session session(config, data.parties);
  session.coordinator().import_lookup_tables(lookups);

  std::vector<std::pair<std::string, const RowList*>> splits;
  if (split == "train" || split == "all") splits.emplace_back("train", &data.train_rows);
  if (split == "test" || split == "all") splits.emplace_back("test", &data.test_rows);
  if (splits.empty()) throw Error("split must be train, test or all");

  std::cout << "split,rounds,auc,acc,f1\n";
  for (const auto& [name, rows] : splits) {
    const auto scores = predict(model, session.coordinator(), *rows);
    std::vector<std::uint8_t> labels;
    for (RowIndex r : *rows) labels.push_back(data.labels()[r]);
    const MetricReport m = evaluate_scores(labels, scores, "model", name,
                                           static_cast<int>(model.layers.size()));
    std::cout << name << ',' << m.rounds << ',' << std::setprecision(4) << std::fixed << m.auc
              << ',' << m.acc << ',' << m.f1 << '\n';
  }
  return 0;
}

int cmd_audit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  const auto records = Transcript::read(in);
  const auto violations = audit_transcript(records);
  for (const Violation& v : violations) std::cout << "seq " << v.seq << ": " << v.reason << '\n';
  std::cout << records.size() << " records, " << violations.size() << " violations\n";
  return violations.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated gradient boosting forest"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "run", model_dir, split = "test", transcript_path;
  std::vector<std::string> overrides;

  auto* train = app.add_subcommand("train", "Train scheduled and baseline models");
  train->add_option("-c,--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  train->add_option("-o,--out", out_dir, "Run directory")->capture_default_str();
  train->add_option("--set", overrides, "Override a config key (key=value)");

  auto* evaluate = app.add_subcommand("evaluate", "Score a saved model");
  evaluate->add_option("-c,--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  evaluate->add_option("-m,--model", model_dir, "Model directory")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--split", split, "train, test or all")->capture_default_str();
  evaluate->add_option("--set", overrides, "Override a config key (key=value)");

  ScheduleSpec sched;
  std::string direction = "decay";
  std::string rounding = "none";
  sched.v_min = 15;
  sched.v_max = 50;
  sched.total_rounds = 11;
  auto* preview = app.add_subcommand("schedule-preview", "Print a schedule table");
  preview->add_option("--min", sched.v_min)->capture_default_str();
  preview->add_option("--max", sched.v_max)->capture_default_str();
  preview->add_option("--k", sched.k)->capture_default_str();
  preview->add_option("--rounds", sched.total_rounds)->capture_default_str();
  preview->add_option("--direction", direction)->check(CLI::IsMember({"growth", "decay"}))->capture_default_str();
  preview->add_option("--rounding", rounding, "none, nearest or ceil")
      ->check(CLI::IsMember({"none", "nearest", "ceil"}))
      ->capture_default_str();

  double t_unit = 0.0, t_0 = 0.0;
  int rounds = 20;
  auto* estimate = app.add_subcommand("estimate-runtime", "Runtime bounds for a schedule");
  estimate->add_option("--t-unit", t_unit, "Seconds for one full-data tree")->required();
  estimate->add_option("--t-0", t_0, "Seconds of pre-training overhead")->required();
  estimate->add_option("--rounds", rounds)->capture_default_str();
  estimate->add_option("-c,--config", config_path, "Take the schedules from a config file");
  estimate->add_option("-o,--out", out_dir, "Write estimate.txt into this directory");

  auto* audit = app.add_subcommand("audit", "Check a transcript for forbidden disclosures");
  audit->add_option("transcript", transcript_path, "transcript.log")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(config_path, out_dir, overrides);
    if (*evaluate) return cmd_evaluate(config_path, model_dir, split, overrides);
    if (*preview) {
      sched.direction = parse_direction(direction);
      sched.rounding = parse_rounding(rounding);
      std::cout << "round,value\n";
      const auto table = schedule_table(sched);
      for (std::size_t i = 0; i < table.size(); ++i) {
        std::cout << i + 1 << ',' << table[i] << '\n';
      }
      return 0;
    }
    if (*estimate) {
      ExperimentConfig config;
      if (!config_path.empty()) config = load_config(config_path);
      DynamicConfig dyn;
      dyn.rounds = rounds;
      dyn.trees = config.trees;
      dyn.rho_id = config.rho_id;
      dyn.rho_feat = ScheduleSpec::constant(config.rho_feat, rounds);
      const auto plan = plan_dynamic_layers(dyn);
      const auto costs = layer_costs(plan);
      const RuntimeEstimate e = estimate_runtime(t_unit, t_0, costs);
      std::ostringstream os;
      os << "rounds = " << rounds << '\n'
         << "t_unit_s = " << t_unit << '\n'
         << "t_0_s = " << t_0 << '\n'
         << "lower_s = " << e.lower << '\n'
         << "upper_s = " << e.upper << '\n'
         << "sequential_s = " << e.sequential << '\n'
         << "ordered = " << (e.ordered() ? "true" : "false") << '\n';
      std::cout << os.str();
      if (estimate->count("--out")) {
        std::filesystem::create_directories(out_dir);
        std::ofstream(std::filesystem::path(out_dir) / "estimate.txt") << os.str();
      }
      return 0;
    }
    if (*audit) return cmd_audit(transcript_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
