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

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "fedgbf/experiment.h"
#include "fedgbf/metrics.h"
#include "fedgbf/runtime_estimate.h"

namespace fedgbf {
namespace {

namespace fs = std::filesystem;

// Every positive/negative pair, ties counting one half.
double all_pairs_auc(const std::vector<std::uint8_t>& y, const std::vector<double>& s) {
  double wins = 0;
  double pairs = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

TEST(Auc, Examples) {
  EXPECT_EQ(auc(std::vector<std::uint8_t>{1, 1, 0, 0}, std::vector<double>{0.9, 0.8, 0.3, 0.1}), 1.0);
  EXPECT_DOUBLE_EQ(
      auc(std::vector<std::uint8_t>{1, 0, 1, 0}, std::vector<double>{0.9, 0.8, 0.4, 0.1}), 0.75);
  EXPECT_EQ(auc(std::vector<std::uint8_t>{1, 0, 1, 0}, std::vector<double>(4, 0.3)), 0.5);
  EXPECT_THROW(auc(std::vector<std::uint8_t>{1, 1}, std::vector<double>{0.1, 0.2}), Error);
  EXPECT_THROW(auc(std::vector<std::uint8_t>{1, 0}, std::vector<double>{0.1}), Error);
}

TEST(Auc, MatchesAllPairsOracle) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 199;
    std::vector<std::uint8_t> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng() % 2;
      // Coarse scores so ties are common.
      s[i] = static_cast<double>(rng() % (trial % 3 == 0 ? 5 : 1000)) / 7.0;
    }
    y[0] = 1;
    y[1] = 0;
    EXPECT_NEAR(auc(y, s), all_pairs_auc(y, s), 1e-12) << trial;
  }
}

TEST(AccF1, Examples) {
  const std::vector<std::uint8_t> y = {1, 0, 1, 0};
  AccF1 r = acc_f1(y, std::vector<double>{0.9, 0.1, 0.8, 0.2});
  EXPECT_EQ(r.acc, 1.0);
  EXPECT_EQ(r.f1, 1.0);
  // TP, FP, FN, TN once each.
  r = acc_f1(y, std::vector<double>{0.9, 0.7, 0.2, 0.1});
  EXPECT_DOUBLE_EQ(r.acc, 0.5);
  EXPECT_DOUBLE_EQ(r.f1, 0.5);
  r = acc_f1(y, std::vector<double>{0.1, 0.1, 0.1, 0.1});
  EXPECT_EQ(r.f1, 0.0);
  EXPECT_DOUBLE_EQ(r.acc, 0.5);
  // The threshold itself predicts positive.
  EXPECT_EQ(acc_f1(std::vector<std::uint8_t>{1}, std::vector<double>{0.5}).acc, 1.0);
}

TEST(EvaluateScores, FillsReport) {
  const MetricReport m = evaluate_scores(std::vector<std::uint8_t>{1, 0},
                                         std::vector<double>{0.7, 0.2}, "dynamic", "test", 20);
  EXPECT_EQ(m.model, "dynamic");
  EXPECT_EQ(m.split, "test");
  EXPECT_EQ(m.rounds, 20);
  EXPECT_EQ(m.auc, 1.0);
  EXPECT_EQ(m.acc, 1.0);
  EXPECT_EQ(m.f1, 1.0);
}

TEST(EstimateRuntime, TwoLayerExample) {
  const std::vector<LayerCost> layers = {{0.1, 1, 5}, {0.2, 1, 4}};
  const RuntimeEstimate e = estimate_runtime(100, 10, layers);
  EXPECT_NEAR(e.lower, 40, 1e-9);
  EXPECT_NEAR(e.upper, 140, 1e-9);
  EXPECT_NEAR(e.sequential, 210, 1e-9);
}

TEST(EstimateRuntime, SingleTreeLayersCollapseTheBounds) {
  const std::vector<LayerCost> layers(20, LayerCost{1, 1, 1});
  const RuntimeEstimate e = estimate_runtime(128, 96, layers);
  EXPECT_DOUBLE_EQ(e.lower, 96 + 20 * 128);
  EXPECT_DOUBLE_EQ(e.upper, e.lower);
  EXPECT_DOUBLE_EQ(e.sequential, e.lower);
  EXPECT_TRUE(e.ordered());
}

TEST(EstimateRuntime, LinearAndMonotone) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> rate(0.05, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<LayerCost> layers(5);
    for (auto& l : layers) l = {rate(rng), rate(rng), 1 + static_cast<int>(rng() % 5)};
    const RuntimeEstimate a = estimate_runtime(10, 3, layers);
    const RuntimeEstimate b = estimate_runtime(20, 3, layers);
    EXPECT_NEAR(b.lower - 3, 2 * (a.lower - 3), 1e-9);
    EXPECT_NEAR(b.upper - 3, 2 * (a.upper - 3), 1e-9);
    std::vector<LayerCost> bigger = layers;
    const std::size_t i = rng() % 5;
    bigger[i].alpha = std::min(1.0, bigger[i].alpha + 0.05);
    bigger[i].beta = std::min(1.0, bigger[i].beta + 0.05);
    bigger[i].trees += 1;
    const RuntimeEstimate c = estimate_runtime(10, 3, bigger);
    EXPECT_GE(c.lower, a.lower);
    EXPECT_GT(c.upper, a.upper);
    EXPECT_LE(a.lower, a.upper);
    EXPECT_GE(a.lower, 3);
  }
}

TEST(EstimateRuntime, RejectsBadInput) {
  const std::vector<LayerCost> ok = {{0.5, 1, 2}};
  EXPECT_THROW(estimate_runtime(0, 1, ok), Error);
  EXPECT_THROW(estimate_runtime(1, -1, ok), Error);
  EXPECT_THROW(estimate_runtime(1, 1, std::vector<LayerCost>{{0.0, 1, 1}}), Error);
  EXPECT_THROW(estimate_runtime(1, 1, std::vector<LayerCost>{{0.5, 1.5, 1}}), Error);
  EXPECT_THROW(estimate_runtime(1, 1, std::vector<LayerCost>{{0.5, 1, 0}}), Error);
}

TEST(ErrorRate, TableValues) {
  EXPECT_NEAR(100 * error_rate(12656, 13818), 8.41, 0.01);
  EXPECT_NEAR(100 * error_rate(6501, 6888), 5.62, 0.01);
  EXPECT_NEAR(100 * error_rate(31198, 32990), 5.43, 0.01);
  EXPECT_NEAR(100 * error_rate(2658, 2940), 9.59, 0.01);
  EXPECT_EQ(error_rate(5, 5), 0.0);
  EXPECT_THROW(error_rate(1, 0), Error);
}

TEST(ErrorRate, ScaleInvariant) {
  for (double c : {0.001, 0.5, 3.0, 1e6}) {
    EXPECT_NEAR(error_rate(c * 12656, c * 13818), error_rate(12656, 13818), 1e-15);
  }
}

TEST(ComplexityRatio, PrintedFormAndExactForm) {
  EXPECT_EQ(complexity_ratio(150000, 1.0), 1.0);
  const double printed = 0.1 + std::log2(0.1) / std::log2(150000.0);
  EXPECT_DOUBLE_EQ(complexity_ratio(150000, 0.1), printed);
  EXPECT_NEAR(printed, -0.0932, 1e-4);
  EXPECT_NEAR(exact_complexity_ratio(150000, 0.1),
              0.1 * 150000 * std::log2(0.1 * 150000) / (150000 * std::log2(150000.0)), 1e-15);
  EXPECT_NEAR(exact_complexity_ratio(150000, 0.1), 0.0807, 1e-4);
  EXPECT_NEAR(exact_complexity_ratio(1e300, 0.1), 0.1, 1e-2);
  EXPECT_NEAR(complexity_ratio(1e300, 0.1), 0.1, 1e-2);
}

TEST(FitUnitTimes, RecoversALine) {
  const std::vector<int> rounds = {20, 50, 100};
  const std::vector<double> exact = {96 + 20 * 128.0, 96 + 50 * 128.0, 96 + 100 * 128.0};
  const UnitTimes u = fit_unit_times(rounds, exact);
  EXPECT_NEAR(u.t_unit, 128, 1e-9);
  EXPECT_NEAR(u.t_0, 96, 1e-7);
  const UnitTimes fit = fit_unit_times(rounds, std::vector<double>{2658, 6501, 12906});
  EXPECT_NEAR(fit.t_unit, 128.1, 0.05);
  EXPECT_NEAR(fit.t_0, 96, 1);
}

DynamicConfig benchmark_schedule(int rounds, ScheduleRounding rounding) {
  DynamicConfig d;
  d.rounds = rounds;
  d.trees = {2, 5, 1.0, rounds, ScheduleDirection::kDecay, rounding};
  d.rho_id = {0.1, 0.3, 1.0, rounds, ScheduleDirection::kGrowth, ScheduleRounding::kNone};
  return d;
}

TEST(EstimateRuntime, BenchmarkScheduleBoundsWithCeiledTrees) {
  const UnitTimes u = fit_unit_times(std::vector<int>{20, 50, 100},
                                     std::vector<double>{2658, 6501, 12906});
  const double want[3][2] = {{674, 2433}, {1548, 6067}, {3004, 12096}};
  const int rounds[3] = {20, 50, 100};
  for (int i = 0; i < 3; ++i) {
    const auto plan = plan_dynamic_layers(benchmark_schedule(rounds[i], ScheduleRounding::kCeil));
    const RuntimeEstimate e = estimate_runtime(u.t_unit, u.t_0, layer_costs(plan));
    EXPECT_NEAR(e.lower, want[i][0], 1.0) << rounds[i];
    EXPECT_NEAR(e.upper, want[i][1], 1.0) << rounds[i];
  }
}

// ---- config and experiment driver ------------------------------------------

TEST(Config, ParsesKeysCommentsAndEnvironment) {
  ::setenv("FEDGBF_TEST_DATA", "/tmp/some.csv", 1);
  std::istringstream in(
      "# comment\n"
      "dataset.path = ${FEDGBF_TEST_DATA}\n"
      "dataset.label = y   # trailing\n"
      "dataset.id = #0\n"
      "partition = 13,10\n"
      "rounds = 20, 100\n"
      "trees.min = 2\ntrees.max = 5\ntrees.direction = decay\ntrees.rounding = ceil\n"
      "rho_id.min = 0.1\nrho_id.max = 0.3\nrho_id.direction = growth\n"
      "learning_rate = 0.1\nmax_depth = 3\ncrypto = paillier\nkey_bits = 2048\n"
      "mode = local\nt_unit = 128.1\nt_0 = measure\n");
  const ExperimentConfig c = parse_config(in);
  EXPECT_EQ(c.dataset_path, "/tmp/some.csv");
  EXPECT_EQ(c.schema.id_column, "#0");
  EXPECT_EQ(c.schema.label_column, "y");
  EXPECT_EQ(c.partition, (std::vector<int>{13, 10}));
  EXPECT_EQ(c.rounds, (std::vector<int>{20, 100}));
  EXPECT_EQ(c.trees.v_max, 5);
  EXPECT_EQ(c.trees.rounding, ScheduleRounding::kCeil);
  EXPECT_EQ(c.rho_id.direction, ScheduleDirection::kGrowth);
  EXPECT_EQ(c.backend, CryptoBackend::kPaillier);
  EXPECT_EQ(c.key_bits, 2048);
  EXPECT_EQ(c.mode, SessionMode::kLocal);
  EXPECT_EQ(c.t_unit, 128.1);
  EXPECT_FALSE(c.t_0.has_value());
  EXPECT_EQ(c.to_map().at("trees.rounding"), "ceil");
}

TEST(Config, DefaultsFollowTheBenchmarkSetup) {
  const ExperimentConfig c;
  EXPECT_EQ(c.trees.v_min, 2);
  EXPECT_EQ(c.trees.v_max, 5);
  EXPECT_EQ(c.trees.direction, ScheduleDirection::kDecay);
  EXPECT_EQ(c.trees.rounding, ScheduleRounding::kNearest);
  EXPECT_DOUBLE_EQ(c.rho_id.v_min, 0.1);
  EXPECT_DOUBLE_EQ(c.rho_id.v_max, 0.3);
  EXPECT_EQ(c.boosting.tree.max_depth, 3);
  EXPECT_DOUBLE_EQ(c.boosting.learning_rate, 0.1);
  EXPECT_DOUBLE_EQ(c.test_fraction, 0.3);
}

TEST(Config, Errors) {
  std::istringstream unknown("colour = blue\n");
  EXPECT_THROW(parse_config(unknown), Error);
  std::istringstream bad_number("learning_rate = fast\n");
  EXPECT_THROW(parse_config(bad_number), Error);
  std::istringstream no_eq("learning_rate 0.1\n");
  EXPECT_THROW(parse_config(no_eq), Error);
  ExperimentConfig c;
  EXPECT_THROW(apply_overrides(c, {"rounds"}), Error);
  apply_overrides(c, {"rounds=7", "bins=8"});
  EXPECT_EQ(c.rounds, std::vector<int>{7});
  EXPECT_EQ(c.boosting.bins, 8);
  EXPECT_THROW(load_config("/nonexistent/run.conf"), DataError);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fedgbf_bench_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig synthetic_config() {
  ExperimentConfig c;
  c.dataset_path = "synthetic";
  c.synthetic.rows = 2000;
  c.synthetic.features = 10;
  c.partition = {5, 5};
  c.rounds = {5};
  return c;
}

TEST(RunExperiment, SyntheticSmokeRunIsFast) {
  const fs::path out = scratch("smoke");
  const auto start = std::chrono::steady_clock::now();
  const ExperimentResult r = run_experiment(synthetic_config(), out);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(seconds, 10.0);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_GT(r.transcript_records, 0u);
  EXPECT_TRUE(r.measured_units);
  ASSERT_EQ(r.estimates.size(), 1u);
  EXPECT_LE(r.estimates[0].estimate.lower, r.estimates[0].estimate.upper);
  int dynamic_rows = 0, baseline_rows = 0;
  for (const MetricReport& m : r.metrics) {
    EXPECT_GE(m.auc, 0.0);
    EXPECT_LE(m.auc, 1.0);
    EXPECT_GE(m.acc, 0.0);
    EXPECT_LE(m.f1, 1.0);
    dynamic_rows += m.model == "dynamic";
    baseline_rows += m.model == "baseline";
  }
  EXPECT_EQ(dynamic_rows, 2);
  EXPECT_EQ(baseline_rows, 2);
  for (const char* f : {"metrics.csv", "auc_vs_round.csv", "auc_vs_time.csv", "estimate.txt",
                        "transcript.log", "config.txt", "models/dynamic-5/model.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  std::ifstream log(out / "transcript.log");
  EXPECT_TRUE(audit_transcript(Transcript::read(log)).empty());

  std::map<PartyId, LookupTable> lookups;
  const GbfModel m = load_model(out / "models" / "dynamic-5", &lookups);
  EXPECT_EQ(m.layers.size(), 5u);
  EXPECT_FALSE(lookups.empty());
  fs::remove_all(out);
}

TEST(RunExperiment, MissingDatasetFailsBeforeTraining) {
  const fs::path out = scratch("missing");
  ExperimentConfig c = synthetic_config();
  c.dataset_path = "/nonexistent/credit.csv";
  EXPECT_THROW(run_experiment(c, out), DataError);
  EXPECT_FALSE(fs::exists(out / "models"));
}

TEST(RunExperiment, CsvDatasetWithPartition) {
  const fs::path dir = scratch("csv");
  fs::create_directories(dir);
  {
    SyntheticSpec spec;
    spec.rows = 400;
    spec.features = 4;
    const RawTable t = synthetic_table(spec);
    std::ofstream csv(dir / "data.csv");
    csv << "id,a,b,c,d,label\n";
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      csv << t.ids[r];
      for (Eigen::Index c = 0; c < 4; ++c) {
        csv << ',';
        if (!t.is_missing(r, c)) csv << t.values(r, c);
      }
      csv << ',' << int(t.labels[r]) << '\n';
    }
  }
  ExperimentConfig c;
  c.dataset_path = (dir / "data.csv").string();
  c.schema = {"label", "id", {}};
  c.partition = {2, 2};
  c.rounds = {2};
  c.baseline = false;
  c.t_unit = 1.0;
  c.t_0 = 0.5;
  const ExperimentResult r = run_experiment(c, dir / "run");
  EXPECT_FALSE(r.measured_units);
  EXPECT_EQ(r.metrics.size(), 2u);
  EXPECT_EQ(r.estimates[0].estimate.t_unit, 1.0);
  ExperimentConfig bad = c;
  bad.partition = {3, 3};
  EXPECT_THROW(run_experiment(bad, dir / "bad"), Error);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace fedgbf
