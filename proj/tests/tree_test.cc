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

#include "fedgbf/tree.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fedgbf/local_coordinator.h"
#include "test_util.h"

namespace fedgbf {
namespace {

const FixedPointCodec kCodec;

TEST(GradPairs, LogisticDerivatives) {
  const std::vector<std::uint8_t> y = {1, 0, 1};
  const std::vector<double> m = {0.0, 0.0, 10.0};
  const auto gp = compute_grad_pairs(y, m);
  EXPECT_DOUBLE_EQ(gp[0].g, -0.5);
  EXPECT_DOUBLE_EQ(gp[0].h, 0.25);
  EXPECT_DOUBLE_EQ(gp[1].g, 0.5);
  EXPECT_DOUBLE_EQ(gp[1].h, 0.25);
  const double p = 1.0 / (1.0 + std::exp(-10.0));
  EXPECT_NEAR(gp[2].g, p - 1.0, 1e-18);
  EXPECT_NEAR(gp[2].h, p * (1.0 - p), 1e-18);
  EXPECT_NEAR(gp[2].g, -4.54e-5, 1e-7);
  EXPECT_NEAR(gp[2].h, 4.54e-5, 1e-7);
  EXPECT_THROW(compute_grad_pairs(y, std::vector<double>{0.0}), Error);
}

TEST(SplitScore, ThreeRowExample) {
  // 1/2 * (1/2 + 1/3 - 4/4)
  EXPECT_NEAR(split_score(1, 1, 1, 2, 1, 0), -1.0 / 12.0, 1e-15);
  // 1/2 * (0/3 + 4/2 - 4/4)
  EXPECT_NEAR(split_score(0, 2, 2, 1, 1, 0), 0.5, 1e-15);
}

TEST(SplitScore, GammaShiftsEveryCandidate) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3), h(0, 3);
  for (int i = 0; i < 200; ++i) {
    const double GL = u(rng), GR = u(rng), HL = h(rng), HR = h(rng), gamma = h(rng);
    EXPECT_NEAR(split_score(GL, HL, GR, HR, 1, gamma), split_score(GL, HL, GR, HR, 1, 0) - gamma,
                1e-12);
  }
}

TEST(LeafWeight, ClosedForm) {
  EXPECT_EQ(leaf_weight(0, 3, 1), 0);
  EXPECT_DOUBLE_EQ(leaf_weight(1, 1, 1), -0.5);
  EXPECT_DOUBLE_EQ(leaf_weight(-2, 0, 1), 2.0);
  EXPECT_THROW(leaf_weight(1, 0, 0), Error);
  EXPECT_THROW(leaf_weight(1, -2, 1), Error);
}

// A party table holding the given columns, with codes 0..d-1.
PartyTable table_of(const std::vector<std::vector<double>>& columns) {
  PartyTable t;
  const auto n = static_cast<Eigen::Index>(columns.front().size());
  t.values.resize(n, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    t.partition.feature_codes.push_back(static_cast<FeatureCode>(c));
    t.feature_names.push_back("f" + std::to_string(c));
    for (Eigen::Index r = 0; r < n; ++r) t.values(r, static_cast<Eigen::Index>(c)) = columns[c][r];
  }
  t.partition.column_count = columns.size();
  for (Eigen::Index r = 0; r < n; ++r) t.ids.push_back(r);
  return t;
}

FixedGrads fixed_grads(const std::vector<double>& g, const std::vector<double>& h) {
  std::vector<GradPair> gp;
  for (std::size_t i = 0; i < g.size(); ++i) gp.push_back({g[i], h[i]});
  return encode_grads(gp, kCodec);
}

TEST(BuildHistogram, SingleRowAndSingleBin) {
  const PartyTable t = table_of({{1, 2, 3, 4, 5, 6, 7, 8}});
  const BinnedDataset b = apply_bins(t, compute_bins(t, 8, testing::all_rows(8)));
  const FixedGrads grads = fixed_grads({0, 0, 0, 0.5, 0, 0, 0, 0}, std::vector<double>(8, 0.25));
  const RowIndex one[] = {3};
  const auto hist = build_histogram(b, 0, {}, one, grads);
  for (std::size_t bin = 0; bin < hist.bins.size(); ++bin) {
    if (bin == 3) {
      EXPECT_EQ(kCodec.decode(hist.bins[bin].g), 0.5);
      EXPECT_EQ(hist.bins[bin].count, 1);
    } else {
      EXPECT_TRUE(hist.bins[bin] == BinStats{});
    }
  }

  const PartyTable flat = table_of({std::vector<double>(8, 1.0)});
  const BinnedDataset fb = apply_bins(flat, compute_bins(flat, 4, testing::all_rows(8)));
  const auto all = build_histogram(fb, 0, {}, testing::all_rows(8), grads);
  EXPECT_TRUE(all.bins[0] == all.total());
  EXPECT_EQ(all.total().count, 8);

  const RowIndex bad[] = {8};
  EXPECT_THROW(build_histogram(b, 0, {}, bad, grads), Error);
}

TEST(BuildHistogram, MatchesPlainSummationOracle) {
  const auto parties = testing::synthetic_parties(1000, {4}, 21);
  const PartyTable& t = parties[0];
  const BinnedDataset b = apply_bins(t, compute_bins(t, 16, testing::all_rows(1000)));
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> g(1000), h(1000);
  for (std::size_t i = 0; i < 1000; ++i) {
    g[i] = u(rng);
    h[i] = std::abs(u(rng)) / 4;
  }
  const FixedGrads grads = fixed_grads(g, h);
  RowList rows;
  for (RowIndex r = 0; r < 1000; ++r) if (rng() % 2) rows.push_back(r);
  for (FeatureCode code : t.partition.feature_codes) {
    const auto hist = build_histogram(b, code, {}, rows, grads);
    const QuantileBins& q = b.bins_of(code);
    std::vector<double> sum_g(q.bin_count(), 0.0);
    std::vector<std::int64_t> count(q.bin_count(), 0);
    for (RowIndex r : rows) {
      const std::uint16_t bin = q.bin_of(t.values(r, t.column_of(code)));
      sum_g[bin] += g[r];
      ++count[bin];
    }
    BinStats conserved;
    for (std::size_t bin = 0; bin < sum_g.size(); ++bin) {
      EXPECT_NEAR(kCodec.decode(hist.bins[bin].g), sum_g[bin], 1e-9);
      EXPECT_EQ(hist.bins[bin].count, count[bin]);
      conserved += hist.bins[bin];
    }
    EXPECT_EQ(conserved.count, static_cast<std::int64_t>(rows.size()));
  }
}

TEST(BestSplit, ZeroGradientGivesNoSplit) {
  const PartyTable t = table_of({{1, 2, 3, 4, 5, 6}});
  const BinnedDataset b = apply_bins(t, compute_bins(t, 6, testing::all_rows(6)));
  const FixedGrads grads = fixed_grads(std::vector<double>(6, 0), std::vector<double>(6, 0.25));
  const std::vector<FeatureHistogram> hists = {build_histogram(b, 0, {}, testing::all_rows(6), grads)};
  SplitParams p;
  p.min_rows_leaf = 1;
  EXPECT_FALSE(best_split(hists, p, kCodec).has_value());
  p.gamma = 0.5;
  EXPECT_FALSE(best_split(hists, p, kCodec).has_value());
}

TEST(BestSplit, ThreeRowExample) {
  const PartyTable t = table_of({{1, 2, 3}});
  const BinnedDataset b = apply_bins(t, compute_bins(t, 3, testing::all_rows(3)));
  const FixedGrads grads = fixed_grads({1, -1, 2}, {1, 1, 1});
  const std::vector<FeatureHistogram> hists = {build_histogram(b, 0, {}, testing::all_rows(3), grads)};
  SplitParams p;
  p.min_rows_leaf = 1;
  p.min_child_hessian = 0;
  const auto s = best_split(hists, p, kCodec);
  ASSERT_TRUE(s.has_value());
  // {rows 1,2} | {row 3} scores 0.5; {row 1} | {rows 2,3} scores -1/12.
  EXPECT_EQ(s->bin, 1);
  EXPECT_NEAR(s->gain, 0.5, 1e-12);
}

struct Oracle {
  double score = 0.0;
  FeatureCode feature = -1;
  int bin = -1;
  bool missing_left = true;
};

// Enumerates every (feature, bin, missing side) straight from the rows.
Oracle exhaustive_split(const BinnedDataset& b, std::span<const RowIndex> rows,
                        const FixedGrads& grads, const SplitParams& p) {
  Oracle best;
  for (std::size_t c = 0; c < b.bins.size(); ++c) {
    const QuantileBins& q = b.bins[c];
    for (int t = 0; t < q.missing_bin(); ++t) {
      for (bool missing_left : {true, false}) {
        Fixed gl = 0, hl = 0, gr = 0, hr = 0;
        std::int64_t nl = 0, nr = 0;
        for (RowIndex r : rows) {
          const int bin = b.matrix(r, static_cast<Eigen::Index>(c));
          const bool left = bin == q.missing_bin() ? missing_left : bin <= t;
          (left ? gl : gr) += grads.g[r];
          (left ? hl : hr) += grads.h[r];
          ++(left ? nl : nr);
        }
        if (nl < p.min_rows_leaf || nr < p.min_rows_leaf) continue;
        const double HL = kCodec.decode(hl), HR = kCodec.decode(hr);
        if (HL < p.min_child_hessian || HR < p.min_child_hessian) continue;
        const double s =
            split_score(kCodec.decode(gl), HL, kCodec.decode(gr), HR, p.lambda, p.gamma);
        if (s > best.score + 1e-12) {
          best = {s, q.feature_code, t, missing_left};
        }
      }
    }
  }
  return best;
}

TEST(BestSplit, MatchesExhaustiveEnumeration) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> u01(0, 1);
  int splits_found = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<double>> cols(3, std::vector<double>(20));
    for (auto& col : cols) {
      for (double& v : col) v = u01(rng) < 0.1 ? std::nan("") : std::round(normal(rng) * 3);
    }
    const PartyTable t = table_of(cols);
    const BinnedDataset b = apply_bins(t, compute_bins(t, 6, testing::all_rows(20)));
    std::vector<double> g(20), h(20);
    for (int i = 0; i < 20; ++i) {
      const double p = u01(rng);
      g[i] = p - (u01(rng) < 0.5 ? 1 : 0);
      h[i] = p * (1 - p);
    }
    const FixedGrads grads = fixed_grads(g, h);
    std::vector<FeatureHistogram> hists;
    for (FeatureCode code : {2, 0, 1}) {
      hists.push_back(build_histogram(b, code, {}, testing::all_rows(20), grads));
    }
    SplitParams params;
    params.min_rows_leaf = 2;
    params.gamma = trial % 2 ? 0.0 : 0.01;
    const Oracle want = exhaustive_split(b, testing::all_rows(20), grads, params);
    const auto got = best_split(hists, params, kCodec);
    if (want.feature < 0) {
      EXPECT_FALSE(got.has_value()) << trial;
      continue;
    }
    ++splits_found;
    ASSERT_TRUE(got.has_value()) << trial;
    EXPECT_NEAR(got->gain, want.score, 1e-12) << trial;
    EXPECT_EQ(got->feature_code, want.feature) << trial;
    EXPECT_EQ(got->bin, want.bin) << trial;
  }
  EXPECT_GT(splits_found, 50);
}

TEST(BestSplit, TieGoesToLowerFeatureCode) {
  const PartyTable t = table_of({{1, 2, 3, 4}, {1, 2, 3, 4}});
  const BinnedDataset b = apply_bins(t, compute_bins(t, 4, testing::all_rows(4)));
  const FixedGrads grads = fixed_grads({1, 1, -1, -1}, {0.25, 0.25, 0.25, 0.25});
  const std::vector<FeatureHistogram> hists = {
      build_histogram(b, 1, {}, testing::all_rows(4), grads),
      build_histogram(b, 0, {}, testing::all_rows(4), grads)};
  SplitParams p;
  p.min_rows_leaf = 1;
  const auto s = best_split(hists, p, kCodec);
  ASSERT_TRUE(s.has_value());
  EXPECT_EQ(s->feature_code, 0);
  EXPECT_EQ(s->bin, 1);
}

struct Grown {
  std::vector<PartyTable> parties;
  std::unique_ptr<LocalCoordinator> ctx;
  FixedGrads grads;
};

Grown local_setup(std::vector<PartyTable> parties, std::vector<double> margins = {}) {
  Grown out{std::move(parties), nullptr, {}};
  out.ctx = std::make_unique<LocalCoordinator>(out.parties);
  const RowList rows = testing::all_rows(out.ctx->row_count());
  out.ctx->initialize_bins(rows, 16);
  if (margins.empty()) margins.assign(rows.size(), 0.0);
  out.grads = encode_grads(compute_grad_pairs(out.ctx->labels(), margins), kCodec);
  out.ctx->open_layer(1, rows, false, out.grads);
  return out;
}

TreeTask full_task(Coordinator& ctx) {
  TreeTask task;
  task.key = {1, 0};
  task.rows = testing::all_rows(ctx.row_count());
  for (const FeatureRef& f : ctx.features()) task.features.push_back(f.code);
  return task;
}

TEST(GrowTree, PureLabelsGiveOneLeaf) {
  auto parties = testing::synthetic_parties(200, {3, 2});
  std::fill(parties[0].labels.begin(), parties[0].labels.end(), 1);
  Grown s = local_setup(std::move(parties));
  const TreeModel tree = grow_tree(*s.ctx, full_task(*s.ctx), s.grads, {});
  ASSERT_EQ(tree.nodes.size(), 1u);
  EXPECT_DOUBLE_EQ(tree.nodes[0].weight, leaf_weight(-100, 50, 1));
}

TEST(GrowTree, DepthOneOnSeparableData) {
  std::vector<double> x(40), noise(40);
  for (int i = 0; i < 40; ++i) {
    x[i] = i;
    noise[i] = (i * 7) % 5;
  }
  PartyTable t = table_of({noise, x});
  for (int i = 0; i < 40; ++i) t.labels.push_back(i >= 25 ? 1 : 0);
  Grown s = local_setup({t});
  TreeParams params;
  params.max_depth = 1;
  const TreeModel tree = grow_tree(*s.ctx, full_task(*s.ctx), s.grads, params);
  ASSERT_EQ(tree.nodes.size(), 3u);
  EXPECT_EQ(tree.nodes[0].split.feature_code, 1);
  EXPECT_EQ(tree.leaf_count(), 2u);
  const LookupEntry e = s.ctx->export_lookup_tables().at(PartyId{}).at(tree.nodes[0].split.lookup_id);
  EXPECT_GE(e.threshold, 24.0);
  EXPECT_LT(e.threshold, 25.0);
  // Left leaf pulls margins down, right leaf up.
  EXPECT_LT(tree.nodes[1].weight, 0);
  EXPECT_GT(tree.nodes[2].weight, 0);
  EXPECT_DOUBLE_EQ(predict_row(tree, *s.ctx, 3), tree.nodes[1].weight);
  EXPECT_DOUBLE_EQ(predict_row(tree, *s.ctx, 30), tree.nodes[2].weight);
}

TEST(GrowTree, DepthThreeRespectsLimits) {
  Grown s = local_setup(testing::synthetic_parties(1500, {5, 5}));
  TreeParams params;
  params.max_depth = 3;
  const TreeModel tree = grow_tree(*s.ctx, full_task(*s.ctx), s.grads, params);
  EXPECT_GT(tree.nodes.size(), 3u);
  EXPECT_LE(tree.leaf_count(), 8u);
  for (const TreeNode& n : tree.nodes) {
    EXPECT_LE(n.depth, 3u);
    if (!n.is_leaf) {
      EXPECT_GT(n.split.gain, 0);
      EXPECT_GE(n.left, 0);
      EXPECT_GE(n.right, 0);
    } else {
      EXPECT_TRUE(std::isfinite(n.weight));
    }
  }
  EXPECT_THROW(grow_tree(*s.ctx, TreeTask{}, s.grads, params), Error);
}

// Walks the tree with raw values and the owners' lookup tables.
double centralized_predict(const TreeModel& tree, const std::vector<PartyTable>& parties,
                           const std::map<PartyId, LookupTable>& lookups, RowIndex row) {
  std::size_t i = 0;
  while (!tree.nodes[i].is_leaf) {
    const SplitRecord& s = tree.nodes[i].split;
    const LookupEntry e = lookups.at(s.owner).at(s.lookup_id);
    const PartyTable& owner = parties[s.owner.index];
    const double v = owner.values(row, owner.column_of(e.feature_code));
    const bool left = std::isnan(v) ? e.missing_left : v <= e.threshold;
    i = static_cast<std::size_t>(left ? tree.nodes[i].left : tree.nodes[i].right);
  }
  return tree.nodes[i].weight;
}

TEST(PredictTree, MatchesCentralizedTraversal) {
  Grown s = local_setup(testing::synthetic_parties(1200, {4, 4}, 3));
  TreeParams params;
  params.max_depth = 4;
  const TreeModel tree = grow_tree(*s.ctx, full_task(*s.ctx), s.grads, params);
  const auto lookups = s.ctx->export_lookup_tables();
  std::mt19937_64 rng(1);
  RowList rows;
  for (int i = 0; i < 100; ++i) rows.push_back(static_cast<RowIndex>(rng() % 1200));
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  const auto batch = predict_tree(tree, *s.ctx, rows);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(batch[i], centralized_predict(tree, s.parties, lookups, rows[i]));
  }
}

TEST(PredictTree, SingleLeaf) {
  TreeModel tree;
  tree.nodes.push_back({});
  tree.nodes[0].weight = 0.7;
  Grown s = local_setup(testing::synthetic_parties(50, {2, 2}));
  EXPECT_EQ(predict_row(tree, *s.ctx, 9), 0.7);
}

TEST(PredictTree, UnknownLookupIdThrows) {
  TreeModel tree;
  tree.nodes.resize(3);
  tree.nodes[0].is_leaf = false;
  tree.nodes[0].split = {PartyId{1, Role::kPassive}, 5, 12345, 1.0, true};
  tree.nodes[0].left = 1;
  tree.nodes[0].right = 2;
  Grown s = local_setup(testing::synthetic_parties(50, {2, 4}));
  EXPECT_THROW(predict_row(tree, *s.ctx, 0), ProtocolError);
}

TEST(TreeModel, JsonRoundTripHidesThresholds) {
  Grown s = local_setup(testing::synthetic_parties(800, {3, 3}));
  const TreeModel tree = grow_tree(*s.ctx, full_task(*s.ctx), s.grads, {});
  const nlohmann::json j = tree.to_json();
  EXPECT_EQ(TreeModel::from_json(j).to_json(), j);
  const std::string text = j.dump();
  EXPECT_EQ(text.find("threshold"), std::string::npos);
  EXPECT_EQ(text.find("\"bin\""), std::string::npos);
  bool passive_split = false;
  for (const TreeNode& n : tree.nodes) passive_split |= !n.is_leaf && !n.split.owner.is_active();
  EXPECT_TRUE(passive_split);
}

TEST(LookupTable, JsonRoundTripKeepsInfinity) {
  LookupTable t;
  t.add(7, {3, 2, 1.5, false});
  t.add(9, {4, 5, std::numeric_limits<double>::infinity(), true});
  const LookupTable back = LookupTable::from_json(t.to_json());
  EXPECT_EQ(back.size(), 2u);
  EXPECT_TRUE(std::isinf(back.at(9).threshold));
  EXPECT_EQ(back.at(7).threshold, 1.5);
  EXPECT_FALSE(back.at(7).missing_left);
  EXPECT_THROW(back.at(8), ProtocolError);
}

TEST(LookupId, PacksLayerTreeNode) {
  EXPECT_EQ(make_lookup_id({2, 3}, 5), (LookupId{2} << 40) | (LookupId{3} << 24) | 5);
  EXPECT_NE(make_lookup_id({1, 0}, 1), make_lookup_id({0, 1}, 1));
}

TEST(PartitionRows, ThresholdAndMissing) {
  const PartyTable t = table_of({{1, std::nan(""), 3, 4}});
  const RowList rows = testing::all_rows(4);
  Partition p = partition_rows(t, {0, 0, 3.0, true}, rows);
  EXPECT_EQ(p.left, (RowList{0, 1, 2}));
  EXPECT_EQ(p.right, (RowList{3}));
  p = partition_rows(t, {0, 0, 3.0, false}, rows);
  EXPECT_EQ(p.right, (RowList{1, 3}));
  const RowIndex bad[] = {4};
  EXPECT_THROW(partition_rows(t, {0, 0, 3.0, true}, bad), ProtocolError);
}

}  // namespace
}  // namespace fedgbf
