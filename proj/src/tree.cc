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

#include <algorithm>
#include <deque>
#include <numeric>
#include <unordered_map>

namespace fedgbf {

std::vector<GradPair> compute_grad_pairs(std::span<const std::uint8_t> labels,
                                         std::span<const double> margins) {
  if (labels.size() != margins.size()) {
    throw Error("labels and margins differ in length");
  }
  const Eigen::Map<const Eigen::ArrayXd> m(margins.data(),
                                           static_cast<Eigen::Index>(margins.size()));
  const Eigen::ArrayXd p = m.unaryExpr([](double x) { return sigmoid(x); });
  std::vector<GradPair> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double pi = p(static_cast<Eigen::Index>(i));
    out[i] = {pi - static_cast<double>(labels[i]), pi * (1.0 - pi)};
  }
  return out;
}

FixedGrads encode_grads(std::span<const GradPair> grads,
                        const FixedPointCodec& codec) {
  FixedGrads out;
  out.g.reserve(grads.size());
  out.h.reserve(grads.size());
  for (const GradPair& gp : grads) {
    out.g.push_back(codec.encode(gp.g));
    out.h.push_back(codec.encode(gp.h));
  }
  return out;
}

BinStats FeatureHistogram::total() const {
  BinStats t;
  for (const BinStats& b : bins) t += b;
  return t;
}

FeatureHistogram build_histogram(const BinnedDataset& binned, FeatureCode code,
                                 PartyId owner, std::span<const RowIndex> rows,
                                 const FixedGrads& grads) {
  const Eigen::Index col = binned.column_of(code);
  FeatureHistogram hist;
  hist.feature_code = code;
  hist.owner = owner;
  hist.bins.resize(binned.bins[static_cast<std::size_t>(col)].bin_count());
  const auto n = static_cast<RowIndex>(binned.rows());
  for (RowIndex r : rows) {
    if (r >= n || r >= grads.size()) {
      throw Error("histogram row " + std::to_string(r) + " outside the dataset");
    }
    BinStats& b = hist.bins[binned.matrix(r, col)];
    b.g += grads.g[r];
    b.h += grads.h[r];
    ++b.count;
  }
  return hist;
}

double split_score(double GL, double HL, double GR, double HR, double lambda,
                   double gamma) {
  const double G = GL + GR;
  const double H = HL + HR;
  return 0.5 * (GL * GL / (HL + lambda) + GR * GR / (HR + lambda) -
                G * G / (H + lambda)) -
         gamma;
}

std::optional<SplitCandidate> best_split(std::span<const FeatureHistogram> histograms,
                                         const SplitParams& params,
                                         const FixedPointCodec& codec) {
  std::vector<const FeatureHistogram*> order;
  for (const FeatureHistogram& h : histograms) order.push_back(&h);
  std::sort(order.begin(), order.end(),
            [](const auto* a, const auto* b) { return a->feature_code < b->feature_code; });

  std::optional<SplitCandidate> best;
  double best_score = 0.0;
  for (const FeatureHistogram* hist : order) {
    if (hist->bins.size() < 2) continue;
    const BinStats total = hist->total();
    const double G = codec.decode(total.g);
    const double H = codec.decode(total.h);
    const double parent = G * G / (H + params.lambda);
    const BinStats& missing = hist->bins.back();
    const std::size_t value_bins = hist->bins.size() - 1;

    BinStats prefix;
    for (std::size_t t = 0; t < value_bins; ++t) {
      prefix += hist->bins[t];
      for (bool missing_left : {true, false}) {
        BinStats left = prefix;
        if (missing_left) left += missing;
        const BinStats right = total - left;
        if (left.count < params.min_rows_leaf || right.count < params.min_rows_leaf) {
          continue;
        }
        const double HL = codec.decode(left.h);
        const double HR = codec.decode(right.h);
        if (HL < params.min_child_hessian || HR < params.min_child_hessian) continue;
        const double GL = codec.decode(left.g);
        const double GR = codec.decode(right.g);
        const double score = 0.5 * (GL * GL / (HL + params.lambda) +
                                    GR * GR / (HR + params.lambda) - parent) -
                             params.gamma;
        if (score > best_score) {
          best_score = score;
          best = SplitCandidate{hist->feature_code, hist->owner,
                                static_cast<std::uint16_t>(t), missing_left, score};
        }
      }
    }
  }
  return best;
}

double leaf_weight(double G, double H, double lambda) {
  if (!(H + lambda > 0.0)) throw Error("leaf weight needs H + lambda > 0");
  return -G / (H + lambda);
}

std::size_t TreeModel::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf; }));
}

nlohmann::json TreeModel::to_json() const {
  nlohmann::json j;
  j["max_depth"] = max_depth;
  j["lambda"] = lambda;
  j["gamma"] = gamma;
  nlohmann::json nodes_json = nlohmann::json::array();
  for (const TreeNode& n : nodes) {
    nlohmann::json nj;
    nj["depth"] = n.depth;
    if (n.is_leaf) {
      nj["leaf"] = n.weight;
    } else {
      nj["owner"] = n.split.owner.str();
      nj["feature"] = n.split.feature_code;
      nj["lookup"] = n.split.lookup_id;
      nj["gain"] = n.split.gain;
      nj["default_left"] = n.split.default_left;
      nj["left"] = n.left;
      nj["right"] = n.right;
    }
    nodes_json.push_back(std::move(nj));
  }
  j["nodes"] = std::move(nodes_json);
  return j;
}

TreeModel TreeModel::from_json(const nlohmann::json& j) {
  TreeModel t;
  t.max_depth = j.at("max_depth").get<int>();
  t.lambda = j.at("lambda").get<double>();
  t.gamma = j.at("gamma").get<double>();
  for (const auto& nj : j.at("nodes")) {
    TreeNode n;
    n.depth = nj.at("depth").get<std::uint32_t>();
    if (nj.contains("leaf")) {
      n.is_leaf = true;
      n.weight = nj.at("leaf").get<double>();
    } else {
      n.is_leaf = false;
      n.split.owner = PartyId::parse(nj.at("owner").get<std::string>());
      n.split.feature_code = nj.at("feature").get<FeatureCode>();
      n.split.lookup_id = nj.at("lookup").get<LookupId>();
      n.split.gain = nj.at("gain").get<double>();
      n.split.default_left = nj.at("default_left").get<bool>();
      n.left = nj.at("left").get<std::int32_t>();
      n.right = nj.at("right").get<std::int32_t>();
    }
    t.nodes.push_back(n);
  }
  const auto count = static_cast<std::int32_t>(t.nodes.size());
  for (const TreeNode& n : t.nodes) {
    if (!n.is_leaf && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count)) {
      throw Error("tree node references a missing child");
    }
  }
  return t;
}

LookupId make_lookup_id(TreeKey key, std::uint32_t node) {
  return (static_cast<LookupId>(key.layer) << 40) |
         (static_cast<LookupId>(key.index & 0xffffu) << 24) | (node & 0xffffffu);
}

LookupTable::LookupTable(const LookupTable& other) {
  std::lock_guard lock(other.mu_);
  entries_ = other.entries_;
}

LookupTable& LookupTable::operator=(const LookupTable& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mu_, other.mu_);
  entries_ = other.entries_;
  return *this;
}

void LookupTable::add(LookupId id, const LookupEntry& entry) {
  std::lock_guard lock(mu_);
  entries_[id] = entry;
}

LookupEntry LookupTable::at(LookupId id) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(id);
  if (it == entries_.end()) {
    throw ProtocolError("unknown lookup id " + std::to_string(id));
  }
  return it->second;
}

bool LookupTable::contains(LookupId id) const {
  std::lock_guard lock(mu_);
  return entries_.contains(id);
}

std::size_t LookupTable::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

nlohmann::json LookupTable::to_json() const {
  std::lock_guard lock(mu_);
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [id, e] : entries_) {
    arr.push_back({{"lookup", id},
                   {"feature", e.feature_code},
                   {"bin", e.bin},
                   {"threshold", std::isinf(e.threshold) ? nlohmann::json("inf")
                                                         : nlohmann::json(e.threshold)},
                   {"missing_left", e.missing_left}});
  }
  return arr;
}

LookupTable LookupTable::from_json(const nlohmann::json& j) {
  LookupTable t;
  for (const auto& ej : j) {
    LookupEntry e;
    e.feature_code = ej.at("feature").get<FeatureCode>();
    e.bin = ej.at("bin").get<std::uint16_t>();
    const auto& th = ej.at("threshold");
    e.threshold = th.is_string() ? std::numeric_limits<double>::infinity()
                                 : th.get<double>();
    e.missing_left = ej.at("missing_left").get<bool>();
    t.add(ej.at("lookup").get<LookupId>(), e);
  }
  return t;
}

Partition partition_rows(const PartyTable& table, const LookupEntry& entry,
                         std::span<const RowIndex> rows) {
  const Eigen::Index col = table.column_of(entry.feature_code);
  Partition p;
  for (RowIndex r : rows) {
    if (r >= table.rows()) throw ProtocolError("partition row out of range");
    const double v = table.values(r, col);
    const bool left = std::isnan(v) ? entry.missing_left : v <= entry.threshold;
    (left ? p.left : p.right).push_back(r);
  }
  return p;
}

TreeModel grow_tree(Coordinator& ctx, const TreeTask& task,
                    const FixedGrads& grads, const TreeParams& params) {
  if (task.rows.empty()) throw Error("cannot grow a tree on zero rows");
  const FixedPointCodec& codec = ctx.codec();
  TreeModel tree;
  tree.max_depth = params.max_depth;
  tree.lambda = params.split.lambda;
  tree.gamma = params.split.gamma;
  tree.nodes.emplace_back();

  struct Pending {
    std::uint32_t node;
    RowList rows;
  };
  std::deque<Pending> pending;
  pending.push_back({0, task.rows});

  while (!pending.empty()) {
    Pending cur = std::move(pending.front());
    pending.pop_front();
    const std::uint32_t depth = tree.nodes[cur.node].depth;

    std::optional<SplitCandidate> split;
    const bool may_split =
        static_cast<int>(depth) < params.max_depth &&
        cur.rows.size() >= 2 * static_cast<std::size_t>(std::max(1, params.split.min_rows_leaf)) &&
        !task.features.empty();
    if (may_split) {
      const auto hists = ctx.histograms(task.key, cur.node, cur.rows, task.features);
      split = best_split(hists, params.split, codec);
    }

    if (!split) {
      Fixed G = 0, H = 0;
      for (RowIndex r : cur.rows) {
        G += grads.g[r];
        H += grads.h[r];
      }
      TreeNode& node = tree.nodes[cur.node];
      node.is_leaf = true;
      node.weight = leaf_weight(codec.decode(G), codec.decode(H), params.split.lambda);
      continue;
    }

    const LookupId lookup = make_lookup_id(task.key, cur.node);
    Partition part = ctx.apply_split(task.key, cur.node, *split, lookup, cur.rows);
    if (part.left.size() + part.right.size() != cur.rows.size()) {
      throw ProtocolError("split owner returned a partition of the wrong size");
    }
    const auto left_id = static_cast<std::uint32_t>(tree.nodes.size());
    const auto right_id = left_id + 1;
    TreeNode child;
    child.depth = depth + 1;
    tree.nodes.push_back(child);
    tree.nodes.push_back(child);

    TreeNode& node = tree.nodes[cur.node];
    node.is_leaf = false;
    node.split = {split->owner, split->feature_code, lookup, split->gain,
                  split->missing_left};
    node.left = static_cast<std::int32_t>(left_id);
    node.right = static_cast<std::int32_t>(right_id);
    pending.push_back({left_id, std::move(part.left)});
    pending.push_back({right_id, std::move(part.right)});
  }
  return tree;
}

std::vector<double> predict_tree(const TreeModel& tree, Coordinator& ctx,
                                 std::span<const RowIndex> rows) {
  std::vector<double> out(rows.size(), 0.0);
  if (rows.empty() || tree.nodes.empty()) return out;
  std::unordered_map<RowIndex, std::size_t> position;
  position.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) position.emplace(rows[i], i);

  struct Frame {
    std::int32_t node;
    RowList rows;
  };
  std::vector<Frame> stack;
  stack.push_back({0, RowList(rows.begin(), rows.end())});
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    const TreeNode& node = tree.nodes.at(static_cast<std::size_t>(f.node));
    if (node.is_leaf) {
      for (RowIndex r : f.rows) out[position.at(r)] = node.weight;
      continue;
    }
    if (f.rows.empty()) continue;
    Partition p = ctx.route(node.split, f.rows);
    stack.push_back({node.right, std::move(p.right)});
    stack.push_back({node.left, std::move(p.left)});
  }
  return out;
}

double predict_row(const TreeModel& tree, Coordinator& ctx, RowIndex row) {
  const RowIndex rows[] = {row};
  return predict_tree(tree, ctx, rows).front();
}

}  // namespace fedgbf
