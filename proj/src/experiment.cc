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

#include "fedgbf/experiment.h"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "fedgbf/local_coordinator.h"

namespace fedgbf {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ${NAME} is replaced by the environment variable, or nothing.
std::string expand_env(const std::string& value) {
  std::string out;
  for (std::size_t i = 0; i < value.size();) {
    if (value.compare(i, 2, "${") == 0) {
      const auto end = value.find('}', i + 2);
      if (end == std::string::npos) throw Error("unterminated ${ in '" + value + "'");
      const char* env = std::getenv(value.substr(i + 2, end - i - 2).c_str());
      if (env) out += env;
      i = end + 1;
    } else {
      out += value[i++];
    }
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error("config key '" + key + "': '" + v + "' is not a number");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw Error("config key '" + key + "': '" + v + "' is not an integer");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error("config key '" + key + "': '" + v + "' is not a boolean");
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void set_key(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = expand_env(raw);
  auto schedule = [&](ScheduleSpec& s, const std::string& field) {
    if (field == "min") {
      s.v_min = to_double(key, v);
    } else if (field == "max") {
      s.v_max = to_double(key, v);
    } else if (field == "k") {
      s.k = to_double(key, v);
    } else if (field == "direction") {
      s.direction = parse_direction(v);
    } else if (field == "rounding") {
      s.rounding = parse_rounding(v);
    } else {
      throw Error("unknown config key '" + key + "'");
    }
  };
  if (key == "dataset.name") {
    c.dataset_name = v;
  } else if (key == "dataset.path") {
    c.dataset_path = v;
  } else if (key == "dataset.label") {
    c.schema.label_column = v;
  } else if (key == "dataset.id") {
    c.schema.id_column = v;
  } else if (key == "dataset.ignore") {
    c.schema.ignore_columns = split_list(v);
  } else if (key == "synthetic.rows") {
    c.synthetic.rows = static_cast<std::size_t>(to_int(key, v));
  } else if (key == "synthetic.features") {
    c.synthetic.features = static_cast<std::size_t>(to_int(key, v));
  } else if (key == "synthetic.seed") {
    c.synthetic.seed = static_cast<std::uint64_t>(to_int(key, v));
  } else if (key == "synthetic.missing_rate") {
    c.synthetic.missing_rate = to_double(key, v);
  } else if (key == "partition") {
    c.partition.clear();
    for (const auto& p : split_list(v)) c.partition.push_back(static_cast<int>(to_int(key, p)));
  } else if (key == "test_fraction") {
    c.test_fraction = to_double(key, v);
  } else if (key == "split_seed") {
    c.split_seed = static_cast<std::uint64_t>(to_int(key, v));
  } else if (key == "rounds") {
    c.rounds.clear();
    for (const auto& r : split_list(v)) c.rounds.push_back(static_cast<int>(to_int(key, r)));
  } else if (key.rfind("trees.", 0) == 0) {
    schedule(c.trees, key.substr(6));
  } else if (key.rfind("rho_id.", 0) == 0) {
    schedule(c.rho_id, key.substr(7));
  } else if (key == "rho_feat") {
    c.rho_feat = to_double(key, v);
  } else if (key == "learning_rate") {
    c.boosting.learning_rate = to_double(key, v);
  } else if (key == "max_depth") {
    c.boosting.tree.max_depth = static_cast<int>(to_int(key, v));
  } else if (key == "lambda") {
    c.boosting.tree.split.lambda = to_double(key, v);
  } else if (key == "gamma") {
    c.boosting.tree.split.gamma = to_double(key, v);
  } else if (key == "min_rows_leaf") {
    c.boosting.tree.split.min_rows_leaf = static_cast<int>(to_int(key, v));
  } else if (key == "min_child_hessian") {
    c.boosting.tree.split.min_child_hessian = to_double(key, v);
  } else if (key == "bins") {
    c.boosting.bins = static_cast<int>(to_int(key, v));
  } else if (key == "seed") {
    c.boosting.seed = static_cast<std::uint64_t>(to_int(key, v));
  } else if (key == "threads") {
    c.boosting.threads = static_cast<int>(to_int(key, v));
  } else if (key == "baseline") {
    c.baseline = to_bool(key, v);
  } else if (key == "mode") {
    if (v == "federated") {
      c.mode = SessionMode::kFederated;
    } else if (v == "local") {
      c.mode = SessionMode::kLocal;
    } else {
      throw Error("mode must be 'federated' or 'local'");
    }
  } else if (key == "crypto") {
    c.backend = parse_backend(v);
  } else if (key == "key_bits") {
    c.key_bits = static_cast<int>(to_int(key, v));
  } else if (key == "key_seed") {
    c.key_seed = static_cast<std::uint64_t>(to_int(key, v));
  } else if (key == "latency_us") {
    c.latency = std::chrono::microseconds(to_int(key, v));
  } else if (key == "t_unit") {
    if (v.empty() || v == "measure") {
      c.t_unit.reset();
    } else {
      c.t_unit = to_double(key, v);
    }
  } else if (key == "t_0") {
    if (v.empty() || v == "measure") {
      c.t_0.reset();
    } else {
      c.t_0 = to_double(key, v);
    }
  } else {
    throw Error("unknown config key '" + key + "'");
  }
}

std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::vector<double> to_probabilities(const std::vector<double>& margins) {
  std::vector<double> out(margins);
  for (double& m : out) m = sigmoid(m);
  return out;
}

std::vector<std::uint8_t> gather(const std::vector<std::uint8_t>& labels,
                                 std::span<const RowIndex> rows) {
  std::vector<std::uint8_t> out;
  out.reserve(rows.size());
  for (RowIndex r : rows) out.push_back(labels[r]);
  return out;
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  trees.v_min = 2;
  trees.v_max = 5;
  trees.direction = ScheduleDirection::kDecay;
  trees.rounding = ScheduleRounding::kNearest;
  rho_id.v_min = 0.1;
  rho_id.v_max = 0.3;
  rho_id.direction = ScheduleDirection::kGrowth;
}

std::map<std::string, std::string> ExperimentConfig::to_map() const {
  std::map<std::string, std::string> m;
  m["dataset.name"] = dataset_name;
  m["dataset.path"] = dataset_path;
  m["dataset.label"] = schema.label_column;
  m["dataset.id"] = schema.id_column;
  std::string ignore;
  for (std::size_t i = 0; i < schema.ignore_columns.size(); ++i) {
    ignore += (i ? "," : "") + schema.ignore_columns[i];
  }
  m["dataset.ignore"] = ignore;
  if (dataset_path == "synthetic") {
    m["synthetic.rows"] = std::to_string(synthetic.rows);
    m["synthetic.features"] = std::to_string(synthetic.features);
    m["synthetic.seed"] = std::to_string(synthetic.seed);
    m["synthetic.missing_rate"] = fmt(synthetic.missing_rate);
  }
  m["partition"] = join(partition);
  m["test_fraction"] = fmt(test_fraction);
  m["split_seed"] = std::to_string(split_seed);
  m["rounds"] = join(rounds);
  auto sched = [&](const std::string& prefix, const ScheduleSpec& s) {
    m[prefix + ".min"] = fmt(s.v_min);
    m[prefix + ".max"] = fmt(s.v_max);
    m[prefix + ".k"] = fmt(s.k);
    m[prefix + ".direction"] = to_string(s.direction);
    m[prefix + ".rounding"] = to_string(s.rounding);
  };
  sched("trees", trees);
  sched("rho_id", rho_id);
  m["rho_feat"] = fmt(rho_feat);
  m["learning_rate"] = fmt(boosting.learning_rate);
  m["max_depth"] = std::to_string(boosting.tree.max_depth);
  m["lambda"] = fmt(boosting.tree.split.lambda);
  m["gamma"] = fmt(boosting.tree.split.gamma);
  m["min_rows_leaf"] = std::to_string(boosting.tree.split.min_rows_leaf);
  m["min_child_hessian"] = fmt(boosting.tree.split.min_child_hessian);
  m["bins"] = std::to_string(boosting.bins);
  m["seed"] = std::to_string(boosting.seed);
  m["threads"] = std::to_string(boosting.threads);
  m["baseline"] = baseline ? "true" : "false";
  m["mode"] = mode == SessionMode::kFederated ? "federated" : "local";
  m["crypto"] = to_string(backend);
  m["key_bits"] = std::to_string(key_bits);
  m["key_seed"] = std::to_string(key_seed);
  m["latency_us"] = std::to_string(latency.count());
  m["t_unit"] = t_unit ? fmt(*t_unit) : "measure";
  m["t_0"] = t_0 ? fmt(*t_0) : "measure";
  return m;
}

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  ExperimentConfig c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // '#' opens a comment at line start or as a separate word; "#0" is a value.
    line = trim(line);
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] != '#') continue;
      const bool word_start = i == 0 || std::isspace(static_cast<unsigned char>(line[i - 1]));
      const bool word_end =
          i + 1 == line.size() || std::isspace(static_cast<unsigned char>(line[i + 1]));
      if (i == 0 || (word_start && word_end)) {
        line = trim(line.substr(0, i));
        break;
      }
    }
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(source + ":" + std::to_string(line_no) + ": expected key = value");
    }
    try {
      set_key(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  ExperimentConfig c = parse_config(in, path.string());
  if (!c.dataset_path.empty() && c.dataset_path != "synthetic" &&
      fs::path(c.dataset_path).is_relative()) {
    c.dataset_path = (path.parent_path() / c.dataset_path).lexically_normal().string();
  }
  return c;
}

void apply_overrides(ExperimentConfig& config, const std::vector<std::string>& overrides) {
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw Error("override '" + o + "' is not key=value");
    set_key(config, trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
}

PreparedData prepare_data(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  RawTable raw;
  if (config.dataset_path == "synthetic") {
    raw = synthetic_table(config.synthetic);
  } else {
    if (config.dataset_path.empty()) throw DataError("no dataset.path configured");
    if (!fs::is_regular_file(config.dataset_path)) {
      throw DataError("dataset file not found: " + config.dataset_path);
    }
    raw = load_csv(config.dataset_path, config.schema);
  }
  if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0)) {
    throw Error("test_fraction must be in (0, 1)");
  }

  std::vector<int> plan = config.partition;
  if (plan.empty()) {
    const int d = static_cast<int>(raw.features());
    plan = {d - d / 2, d / 2};
  }
  PreparedData out;
  out.parties = partition_vertically(raw, plan);
  const AlignedIndex index = align_ids(out.parties);

  std::vector<RowIndex> order(index.row_count());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<RowIndex>(i);
  std::mt19937_64 rng(config.split_seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(
      std::llround(static_cast<double>(order.size()) * config.test_fraction));
  out.test_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.train_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(out.train_rows.begin(), out.train_rows.end());
  std::sort(out.test_rows.begin(), out.test_rows.end());
  if (out.train_rows.empty() || out.test_rows.empty()) throw DataError("dataset too small to split");
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

Session::Session(const ExperimentConfig& config, const std::vector<PartyTable>& parties) {
  if (config.mode == SessionMode::kLocal) {
    coordinator_ = std::make_unique<LocalCoordinator>(parties);
    return;
  }
  const KeyPair keys = keygen(config.backend, config.key_bits, config.key_seed);
  TransportOptions options;
  options.latency = config.latency;
  federation_ = std::make_unique<Federation>(parties, keys, FixedPointCodec(), options);
  coordinator_ = std::make_unique<FederatedCoordinator>(*federation_);
}

Session::~Session() = default;

Transcript* Session::transcript() {
  return federation_ ? &federation_->transcript() : nullptr;
}

void save_model(const fs::path& dir, const GbfModel& model,
                const std::map<PartyId, LookupTable>& lookups) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "model.json");
    if (!out) throw Error("cannot write " + (dir / "model.json").string());
    out << model.to_json().dump(1) << '\n';
  }
  for (const auto& [party, table] : lookups) {
    std::ofstream out(dir / ("lookup_" + party.str() + ".json"));
    out << table.to_json().dump(1) << '\n';
  }
}

GbfModel load_model(const fs::path& dir, std::map<PartyId, LookupTable>* lookups) {
  std::ifstream in(dir / "model.json");
  if (!in) throw DataError("cannot open " + (dir / "model.json").string());
  GbfModel model;
  try {
    model = GbfModel::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad model file: " + std::string(e.what()));
  }
  if (lookups) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("lookup_", 0) != 0 || entry.path().extension() != ".json") continue;
      const PartyId party = PartyId::parse(name.substr(7, name.size() - 12));
      std::ifstream lin(entry.path());
      (*lookups)[party] = LookupTable::from_json(nlohmann::json::parse(lin));
    }
  }
  return model;
}

std::vector<LayerCost> layer_costs(std::span<const LayerConfig> layers) {
  std::vector<LayerCost> out;
  for (const LayerConfig& l : layers) out.push_back({l.rho_id, l.rho_feat, l.trees});
  return out;
}

namespace {

struct Curve {
  std::string model;
  int total_rounds = 0;
  std::vector<double> train_auc;
  std::vector<double> test_auc;
  std::vector<double> wall;  // cumulative training seconds
};

// Margins after each layer, for the AUC-vs-round curves.
Curve staged_curve(const std::string& name, const GbfModel& model, Coordinator& ctx,
                   const PreparedData& data, const std::vector<double>& layer_seconds) {
  Curve c;
  c.model = name;
  c.total_rounds = static_cast<int>(model.layers.size());
  const auto train_labels = gather(data.labels(), data.train_rows);
  const auto test_labels = gather(data.labels(), data.test_rows);
  std::vector<double> mtrain(data.train_rows.size(), model.base_margin);
  std::vector<double> mtest(data.test_rows.size(), model.base_margin);
  double wall = 0.0;
  for (std::size_t m = 0; m < model.layers.size(); ++m) {
    const auto ftrain = layer_output(model.layers[m], ctx, data.train_rows);
    const auto ftest = layer_output(model.layers[m], ctx, data.test_rows);
    for (std::size_t i = 0; i < ftrain.size(); ++i) mtrain[i] += model.learning_rate * ftrain[i];
    for (std::size_t i = 0; i < ftest.size(); ++i) mtest[i] += model.learning_rate * ftest[i];
    c.train_auc.push_back(auc(train_labels, to_probabilities(mtrain)));
    c.test_auc.push_back(auc(test_labels, to_probabilities(mtest)));
    wall += m < layer_seconds.size() ? layer_seconds[m] : 0.0;
    c.wall.push_back(wall);
  }
  return c;
}

// Metrics of the first `rounds` layers of `model`.
std::vector<MetricReport> prefix_metrics(const std::string& name, const GbfModel& model,
                                         int rounds, Coordinator& ctx,
                                         const PreparedData& data) {
  GbfModel prefix = model;
  prefix.layers.resize(static_cast<std::size_t>(rounds));
  std::vector<MetricReport> out;
  for (const auto& [split, rows] :
       {std::pair<std::string, const RowList*>{"train", &data.train_rows},
        std::pair<std::string, const RowList*>{"test", &data.test_rows}}) {
    const auto scores = predict(prefix, ctx, *rows);
    out.push_back(evaluate_scores(gather(data.labels(), *rows), scores, name, split, rounds));
  }
  return out;
}

void append_transcript(std::ofstream& out, const std::string& run, Transcript* t,
                       ExperimentResult& result) {
  if (!t) return;
  out << "# run " << run << '\n';
  t->write(out);
  const auto records = t->records();
  result.transcript_records += records.size();
  result.violations += audit_transcript(records).size();
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const fs::path& out_dir,
                                std::ostream* progress) {
  if (config.rounds.empty()) throw Error("no round counts configured");
  for (int r : config.rounds) {
    if (r < 1) throw Error("round counts must be positive");
  }
  auto say = [&](const std::string& s) {
    if (progress) *progress << s << std::endl;
  };

  const PreparedData data = prepare_data(config);
  say("data: " + std::to_string(data.train_rows.size()) + " train rows, " +
      std::to_string(data.test_rows.size()) + " test rows, " +
      std::to_string(data.parties.size()) + " parties");
  fs::create_directories(out_dir / "models");
  {
    std::ofstream cfg(out_dir / "config.txt");
    for (const auto& [k, v] : config.to_map()) cfg << k << " = " << v << '\n';
  }

  ExperimentResult result;
  std::ofstream transcript_log(out_dir / "transcript.log");
  std::vector<Curve> curves;

  // Runtime units: measured on this stack unless the config provides them.
  double t_unit = config.t_unit.value_or(0.0);
  double t_0 = config.t_0.value_or(0.0);
  if (!config.t_unit || !config.t_0) {
    Session s(config, data.parties);
    const auto start = std::chrono::steady_clock::now();
    s.coordinator().initialize_bins(data.train_rows, config.boosting.bins);
    const auto binned = std::chrono::steady_clock::now();
    std::vector<double> margins(s.coordinator().row_count(), 0.0);
    train_layer(s.coordinator(), 1, data.train_rows, LayerConfig{}, config.boosting, margins);
    const auto done = std::chrono::steady_clock::now();
    if (!config.t_0) t_0 = data.seconds + std::chrono::duration<double>(binned - start).count();
    if (!config.t_unit) t_unit = std::chrono::duration<double>(done - binned).count();
    result.measured_units = true;
    say("measured T_unit = " + fmt(t_unit) + " s, T_0 = " + fmt(t_0) + " s");
  }

  const int max_rounds = *std::max_element(config.rounds.begin(), config.rounds.end());
  std::vector<std::vector<LayerConfig>> plans;

  for (int rounds : config.rounds) {
    DynamicConfig dyn;
    dyn.rounds = rounds;
    dyn.trees = config.trees;
    dyn.rho_id = config.rho_id;
    dyn.rho_feat = ScheduleSpec::constant(config.rho_feat, rounds);
    const std::vector<LayerConfig> plan = plan_dynamic_layers(dyn);
    plans.push_back(plan);

    const std::string name = "dynamic-" + std::to_string(rounds);
    say("training " + name);
    Session s(config, data.parties);
    std::vector<double> seconds;
    GbfModel model = train_layers(s.coordinator(), data.train_rows, plan, config.boosting,
                                  [&](const LayerReport& r) { seconds.push_back(r.seconds); });
    model.config["experiment"] = config.to_map();
    save_model(out_dir / "models" / name, model, s.coordinator().export_lookup_tables());
    for (auto& r : prefix_metrics("dynamic", model, rounds, s.coordinator(), data)) {
      result.metrics.push_back(std::move(r));
    }
    if (rounds == max_rounds) {
      curves.push_back(staged_curve("dynamic", model, s.coordinator(), data, seconds));
    }
    append_transcript(transcript_log, name, s.transcript(), result);

    const auto costs = layer_costs(plan);
    result.estimates.push_back({rounds, estimate_runtime(t_unit, t_0, costs)});
  }

  if (config.baseline) {
    const std::string name = "baseline-" + std::to_string(max_rounds);
    say("training " + name);
    Session s(config, data.parties);
    std::vector<double> seconds;
    FedGbfConfig base;
    base.rounds = max_rounds;
    GbfModel model = train_fedgbf(s.coordinator(), data.train_rows, base, config.boosting,
                                  [&](const LayerReport& r) { seconds.push_back(r.seconds); });
    model.config["experiment"] = config.to_map();
    save_model(out_dir / "models" / name, model, s.coordinator().export_lookup_tables());
    for (int rounds : config.rounds) {
      for (auto& r : prefix_metrics("baseline", model, rounds, s.coordinator(), data)) {
        result.metrics.push_back(std::move(r));
      }
    }
    curves.push_back(staged_curve("baseline", model, s.coordinator(), data, seconds));
    append_transcript(transcript_log, name, s.transcript(), result);
  }

  {
    std::ofstream out(out_dir / "metrics.csv");
    out << "model,rounds,split,auc,acc,f1\n";
    for (const MetricReport& r : result.metrics) {
      out << r.model << ',' << r.rounds << ',' << r.split << ',' << fmt(r.auc) << ','
          << fmt(r.acc) << ',' << fmt(r.f1) << '\n';
    }
  }
  {
    std::ofstream out(out_dir / "auc_vs_round.csv");
    out << "model,round,train_auc,test_auc\n";
    for (const Curve& c : curves) {
      for (std::size_t i = 0; i < c.test_auc.size(); ++i) {
        out << c.model << ',' << i + 1 << ',' << fmt(c.train_auc[i]) << ','
            << fmt(c.test_auc[i]) << '\n';
      }
    }
  }
  {
    // Estimated cumulative time per round from the runtime model, plus the
    // wall time measured here.
    std::ofstream out(out_dir / "auc_vs_time.csv");
    out << "model,round,estimated_lower_s,estimated_upper_s,wall_s,test_auc\n";
    const std::vector<LayerConfig>& plan = plans.back();
    for (const Curve& c : curves) {
      double lower = t_0, upper = t_0;
      for (std::size_t i = 0; i < c.test_auc.size(); ++i) {
        if (c.model == "dynamic") {
          const LayerConfig& l = plan.at(i);
          lower += l.rho_id * l.rho_feat * t_unit;
          upper += l.rho_id * l.rho_feat * l.trees * t_unit;
        } else {
          lower += t_unit;
          upper += t_unit;
        }
        out << c.model << ',' << i + 1 << ',' << fmt(lower) << ',' << fmt(upper) << ','
            << fmt(c.wall[i]) << ',' << fmt(c.test_auc[i]) << '\n';
      }
    }
  }
  {
    std::ofstream out(out_dir / "estimate.txt");
    out << "# runtime model: single tree = alpha * beta * T_unit\n";
    out << "t_unit_s = " << fmt(t_unit) << '\n';
    out << "t_0_s = " << fmt(t_0) << '\n';
    out << "units = " << (result.measured_units ? "measured" : "configured") << '\n';
    for (const RoundEstimate& e : result.estimates) {
      out << '\n' << "[rounds " << e.rounds << "]\n";
      out << "lower_s = " << fmt(e.estimate.lower) << '\n';
      out << "upper_s = " << fmt(e.estimate.upper) << '\n';
      out << "sequential_s = " << fmt(e.estimate.sequential) << '\n';
      out << "ordered = " << (e.estimate.ordered() ? "true" : "false") << '\n';
    }
  }
  say("audit: " + std::to_string(result.violations) + " violations in " +
      std::to_string(result.transcript_records) + " transcript records");
  return result;
}

}  // namespace fedgbf
