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

#include "fedgbf/protocol.h"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace fedgbf {

// ---- Transcript -------------------------------------------------------------

std::uint64_t Transcript::append(TranscriptRecord record) {
  std::lock_guard<std::mutex> lock(mu_);
  record.seq = records_.size() + 1;
  records_.push_back(std::move(record));
  return records_.back().seq;
}

std::vector<TranscriptRecord> Transcript::records() const {
  std::lock_guard<std::mutex> lock(mu_);
  return records_;
}

std::size_t Transcript::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return records_.size();
}

void Transcript::clear() {
  std::lock_guard<std::mutex> lock(mu_);
  records_.clear();
}

void Transcript::write(std::ostream& out) const {
  std::lock_guard<std::mutex> lock(mu_);
  out << "# seq\tsender\treceiver\ttype\tpayload_bytes\tcorrelation\tdisclosures\n";
  for (const TranscriptRecord& r : records_) {
    out << r.seq << '\t' << r.sender.str() << '\t' << r.receiver.str() << '\t'
        << to_string(r.type) << '\t' << r.payload_bytes << '\t' << r.correlation << '\t';
    if (r.disclosures.empty()) out << '-';
    for (std::size_t i = 0; i < r.disclosures.size(); ++i) {
      if (i) out << ',';
      out << to_string(r.disclosures[i]);
    }
    out << '\n';
  }
}

std::vector<TranscriptRecord> Transcript::read(std::istream& in) {
  std::vector<TranscriptRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() != 7) {
      throw DataError("transcript line " + std::to_string(line_no) + ": expected 7 fields");
    }
    try {
      TranscriptRecord r;
      r.seq = std::stoull(fields[0]);
      r.sender = PartyId::parse(fields[1]);
      r.receiver = PartyId::parse(fields[2]);
      r.type = parse_message_type(fields[3]);
      r.payload_bytes = std::stoull(fields[4]);
      r.correlation = std::stoull(fields[5]);
      if (fields[6] != "-") {
        std::stringstream ds(fields[6]);
        std::string name;
        while (std::getline(ds, name, ',')) r.disclosures.push_back(parse_disclosure(name));
      }
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw DataError("transcript line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

namespace {

bool is_request(MessageType t) {
  switch (t) {
    case MessageType::kHistResponse:
    case MessageType::kPartitionResponse:
    case MessageType::kAck:
      return false;
    default:
      return true;
  }
}

}  // namespace

std::vector<Violation> audit_transcript(std::span<const TranscriptRecord> log) {
  std::vector<Violation> out;
  for (const TranscriptRecord& r : log) {
    if (r.sender == r.receiver) continue;
    std::string reason;
    for (Disclosure d : r.disclosures) {
      if (!is_forbidden(d)) continue;
      if (!reason.empty()) reason += "; ";
      reason += to_string(r.type) + " from " + r.sender.str() + " to " +
                r.receiver.str() + " carries " + to_string(d);
    }
    const bool want_active_sender = is_request(r.type);
    if (r.sender.is_active() != want_active_sender || r.receiver.is_active() == want_active_sender) {
      if (!reason.empty()) reason += "; ";
      reason += to_string(r.type) + " sent from " + r.sender.str() + " to " +
                r.receiver.str() + " in the wrong direction";
    }
    if (!reason.empty()) out.push_back({r.seq, std::move(reason)});
  }
  return out;
}

// ---- PartyContext -----------------------------------------------------------

PartyContext::PartyContext(PartyTable table, CryptoContext crypto)
    : table_(std::move(table)), crypto_(std::move(crypto)) {
  if (is_active() != crypto_.can_decrypt()) {
    throw AccessError("only the active party may hold the private key");
  }
}

Message PartyContext::handle(const PartyId& from, const Message& message) {
  std::lock_guard<std::mutex> lock(mailbox_);
  if (is_active()) {
    throw ProtocolError("active party received " + to_string(type_of(message)) +
                        " from " + from.str());
  }
  if (!from.is_active()) {
    throw ProtocolError(id().str() + " only serves the active party, not " + from.str());
  }
  return std::visit(
      [&](const auto& m) -> Message {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BinSetup>) {
          return on_bin_setup(m);
        } else if constexpr (std::is_same_v<T, SampleNotify>) {
          return on_sample_notify(m);
        } else if constexpr (std::is_same_v<T, EncGrads>) {
          return on_enc_grads(m);
        } else if constexpr (std::is_same_v<T, HistRequest>) {
          return on_hist_request(m);
        } else if constexpr (std::is_same_v<T, SplitNotify>) {
          const Partition p = register_split(m.lookup, m.feature, m.bin, m.missing_left, m.rows);
          return PartitionResponse{m.lookup, p.left, p.right};
        } else if constexpr (std::is_same_v<T, PartitionRequest>) {
          const Partition p = partition(m.lookup, m.rows);
          return PartitionResponse{m.lookup, p.left, p.right};
        } else {
          throw ProtocolError(id().str() + " cannot serve " + to_string(type_of(message)));
        }
      },
      message);
}

namespace {

void check_rows(std::span<const RowIndex> rows, Eigen::Index n) {
  for (RowIndex r : rows) {
    if (static_cast<Eigen::Index>(r) >= n) {
      throw ProtocolError("row " + std::to_string(r) + " is outside the aligned index");
    }
  }
}

}  // namespace

void PartyContext::setup_bins(std::span<const RowIndex> rows, int bin_count) {
  check_rows(rows, table_.rows());
  bin_count_ = bin_count;
  global_bins_ = apply_bins(table_, compute_bins(table_, bin_count, rows));
  layer_bins_.reset();
  current_bins_ = &*global_bins_;
}

void PartyContext::begin_layer(std::span<const RowIndex> rows, bool rebin) {
  if (!global_bins_) throw ProtocolError(id().str() + " has no bins yet");
  if (rebin) {
    check_rows(rows, table_.rows());
    layer_bins_ = apply_bins(table_, compute_bins(table_, bin_count_, rows));
    current_bins_ = &*layer_bins_;
  } else {
    current_bins_ = &*global_bins_;
  }
}

const BinnedDataset& PartyContext::bins() const {
  if (!current_bins_) throw ProtocolError(id().str() + " has no bins yet");
  return *current_bins_;
}

std::vector<FeatureHistogram> PartyContext::plain_histograms(
    std::span<const RowIndex> rows, std::span<const FeatureCode> features,
    const FixedGrads& grads) const {
  if (!is_active()) throw AccessError(id().str() + " has no plaintext gradients");
  std::vector<FeatureHistogram> out;
  out.reserve(features.size());
  for (FeatureCode code : features) {
    if (!table_.owns(code)) {
      throw ProtocolError(id().str() + " does not own feature " + std::to_string(code));
    }
    out.push_back(build_histogram(bins(), code, id(), rows, grads));
  }
  return out;
}

Partition PartyContext::register_split(LookupId lookup, FeatureCode feature,
                                       std::uint16_t bin, bool missing_left,
                                       std::span<const RowIndex> rows) {
  if (!table_.owns(feature)) {
    throw ProtocolError(id().str() + " does not own feature " + std::to_string(feature));
  }
  const QuantileBins& qb = bins().bins_of(feature);
  if (bin >= qb.missing_bin()) {
    throw ProtocolError("split bin " + std::to_string(bin) + " out of range");
  }
  if (lookups_.contains(lookup)) {
    throw ProtocolError("lookup id " + std::to_string(lookup) + " already used");
  }
  check_rows(rows, table_.rows());
  const LookupEntry entry{feature, bin, qb.upper_edge(bin), missing_left};
  lookups_.add(lookup, entry);
  return partition_rows(table_, entry, rows);
}

Partition PartyContext::partition(LookupId lookup, std::span<const RowIndex> rows) const {
  check_rows(rows, table_.rows());
  return partition_rows(table_, lookups_.at(lookup), rows);
}

Message PartyContext::on_bin_setup(const BinSetup& m) {
  setup_bins(m.rows, m.bin_count);
  return Ack{};
}

Message PartyContext::on_sample_notify(const SampleNotify& m) {
  for (FeatureCode code : m.features) {
    if (!table_.owns(code)) {
      throw ProtocolError(id().str() + " was sampled on foreign feature " +
                          std::to_string(code));
    }
  }
  check_rows(m.rows, table_.rows());
  selected_[m.tree] = m.features;
  return Ack{};
}

Message PartyContext::on_enc_grads(const EncGrads& m) {
  if (m.g.size() != m.rows.size() || m.h.size() != m.rows.size()) {
    throw ProtocolError("gradient ciphertexts do not match the row list");
  }
  check_rows(m.rows, table_.rows());
  begin_layer(m.rows, m.rebin);
  const auto n = static_cast<std::size_t>(table_.rows());
  grads_layer_ = m.layer;
  enc_g_.assign(n, Ciphertext());
  enc_h_.assign(n, Ciphertext());
  has_grad_.assign(n, 0);
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    enc_g_[m.rows[i]] = m.g[i];
    enc_h_[m.rows[i]] = m.h[i];
    has_grad_[m.rows[i]] = 1;
  }
  std::erase_if(selected_, [&](const auto& kv) { return kv.first.layer != m.layer; });
  return Ack{};
}

Message PartyContext::on_hist_request(const HistRequest& m) {
  if (m.tree.layer != grads_layer_ || has_grad_.empty()) {
    throw ProtocolError(id().str() + " has no gradients for layer " +
                        std::to_string(m.tree.layer));
  }
  check_rows(m.rows, table_.rows());
  for (RowIndex r : m.rows) {
    if (!has_grad_[r]) {
      throw ProtocolError(id().str() + " has no gradient for row " + std::to_string(r));
    }
  }
  auto sel = selected_.find(m.tree);
  if (sel == selected_.end()) {
    throw ProtocolError(id().str() + " was not notified of tree " +
                        std::to_string(m.tree.layer) + "/" + std::to_string(m.tree.index));
  }
  const std::set<FeatureCode> allowed(sel->second.begin(), sel->second.end());

  HistResponse reply{m.tree, m.node, {}};
  const BinnedDataset& binned = bins();
  for (FeatureCode code : m.features) {
    if (!allowed.contains(code)) {
      throw ProtocolError("feature " + std::to_string(code) +
                          " was not sampled for this tree at " + id().str());
    }
    const Eigen::Index col = binned.column_of(code);
    const std::size_t nbins = binned.bins[static_cast<std::size_t>(col)].bin_count();
    EncryptedHistogram h;
    h.feature_code = code;
    h.g.assign(nbins, crypto_.zero());
    h.h.assign(nbins, crypto_.zero());
    std::vector<std::int64_t> counts(nbins, 0);
    for (RowIndex r : m.rows) {
      const std::uint16_t b = binned.matrix(r, col);
      crypto_.add_into(h.g[b], enc_g_[r]);
      crypto_.add_into(h.h[b], enc_h_[r]);
      ++counts[b];
    }
    h.count.reserve(nbins);
    for (std::int64_t c : counts) h.count.push_back(crypto_.encrypt_fixed(c));
    reply.histograms.push_back(std::move(h));
  }
  return reply;
}

// ---- Federation -------------------------------------------------------------

Federation::Federation(std::vector<PartyTable> tables, const KeyPair& keys,
                       FixedPointCodec codec, TransportOptions options)
    : options_(options) {
  if (tables.empty() || !tables.front().party().is_active()) {
    throw Error("the first party table must belong to the active party");
  }
  const CryptoContext full = CryptoContext::from_keys(keys, codec);
  const Eigen::Index n = tables.front().rows();
  for (std::size_t i = 0; i < tables.size(); ++i) {
    PartyTable& t = tables[i];
    if (i > 0 && t.party().is_active()) throw Error("more than one active party");
    if (t.rows() != n) throw Error("party tables are not aligned");
    if (i > 0 && !t.labels.empty()) throw AccessError("a passive party holds labels");
    for (FeatureCode code : t.partition.feature_codes) {
      if (!owners_.emplace(code, t.party()).second) {
        throw Error("feature code " + std::to_string(code) + " owned twice");
      }
    }
    const PartyId id = t.party();
    parties_.push_back(std::make_unique<PartyContext>(
        std::move(t), id.is_active() ? full : full.public_only()));
  }
}

PartyContext& Federation::party(const PartyId& id) {
  for (auto& p : parties_) {
    if (p->id() == id) return *p;
  }
  throw ProtocolError("unknown party " + id.str());
}

std::vector<PartyId> Federation::passive_ids() const {
  std::vector<PartyId> out;
  for (const auto& p : parties_) {
    if (!p->is_active()) out.push_back(p->id());
  }
  return out;
}

Message Federation::send(const PartyId& from, const PartyId& to, const Message& message) {
  if (from == to) throw ProtocolError("a party cannot message itself");
  PartyContext& receiver = party(to);
  party(from);

  const std::uint64_t corr = next_correlation_.fetch_add(1);
  auto log = [&](const PartyId& s, const PartyId& r, const Message& m,
                 const std::string& bytes) {
    TranscriptRecord rec;
    rec.sender = s;
    rec.receiver = r;
    rec.type = type_of(m);
    rec.payload_bytes = bytes.size();
    rec.correlation = corr;
    rec.disclosures = disclosures_of(m);
    for (Disclosure d : rec.disclosures) {
      if (is_forbidden(d)) {
        throw AccessError(to_string(rec.type) + " may not carry " + to_string(d));
      }
    }
    transcript_.append(std::move(rec));
  };

  const std::string request_bytes = encode_message(message);
  log(from, to, message, request_bytes);
  if (options_.latency.count() > 0) std::this_thread::sleep_for(options_.latency);

  Message reply = options_.through_wire
                      ? receiver.handle(from, decode_message(request_bytes))
                      : receiver.handle(from, message);
  if (options_.tamper_reply) options_.tamper_reply(to, reply);

  const std::string reply_bytes = encode_message(reply);
  log(to, from, reply, reply_bytes);
  if (options_.latency.count() > 0) std::this_thread::sleep_for(options_.latency);
  return options_.through_wire ? decode_message(reply_bytes) : reply;
}

// ---- Protocol operations ----------------------------------------------------

namespace {

void require_active(const PartyContext& caller, const char* what) {
  if (!caller.is_active()) {
    throw AccessError(std::string(what) + " must be called by the active party, not " +
                      caller.id().str());
  }
}

template <typename T>
T expect(Message&& m, const char* what) {
  if (auto* p = std::get_if<T>(&m)) return std::move(*p);
  throw ProtocolError(std::string("unexpected reply ") + to_string(type_of(m)) +
                      " to " + what);
}

}  // namespace

std::vector<DeliveryReceipt> broadcast_encrypted_grads(Federation& fed,
                                                       const PartyContext& caller,
                                                       std::uint32_t layer,
                                                       std::span<const RowIndex> rows,
                                                       bool rebin,
                                                       const FixedGrads& grads) {
  require_active(caller, "broadcast_encrypted_grads");
  EncGrads msg;
  msg.layer = layer;
  msg.rebin = rebin;
  msg.rows.assign(rows.begin(), rows.end());
  msg.g.reserve(rows.size());
  msg.h.reserve(rows.size());
  for (RowIndex r : rows) {
    if (r >= grads.size()) throw ProtocolError("no gradient for row " + std::to_string(r));
    msg.g.push_back(caller.crypto().encrypt_fixed(grads.g[r]));
    msg.h.push_back(caller.crypto().encrypt_fixed(grads.h[r]));
  }
  std::vector<DeliveryReceipt> receipts;
  for (const PartyId& p : fed.passive_ids()) {
    expect<Ack>(fed.send(caller.id(), p, msg), "EncGrads");
    receipts.push_back({p, rows.size()});
  }
  return receipts;
}

std::vector<FeatureHistogram> request_histograms(
    Federation& fed, const PartyContext& caller, TreeKey tree, std::uint32_t node,
    std::span<const RowIndex> rows,
    const std::map<PartyId, std::vector<FeatureCode>>& features) {
  require_active(caller, "request_histograms");
  const CryptoContext& crypto = caller.crypto();
  std::vector<FeatureHistogram> out;
  for (const auto& [party, codes] : features) {
    if (party.is_active()) throw ProtocolError("histograms are requested from passive parties");
    if (codes.empty()) continue;
    HistRequest req{tree, node, RowList(rows.begin(), rows.end()), codes};
    HistResponse resp = expect<HistResponse>(fed.send(caller.id(), party, req), "HistRequest");
    if (resp.tree != tree || resp.node != node) {
      throw ProtocolError("histogram reply for the wrong node from " + party.str());
    }
    if (resp.histograms.size() != codes.size()) {
      throw ProtocolError(party.str() + " returned " + std::to_string(resp.histograms.size()) +
                          " histograms for " + std::to_string(codes.size()) + " features");
    }
    for (std::size_t i = 0; i < codes.size(); ++i) {
      const EncryptedHistogram& eh = resp.histograms[i];
      if (eh.feature_code != codes[i]) {
        throw ProtocolError(party.str() + " returned unrequested feature " +
                            std::to_string(eh.feature_code));
      }
      if (eh.h.size() != eh.g.size() || eh.count.size() != eh.g.size() || eh.g.size() < 2) {
        throw ProtocolError("malformed histogram for feature " + std::to_string(codes[i]));
      }
      FeatureHistogram h;
      h.feature_code = eh.feature_code;
      h.owner = party;
      h.bins.resize(eh.g.size());
      for (std::size_t b = 0; b < eh.g.size(); ++b) {
        h.bins[b].g = crypto.decrypt_fixed(eh.g[b]);
        h.bins[b].h = crypto.decrypt_fixed(eh.h[b]);
        h.bins[b].count = static_cast<std::int64_t>(crypto.decrypt_fixed(eh.count[b]));
      }
      out.push_back(std::move(h));
    }
  }
  return out;
}

Partition notify_split_and_partition(Federation& fed, const PartyContext& caller,
                                     const PartyId& owner, LookupId lookup,
                                     std::span<const RowIndex> rows) {
  require_active(caller, "notify_split_and_partition");
  if (owner == caller.id()) return caller.partition(lookup, rows);
  PartitionRequest req{lookup, RowList(rows.begin(), rows.end())};
  PartitionResponse resp =
      expect<PartitionResponse>(fed.send(caller.id(), owner, req), "PartitionRequest");
  if (resp.lookup != lookup) throw ProtocolError("partition reply for the wrong lookup id");
  return {std::move(resp.left), std::move(resp.right)};
}

// ---- FederatedCoordinator ---------------------------------------------------

FederatedCoordinator::FederatedCoordinator(Federation& fed) : fed_(fed) {}

std::size_t FederatedCoordinator::row_count() const {
  return static_cast<std::size_t>(fed_.active().table().rows());
}

std::vector<FeatureRef> FederatedCoordinator::features() const {
  std::vector<FeatureRef> out;
  for (const auto& [code, owner] : fed_.feature_owners()) out.push_back({code, owner});
  return out;
}

const std::vector<std::uint8_t>& FederatedCoordinator::labels() const {
  return fed_.active().table().labels;
}

const FixedPointCodec& FederatedCoordinator::codec() const {
  return fed_.active().crypto().codec();
}

void FederatedCoordinator::initialize_bins(std::span<const RowIndex> rows, int bin_count) {
  PartyContext& active = fed_.active();
  active.setup_bins(rows, bin_count);
  const BinSetup msg{RowList(rows.begin(), rows.end()), bin_count};
  for (const PartyId& p : fed_.passive_ids()) {
    expect<Ack>(fed_.send(active.id(), p, msg), "BinSetup");
  }
}

void FederatedCoordinator::open_layer(std::uint32_t layer, std::span<const RowIndex> rows,
                                      bool rebin, const FixedGrads& grads) {
  PartyContext& active = fed_.active();
  active.begin_layer(rows, rebin);
  grads_ = grads;
  broadcast_encrypted_grads(fed_, active, layer, rows, rebin, grads_);
}

void FederatedCoordinator::notify_samples(TreeKey tree, std::span<const RowIndex> rows,
                                          std::span<const FeatureCode> features) {
  const auto& owners = fed_.feature_owners();
  std::map<PartyId, std::vector<FeatureCode>> per_party;
  for (FeatureCode code : features) per_party[owners.at(code)].push_back(code);
  for (const PartyId& p : fed_.passive_ids()) {
    auto it = per_party.find(p);
    if (it == per_party.end()) continue;
    SampleNotify msg{tree, RowList(rows.begin(), rows.end()), it->second};
    expect<Ack>(fed_.send(fed_.active().id(), p, msg), "SampleNotify");
  }
}

std::vector<FeatureHistogram> FederatedCoordinator::histograms(
    TreeKey tree, std::uint32_t node, std::span<const RowIndex> rows,
    std::span<const FeatureCode> features) {
  PartyContext& active = fed_.active();
  const auto& owners = fed_.feature_owners();
  std::vector<FeatureCode> own;
  std::map<PartyId, std::vector<FeatureCode>> remote;
  for (FeatureCode code : features) {
    auto it = owners.find(code);
    if (it == owners.end()) throw ProtocolError("unknown feature " + std::to_string(code));
    if (it->second == active.id()) {
      own.push_back(code);
    } else {
      remote[it->second].push_back(code);
    }
  }
  std::vector<FeatureHistogram> got = active.plain_histograms(rows, own, grads_);
  std::vector<FeatureHistogram> far = request_histograms(fed_, active, tree, node, rows, remote);
  for (auto& h : far) got.push_back(std::move(h));

  std::map<FeatureCode, std::size_t> where;
  for (std::size_t i = 0; i < got.size(); ++i) where[got[i].feature_code] = i;
  std::vector<FeatureHistogram> out;
  out.reserve(features.size());
  for (FeatureCode code : features) out.push_back(std::move(got[where.at(code)]));
  return out;
}

Partition FederatedCoordinator::apply_split(TreeKey, std::uint32_t,
                                            const SplitCandidate& split, LookupId lookup,
                                            std::span<const RowIndex> rows) {
  PartyContext& active = fed_.active();
  const PartyId owner = fed_.feature_owners().at(split.feature_code);
  if (owner == active.id()) {
    return active.register_split(lookup, split.feature_code, split.bin, split.missing_left,
                                 rows);
  }
  SplitNotify msg{lookup, split.feature_code, split.bin, split.missing_left,
                  RowList(rows.begin(), rows.end())};
  PartitionResponse resp =
      expect<PartitionResponse>(fed_.send(active.id(), owner, msg), "SplitNotify");
  if (resp.lookup != lookup) throw ProtocolError("partition reply for the wrong lookup id");
  return {std::move(resp.left), std::move(resp.right)};
}

Partition FederatedCoordinator::route(const SplitRecord& split,
                                      std::span<const RowIndex> rows) {
  return notify_split_and_partition(fed_, fed_.active(), split.owner, split.lookup_id, rows);
}

std::map<PartyId, LookupTable> FederatedCoordinator::export_lookup_tables() const {
  std::map<PartyId, LookupTable> out;
  out[fed_.active().id()] = fed_.active().lookups();
  for (const PartyId& p : fed_.passive_ids()) out[p] = fed_.party(p).lookups();
  return out;
}

void FederatedCoordinator::import_lookup_tables(const std::map<PartyId, LookupTable>& tables) {
  for (const auto& [party, table] : tables) fed_.party(party).install_lookups(table);
}

}  // namespace fedgbf
