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

// In-process simulation of the active/passive message protocol.
//
// Each party is a PartyContext that owns its columns, its key material and
// the lookup table of splits it owns. Parties only talk through
// Federation::send, which enforces the disclosure rules at send time and
// appends every request and reply to the transcript.

#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "fedgbf/crypto.h"
#include "fedgbf/dataset.h"
#include "fedgbf/messages.h"
#include "fedgbf/tree.h"

namespace fedgbf {

struct TranscriptRecord {
  std::uint64_t seq = 0;
  PartyId sender;
  PartyId receiver;
  MessageType type = MessageType::kAck;
  std::uint64_t payload_bytes = 0;
  std::uint64_t correlation = 0;
  std::vector<Disclosure> disclosures;
};

// Append-only, thread-safe message log.
class Transcript {
 public:
  // Assigns and returns the sequence number.
  std::uint64_t append(TranscriptRecord record);
  std::vector<TranscriptRecord> records() const;
  std::size_t size() const;
  void clear();

  // One tab-separated line per record after a '#' header line.
  void write(std::ostream& out) const;
  static std::vector<TranscriptRecord> read(std::istream& in);

 private:
  mutable std::mutex mu_;
  std::vector<TranscriptRecord> records_;
};

struct Violation {
  std::uint64_t seq = 0;
  std::string reason;
};

// Empty iff no forbidden content crossed a party boundary and every message
// travelled in its allowed direction.
std::vector<Violation> audit_transcript(std::span<const TranscriptRecord> log);

class PartyContext {
 public:
  PartyContext(PartyTable table, CryptoContext crypto);

  const PartyId& id() const { return table_.party(); }
  bool is_active() const { return id().is_active(); }
  const PartyTable& table() const { return table_; }
  const CryptoContext& crypto() const { return crypto_; }

  // Serves one inbound message. Calls are serialized per party.
  Message handle(const PartyId& from, const Message& message);

  void setup_bins(std::span<const RowIndex> rows, int bin_count);
  // Switches to bins computed on `rows` (rebin) or back to the global bins.
  void begin_layer(std::span<const RowIndex> rows, bool rebin);
  const BinnedDataset& bins() const;

  // Own-feature histograms from plaintext gradients. Active party only.
  std::vector<FeatureHistogram> plain_histograms(std::span<const RowIndex> rows,
                                                 std::span<const FeatureCode> features,
                                                 const FixedGrads& grads) const;
  // Records a split on an own feature and partitions `rows` by it.
  Partition register_split(LookupId lookup, FeatureCode feature, std::uint16_t bin,
                           bool missing_left, std::span<const RowIndex> rows);
  Partition partition(LookupId lookup, std::span<const RowIndex> rows) const;

  const LookupTable& lookups() const { return lookups_; }
  void install_lookups(const LookupTable& table) { lookups_ = table; }

 private:
  Message on_bin_setup(const BinSetup& m);
  Message on_sample_notify(const SampleNotify& m);
  Message on_enc_grads(const EncGrads& m);
  Message on_hist_request(const HistRequest& m);

  std::mutex mailbox_;
  PartyTable table_;
  CryptoContext crypto_;
  int bin_count_ = kDefaultBinCount;
  std::optional<BinnedDataset> global_bins_;
  std::optional<BinnedDataset> layer_bins_;
  const BinnedDataset* current_bins_ = nullptr;

  // Passive side: the current layer's encrypted gradients, indexed by row.
  std::uint32_t grads_layer_ = 0;
  std::vector<Ciphertext> enc_g_;
  std::vector<Ciphertext> enc_h_;
  std::vector<std::uint8_t> has_grad_;
  std::map<TreeKey, std::vector<FeatureCode>> selected_;

  LookupTable lookups_;
};

struct TransportOptions {
  // Injected before each delivery.
  std::chrono::microseconds latency{0};
  // Deliver the decoded wire bytes instead of the in-memory object.
  bool through_wire = false;
  // Fault injection: may rewrite a reply before the requester sees it.
  std::function<void(const PartyId& replier, Message& reply)> tamper_reply;
};

class Federation {
 public:
  // tables[0] must be the active party. Passive parties get the public key only.
  Federation(std::vector<PartyTable> tables, const KeyPair& keys,
             FixedPointCodec codec = FixedPointCodec(), TransportOptions options = {});

  PartyContext& active() { return *parties_.front(); }
  const PartyContext& active() const { return *parties_.front(); }
  PartyContext& party(const PartyId& id);
  std::vector<PartyId> passive_ids() const;
  std::size_t party_count() const { return parties_.size(); }
  // Code -> owning party, as learned at alignment time.
  const std::map<FeatureCode, PartyId>& feature_owners() const { return owners_; }

  Transcript& transcript() { return transcript_; }

  // Delivers `message` and returns the receiver's reply. Throws AccessError
  // if the payload may not cross the boundary.
  Message send(const PartyId& from, const PartyId& to, const Message& message);

 private:
  std::vector<std::unique_ptr<PartyContext>> parties_;
  std::map<FeatureCode, PartyId> owners_;
  TransportOptions options_;
  Transcript transcript_;
  std::atomic<std::uint64_t> next_correlation_{1};
};

struct DeliveryReceipt {
  PartyId party;
  std::uint64_t rows = 0;
};

// Encrypts the layer's gradients for `rows` and ships them to every passive
// party. Caller must be the active party.
std::vector<DeliveryReceipt> broadcast_encrypted_grads(Federation& fed,
                                                       const PartyContext& caller,
                                                       std::uint32_t layer,
                                                       std::span<const RowIndex> rows,
                                                       bool rebin,
                                                       const FixedGrads& grads);

// Asks each listed passive party for encrypted per-bin sums over `rows` and
// decrypts them. Histograms come back in request order.
std::vector<FeatureHistogram> request_histograms(
    Federation& fed, const PartyContext& caller, TreeKey tree, std::uint32_t node,
    std::span<const RowIndex> rows,
    const std::map<PartyId, std::vector<FeatureCode>>& features);

// Routes `rows` through the owner's split behind `lookup`. Active-owned
// splits are evaluated locally without a message.
Partition notify_split_and_partition(Federation& fed, const PartyContext& caller,
                                     const PartyId& owner, LookupId lookup,
                                     std::span<const RowIndex> rows);

class FederatedCoordinator final : public Coordinator {
 public:
  explicit FederatedCoordinator(Federation& fed);

  std::size_t row_count() const override;
  std::vector<FeatureRef> features() const override;
  const std::vector<std::uint8_t>& labels() const override;
  const FixedPointCodec& codec() const override;

  void initialize_bins(std::span<const RowIndex> rows, int bin_count) override;
  void open_layer(std::uint32_t layer, std::span<const RowIndex> rows, bool rebin,
                  const FixedGrads& grads) override;
  void notify_samples(TreeKey tree, std::span<const RowIndex> rows,
                      std::span<const FeatureCode> features) override;
  std::vector<FeatureHistogram> histograms(TreeKey tree, std::uint32_t node,
                                           std::span<const RowIndex> rows,
                                           std::span<const FeatureCode> features) override;
  Partition apply_split(TreeKey tree, std::uint32_t node, const SplitCandidate& split,
                        LookupId lookup, std::span<const RowIndex> rows) override;
  Partition route(const SplitRecord& split, std::span<const RowIndex> rows) override;

  std::map<PartyId, LookupTable> export_lookup_tables() const override;
  void import_lookup_tables(const std::map<PartyId, LookupTable>& tables) override;

  Federation& federation() { return fed_; }

 private:
  Federation& fed_;
  FixedGrads grads_;
};

}  // namespace fedgbf
