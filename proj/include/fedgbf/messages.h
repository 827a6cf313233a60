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

#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "fedgbf/crypto.h"
#include "fedgbf/tree.h"

namespace fedgbf {

// Training rows every party bins on, plus the bin budget L.
struct BinSetup {
  RowList rows;
  std::int32_t bin_count = kDefaultBinCount;
  bool operator==(const BinSetup&) const = default;
};

// Rows and the receiver's own selected features for one tree.
struct SampleNotify {
  TreeKey tree;
  RowList rows;
  std::vector<FeatureCode> features;
  bool operator==(const SampleNotify&) const = default;
};

// Encrypted gradients of one layer, aligned with `rows`.
struct EncGrads {
  std::uint32_t layer = 0;
  bool rebin = false;
  RowList rows;
  std::vector<Ciphertext> g;
  std::vector<Ciphertext> h;
  bool operator==(const EncGrads&) const = default;
};

struct HistRequest {
  TreeKey tree;
  std::uint32_t node = 0;
  RowList rows;
  std::vector<FeatureCode> features;
  bool operator==(const HistRequest&) const = default;
};

struct EncryptedHistogram {
  FeatureCode feature_code = 0;
  std::vector<Ciphertext> g;
  std::vector<Ciphertext> h;
  std::vector<Ciphertext> count;
  bool operator==(const EncryptedHistogram&) const = default;
};

struct HistResponse {
  TreeKey tree;
  std::uint32_t node = 0;
  std::vector<EncryptedHistogram> histograms;
  bool operator==(const HistResponse&) const = default;
};

// Asks the owner to record a split under `lookup` and partition `rows`.
struct SplitNotify {
  LookupId lookup = 0;
  FeatureCode feature = 0;
  std::uint16_t bin = 0;
  bool missing_left = true;
  RowList rows;
  bool operator==(const SplitNotify&) const = default;
};

// Routes rows through an existing split (inference).
struct PartitionRequest {
  LookupId lookup = 0;
  RowList rows;
  bool operator==(const PartitionRequest&) const = default;
};

struct PartitionResponse {
  LookupId lookup = 0;
  RowList left;
  RowList right;
  bool operator==(const PartitionResponse&) const = default;
};

struct Ack {
  bool operator==(const Ack&) const = default;
};

using Message = std::variant<BinSetup, SampleNotify, EncGrads, HistRequest,
                             HistResponse, SplitNotify, PartitionRequest,
                             PartitionResponse, Ack>;

enum class MessageType : std::uint8_t {
  kBinSetup = 0,
  kSampleNotify,
  kEncGrads,
  kHistRequest,
  kHistResponse,
  kSplitNotify,
  kPartitionRequest,
  kPartitionResponse,
  kAck,
};

MessageType type_of(const Message& m);
std::string to_string(MessageType type);
MessageType parse_message_type(const std::string& name);

// Categories of information a payload carries across a party boundary.
enum class Disclosure : std::uint8_t {
  kRowIds,
  kFeatureCodes,
  kBinIndex,
  kLookupIds,
  kCiphertexts,
  kControl,
  // Never allowed to cross a boundary.
  kLabels,
  kPlainGradients,
  kRawFeatures,
  kThresholds,
};

std::string to_string(Disclosure d);
Disclosure parse_disclosure(const std::string& name);
bool is_forbidden(Disclosure d);

std::vector<Disclosure> disclosures_of(const Message& m);

// Length-prefixed, versioned byte encoding:
//   "FGBF" | version u8 | type u8 | payload length u32 | payload
std::string encode_message(const Message& m);
Message decode_message(std::string_view bytes);

inline constexpr std::uint8_t kWireVersion = 1;

}  // namespace fedgbf
