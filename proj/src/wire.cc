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

#include <array>
#include <cstring>

#include "fedgbf/messages.h"

namespace fedgbf {

namespace {

constexpr std::array<const char*, 9> kTypeNames = {
    "BinSetup",   "SampleNotify",     "EncGrads",          "HistRequest", "HistResponse",
    "SplitNotify", "PartitionRequest", "PartitionResponse", "Ack"};

constexpr std::array<const char*, 10> kDisclosureNames = {
    "row_ids",     "feature_codes", "bin_index",      "lookup_ids",   "ciphertexts",
    "control",     "labels",        "plain_gradients", "raw_features", "thresholds"};

class Writer {
 public:
  template <typename T>
  void pod(T v) {
    out_.append(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void bytes(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  template <typename T>
  void pods(const std::vector<T>& v) {
    pod(static_cast<std::uint32_t>(v.size()));
    out_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(T));
  }
  void ciphertexts(const std::vector<Ciphertext>& v) {
    pod(static_cast<std::uint32_t>(v.size()));
    for (const Ciphertext& c : v) bytes(c.to_bytes());
  }
  void key(TreeKey k) {
    pod(k.layer);
    pod(k.index);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string_view bytes() {
    const auto n = pod<std::uint32_t>();
    need(n);
    std::string_view s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename T>
  std::vector<T> pods() {
    const auto n = pod<std::uint32_t>();
    need(static_cast<std::size_t>(n) * sizeof(T));
    std::vector<T> v(n);
    std::memcpy(v.data(), in_.data() + pos_, n * sizeof(T));
    pos_ += n * sizeof(T);
    return v;
  }
  std::vector<Ciphertext> ciphertexts() {
    const auto n = pod<std::uint32_t>();
    std::vector<Ciphertext> v;
    v.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) v.push_back(Ciphertext::from_bytes(bytes()));
    return v;
  }
  TreeKey key() {
    TreeKey k;
    k.layer = pod<std::uint32_t>();
    k.index = pod<std::uint32_t>();
    return k;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw ProtocolError("truncated message");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

struct EncodeVisitor {
  Writer& w;
  void operator()(const BinSetup& m) {
    w.pods(m.rows);
    w.pod(m.bin_count);
  }
  void operator()(const SampleNotify& m) {
    w.key(m.tree);
    w.pods(m.rows);
    w.pods(m.features);
  }
  void operator()(const EncGrads& m) {
    w.pod(m.layer);
    w.pod(static_cast<std::uint8_t>(m.rebin));
    w.pods(m.rows);
    w.ciphertexts(m.g);
    w.ciphertexts(m.h);
  }
  void operator()(const HistRequest& m) {
    w.key(m.tree);
    w.pod(m.node);
    w.pods(m.rows);
    w.pods(m.features);
  }
  void operator()(const HistResponse& m) {
    w.key(m.tree);
    w.pod(m.node);
    w.pod(static_cast<std::uint32_t>(m.histograms.size()));
    for (const EncryptedHistogram& h : m.histograms) {
      w.pod(h.feature_code);
      w.ciphertexts(h.g);
      w.ciphertexts(h.h);
      w.ciphertexts(h.count);
    }
  }
  void operator()(const SplitNotify& m) {
    w.pod(m.lookup);
    w.pod(m.feature);
    w.pod(m.bin);
    w.pod(static_cast<std::uint8_t>(m.missing_left));
    w.pods(m.rows);
  }
  void operator()(const PartitionRequest& m) {
    w.pod(m.lookup);
    w.pods(m.rows);
  }
  void operator()(const PartitionResponse& m) {
    w.pod(m.lookup);
    w.pods(m.left);
    w.pods(m.right);
  }
  void operator()(const Ack&) {}
};

Message decode_payload(MessageType type, Reader& r) {
  switch (type) {
    case MessageType::kBinSetup: {
      BinSetup m;
      m.rows = r.pods<RowIndex>();
      m.bin_count = r.pod<std::int32_t>();
      return m;
    }
    case MessageType::kSampleNotify: {
      SampleNotify m;
      m.tree = r.key();
      m.rows = r.pods<RowIndex>();
      m.features = r.pods<FeatureCode>();
      return m;
    }
    case MessageType::kEncGrads: {
      EncGrads m;
      m.layer = r.pod<std::uint32_t>();
      m.rebin = r.pod<std::uint8_t>() != 0;
      m.rows = r.pods<RowIndex>();
      m.g = r.ciphertexts();
      m.h = r.ciphertexts();
      return m;
    }
    case MessageType::kHistRequest: {
      HistRequest m;
      m.tree = r.key();
      m.node = r.pod<std::uint32_t>();
      m.rows = r.pods<RowIndex>();
      m.features = r.pods<FeatureCode>();
      return m;
    }
    case MessageType::kHistResponse: {
      HistResponse m;
      m.tree = r.key();
      m.node = r.pod<std::uint32_t>();
      const auto n = r.pod<std::uint32_t>();
      for (std::uint32_t i = 0; i < n; ++i) {
        EncryptedHistogram h;
        h.feature_code = r.pod<FeatureCode>();
        h.g = r.ciphertexts();
        h.h = r.ciphertexts();
        h.count = r.ciphertexts();
        m.histograms.push_back(std::move(h));
      }
      return m;
    }
    case MessageType::kSplitNotify: {
      SplitNotify m;
      m.lookup = r.pod<LookupId>();
      m.feature = r.pod<FeatureCode>();
      m.bin = r.pod<std::uint16_t>();
      m.missing_left = r.pod<std::uint8_t>() != 0;
      m.rows = r.pods<RowIndex>();
      return m;
    }
    case MessageType::kPartitionRequest: {
      PartitionRequest m;
      m.lookup = r.pod<LookupId>();
      m.rows = r.pods<RowIndex>();
      return m;
    }
    case MessageType::kPartitionResponse: {
      PartitionResponse m;
      m.lookup = r.pod<LookupId>();
      m.left = r.pods<RowIndex>();
      m.right = r.pods<RowIndex>();
      return m;
    }
    case MessageType::kAck:
      return Ack{};
  }
  throw ProtocolError("unknown message type");
}

}  // namespace

MessageType type_of(const Message& m) { return static_cast<MessageType>(m.index()); }

std::string to_string(MessageType type) {
  return kTypeNames.at(static_cast<std::size_t>(type));
}

MessageType parse_message_type(const std::string& name) {
  for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
    if (name == kTypeNames[i]) return static_cast<MessageType>(i);
  }
  throw Error("unknown message type '" + name + "'");
}

std::string to_string(Disclosure d) {
  return kDisclosureNames.at(static_cast<std::size_t>(d));
}

Disclosure parse_disclosure(const std::string& name) {
  for (std::size_t i = 0; i < kDisclosureNames.size(); ++i) {
    if (name == kDisclosureNames[i]) return static_cast<Disclosure>(i);
  }
  throw Error("unknown disclosure '" + name + "'");
}

bool is_forbidden(Disclosure d) {
  return d == Disclosure::kLabels || d == Disclosure::kPlainGradients ||
         d == Disclosure::kRawFeatures || d == Disclosure::kThresholds;
}

std::vector<Disclosure> disclosures_of(const Message& m) {
  using D = Disclosure;
  switch (type_of(m)) {
    case MessageType::kBinSetup:
      return {D::kRowIds, D::kControl};
    case MessageType::kSampleNotify:
      return {D::kRowIds, D::kFeatureCodes};
    case MessageType::kEncGrads:
      return {D::kRowIds, D::kCiphertexts};
    case MessageType::kHistRequest:
      return {D::kRowIds, D::kFeatureCodes};
    case MessageType::kHistResponse:
      return {D::kFeatureCodes, D::kCiphertexts};
    case MessageType::kSplitNotify:
      return {D::kLookupIds, D::kFeatureCodes, D::kBinIndex, D::kRowIds};
    case MessageType::kPartitionRequest:
      return {D::kLookupIds, D::kRowIds};
    case MessageType::kPartitionResponse:
      return {D::kLookupIds, D::kRowIds};
    case MessageType::kAck:
      return {D::kControl};
  }
  return {};
}

std::string encode_message(const Message& m) {
  Writer payload;
  std::visit(EncodeVisitor{payload}, m);
  const std::string body = payload.take();
  Writer frame;
  std::string out = "FGBF";
  frame.pod(kWireVersion);
  frame.pod(static_cast<std::uint8_t>(type_of(m)));
  frame.pod(static_cast<std::uint32_t>(body.size()));
  out += frame.take();
  out += body;
  return out;
}

Message decode_message(std::string_view bytes) {
  if (bytes.size() < 10 || bytes.substr(0, 4) != "FGBF") {
    throw ProtocolError("not a wire message");
  }
  Reader header(bytes.substr(4, 6));
  const auto version = header.pod<std::uint8_t>();
  if (version != kWireVersion) {
    throw ProtocolError("unsupported wire version " + std::to_string(version));
  }
  const auto type = header.pod<std::uint8_t>();
  if (type >= kTypeNames.size()) throw ProtocolError("unknown message type");
  const auto length = header.pod<std::uint32_t>();
  if (bytes.size() != 10 + static_cast<std::size_t>(length)) {
    throw ProtocolError("message length mismatch");
  }
  Reader r(bytes.substr(10));
  Message m = decode_payload(static_cast<MessageType>(type), r);
  if (!r.done()) throw ProtocolError("trailing bytes in message");
  return m;
}

}  // namespace fedgbf
