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

// Additively homomorphic encryption of fixed-point gradient statistics.
//
// Two backends share one interface:
//   kMock      - the payload is the plaintext integer, readable only through
//                decrypt() with the matching private key. Exact and fast.
//   kPaillier  - textbook Paillier with g = n + 1 over GMP integers.
// Plaintexts are signed integers; negative values live in the upper half of
// Z_n (modular complement).

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include <gmpxx.h>

#include "fedgbf/types.h"

namespace fedgbf {

enum class CryptoBackend : std::uint8_t { kMock = 0, kPaillier = 1 };

std::string to_string(CryptoBackend backend);
CryptoBackend parse_backend(const std::string& name);

// Real <-> integer conversion with scale_bits of binary fraction.
class FixedPointCodec {
 public:
  static constexpr int kDefaultScaleBits = 40;
  static constexpr double kDefaultClamp = 1048576.0;  // 2^20

  explicit FixedPointCodec(int scale_bits = kDefaultScaleBits,
                           double clamp = kDefaultClamp);

  int scale_bits() const { return scale_bits_; }
  double clamp() const { return clamp_; }
  // Round-to-nearest after clamping to [-clamp, clamp].
  std::int64_t encode(double value) const;
  double decode(Fixed value) const;
  // 2^-scale_bits; rounding error per encoded value is at most half of it.
  double resolution() const;

 private:
  int scale_bits_;
  double clamp_;
};

struct PublicKey {
  CryptoBackend backend = CryptoBackend::kMock;
  std::uint64_t key_id = 0;
  int key_bits = 0;
  mpz_class n;
  mpz_class n_squared;
};

struct PrivateKey {
  std::uint64_t key_id = 0;
  mpz_class lambda;
  mpz_class mu;
};

struct KeyPair {
  std::shared_ptr<const PublicKey> public_key;
  std::shared_ptr<const PrivateKey> private_key;
};

// key_bits must be 512, 1024 or 2048 for either backend.
KeyPair keygen(CryptoBackend backend, int key_bits,
               std::optional<std::uint64_t> seed = std::nullopt);

class Ciphertext {
 public:
  Ciphertext() = default;

  CryptoBackend backend() const { return backend_; }
  std::uint64_t key_id() const { return key_id_; }
  // Residue for Paillier; unused by the mock backend.
  const mpz_class& residue() const { return residue_; }

  // Byte serialization for the wire layer.
  std::string to_bytes() const;
  static Ciphertext from_bytes(std::string_view bytes);

  bool operator==(const Ciphertext& other) const;

 private:
  friend Ciphertext encrypt(const PublicKey&, Fixed);
  friend Ciphertext encrypt_zero(const PublicKey&);
  friend void add_into(const PublicKey&, Ciphertext&, const Ciphertext&);
  friend Fixed decrypt(const PublicKey&, const PrivateKey&, const Ciphertext&);

  CryptoBackend backend_ = CryptoBackend::kMock;
  std::uint64_t key_id_ = 0;
  Fixed guarded_ = 0;
  mpz_class residue_;
};

Ciphertext encrypt(const PublicKey& pk, Fixed value);
// acc <- acc (+) c. Throws on key or backend mismatch.
void add_into(const PublicKey& pk, Ciphertext& acc, const Ciphertext& c);
Ciphertext add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b);
// The additive identity under pk (deterministic, no randomness).
Ciphertext encrypt_zero(const PublicKey& pk);
Fixed decrypt(const PublicKey& pk, const PrivateKey& sk, const Ciphertext& c);

// A party's view of the key material: every party can encrypt and add, only
// the holder of the private key can decrypt.
class CryptoContext {
 public:
  CryptoContext(std::shared_ptr<const PublicKey> pk,
                std::shared_ptr<const PrivateKey> sk,
                FixedPointCodec codec = FixedPointCodec());

  static CryptoContext from_keys(const KeyPair& keys,
                                 FixedPointCodec codec = FixedPointCodec()) {
    return CryptoContext(keys.public_key, keys.private_key, codec);
  }
  // Same public key, no private key.
  CryptoContext public_only() const {
    return CryptoContext(pk_, nullptr, codec_);
  }

  bool can_decrypt() const { return sk_ != nullptr; }
  const PublicKey& public_key() const { return *pk_; }
  const FixedPointCodec& codec() const { return codec_; }

  Ciphertext encrypt_fixed(Fixed value) const { return encrypt(*pk_, value); }
  Ciphertext encrypt_value(double value) const {
    return encrypt(*pk_, codec_.encode(value));
  }
  Ciphertext zero() const { return encrypt_zero(*pk_); }
  void add_into(Ciphertext& acc, const Ciphertext& c) const {
    fedgbf::add_into(*pk_, acc, c);
  }
  // Throws AccessError without the private key.
  Fixed decrypt_fixed(const Ciphertext& c) const;
  double decrypt_value(const Ciphertext& c) const {
    return codec_.decode(decrypt_fixed(c));
  }

 private:
  std::shared_ptr<const PublicKey> pk_;
  std::shared_ptr<const PrivateKey> sk_;
  FixedPointCodec codec_;
};

}  // namespace fedgbf
