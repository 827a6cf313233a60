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

#include "fedgbf/crypto.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

namespace fedgbf {

std::string to_string(CryptoBackend backend) {
  return backend == CryptoBackend::kMock ? "mock" : "paillier";
}

CryptoBackend parse_backend(const std::string& name) {
  if (name == "mock") return CryptoBackend::kMock;
  if (name == "paillier") return CryptoBackend::kPaillier;
  throw Error("unknown crypto backend '" + name + "'");
}

FixedPointCodec::FixedPointCodec(int scale_bits, double clamp)
    : scale_bits_(scale_bits), clamp_(clamp) {
  if (scale_bits < 1 || scale_bits > 52) {
    throw Error("fixed-point scale_bits must be in [1, 52]");
  }
  if (!(clamp > 0.0) || std::ldexp(clamp, scale_bits) >= 0x1p62) {
    throw Error("fixed-point clamp does not fit 62 bits at this scale");
  }
}

std::int64_t FixedPointCodec::encode(double value) const {
  if (std::isnan(value)) throw Error("cannot encode NaN");
  const double v = std::clamp(value, -clamp_, clamp_);
  return std::llround(std::ldexp(v, scale_bits_));
}

double FixedPointCodec::decode(Fixed value) const {
  // Split off the integer part so large sums keep their fractional bits.
  const Fixed unit = Fixed(1) << scale_bits_;
  const Fixed whole = value / unit;
  const Fixed frac = value - whole * unit;
  return static_cast<double>(whole) +
         std::ldexp(static_cast<double>(static_cast<std::int64_t>(frac)),
                    -scale_bits_);
}

double FixedPointCodec::resolution() const { return std::ldexp(1.0, -scale_bits_); }

namespace {

mpz_class to_mpz(Fixed v) {
  const bool negative = v < 0;
  unsigned __int128 mag = negative ? static_cast<unsigned __int128>(-(v + 1)) + 1
                                   : static_cast<unsigned __int128>(v);
  mpz_class hi(static_cast<unsigned long>(mag >> 64));
  mpz_class lo(static_cast<unsigned long>(mag & 0xffffffffffffffffull));
  mpz_class out = (hi << 64) + lo;
  return negative ? mpz_class(-out) : out;
}

Fixed to_fixed(const mpz_class& v) {
  if (mpz_sizeinbase(v.get_mpz_t(), 2) > 126) {
    throw Error("decrypted value exceeds the fixed-point range");
  }
  mpz_class mag = abs(v);
  mpz_class lo = mag & mpz_class("0xffffffffffffffff");
  mpz_class hi = mag >> 64;
  const unsigned __int128 u =
      (static_cast<unsigned __int128>(hi.get_ui()) << 64) | lo.get_ui();
  return sgn(v) < 0 ? -static_cast<Fixed>(u) : static_cast<Fixed>(u);
}

gmp_randclass& thread_rng() {
  thread_local gmp_randclass rng(gmp_randinit_default);
  thread_local bool seeded = false;
  if (!seeded) {
    std::random_device rd;
    rng.seed((static_cast<unsigned long>(rd()) << 32) ^ rd());
    seeded = true;
  }
  return rng;
}

mpz_class random_prime(gmp_randclass& rng, int bits) {
  mpz_class candidate = rng.get_z_bits(bits);
  mpz_setbit(candidate.get_mpz_t(), static_cast<mp_bitcnt_t>(bits - 1));
  mpz_setbit(candidate.get_mpz_t(), static_cast<mp_bitcnt_t>(bits - 2));
  mpz_class prime;
  mpz_nextprime(prime.get_mpz_t(), candidate.get_mpz_t());
  return prime;
}

void check_same_key(const PublicKey& pk, const Ciphertext& c) {
  if (c.key_id() != pk.key_id || c.backend() != pk.backend) {
    throw Error("ciphertext was produced under a different key");
  }
}

}  // namespace

KeyPair keygen(CryptoBackend backend, int key_bits,
               std::optional<std::uint64_t> seed) {
  if (key_bits != 512 && key_bits != 1024 && key_bits != 2048) {
    throw Error("unsupported key size " + std::to_string(key_bits) +
                " (expected 512, 1024 or 2048)");
  }
  std::mt19937_64 id_rng(seed.value_or(std::random_device{}()));
  auto pk = std::make_shared<PublicKey>();
  auto sk = std::make_shared<PrivateKey>();
  pk->backend = backend;
  pk->key_bits = key_bits;
  pk->key_id = id_rng() | 1u;
  sk->key_id = pk->key_id;
  if (backend == CryptoBackend::kMock) return {pk, sk};

  gmp_randclass rng(gmp_randinit_default);
  rng.seed(static_cast<unsigned long>(id_rng()));
  const int half = key_bits / 2;
  mpz_class p, q, n;
  do {
    p = random_prime(rng, half);
    q = random_prime(rng, half);
    n = p * q;
  } while (p == q || mpz_sizeinbase(n.get_mpz_t(), 2) != static_cast<size_t>(key_bits));
  const mpz_class p1 = p - 1, q1 = q - 1;
  mpz_class g;
  mpz_gcd(g.get_mpz_t(), n.get_mpz_t(), mpz_class(p1 * q1).get_mpz_t());
  if (g != 1) throw Error("degenerate Paillier primes");
  mpz_lcm(sk->lambda.get_mpz_t(), p1.get_mpz_t(), q1.get_mpz_t());
  // With g = n + 1, L(g^lambda mod n^2) = lambda mod n.
  if (mpz_invert(sk->mu.get_mpz_t(), sk->lambda.get_mpz_t(), n.get_mpz_t()) == 0) {
    throw Error("lambda not invertible mod n");
  }
  pk->n = n;
  pk->n_squared = n * n;
  return {pk, sk};
}

Ciphertext encrypt(const PublicKey& pk, Fixed value) {
  Ciphertext c;
  c.backend_ = pk.backend;
  c.key_id_ = pk.key_id;
  if (pk.backend == CryptoBackend::kMock) {
    c.guarded_ = value;
    return c;
  }
  mpz_class m = to_mpz(value) % pk.n;
  if (sgn(m) < 0) m += pk.n;
  mpz_class r;
  do {
    r = thread_rng().get_z_range(pk.n);
  } while (r == 0);
  mpz_class rn;
  mpz_powm(rn.get_mpz_t(), r.get_mpz_t(), pk.n.get_mpz_t(), pk.n_squared.get_mpz_t());
  c.residue_ = (1 + m * pk.n) % pk.n_squared;
  c.residue_ = (c.residue_ * rn) % pk.n_squared;
  return c;
}

Ciphertext encrypt_zero(const PublicKey& pk) {
  Ciphertext c;
  c.backend_ = pk.backend;
  c.key_id_ = pk.key_id;
  // Enc(0) with randomizer 1 is the residue 1.
  if (pk.backend == CryptoBackend::kPaillier) c.residue_ = 1;
  return c;
}

void add_into(const PublicKey& pk, Ciphertext& acc, const Ciphertext& c) {
  check_same_key(pk, acc);
  check_same_key(pk, c);
  if (pk.backend == CryptoBackend::kMock) {
    acc.guarded_ += c.guarded_;
    return;
  }
  acc.residue_ *= c.residue_;
  mpz_mod(acc.residue_.get_mpz_t(), acc.residue_.get_mpz_t(),
          pk.n_squared.get_mpz_t());
}

Ciphertext add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
  Ciphertext out = a;
  add_into(pk, out, b);
  return out;
}

Fixed decrypt(const PublicKey& pk, const PrivateKey& sk, const Ciphertext& c) {
  if (sk.key_id != pk.key_id) throw Error("private key does not match public key");
  check_same_key(pk, c);
  if (pk.backend == CryptoBackend::kMock) return c.guarded_;
  mpz_class u;
  mpz_powm(u.get_mpz_t(), c.residue_.get_mpz_t(), sk.lambda.get_mpz_t(),
           pk.n_squared.get_mpz_t());
  mpz_class m = ((u - 1) / pk.n) * sk.mu % pk.n;
  if (m > pk.n / 2) m -= pk.n;
  return to_fixed(m);
}

std::string Ciphertext::to_bytes() const {
  std::string out;
  out.push_back(static_cast<char>(backend_));
  out.append(reinterpret_cast<const char*>(&key_id_), sizeof(key_id_));
  if (backend_ == CryptoBackend::kMock) {
    out.append(reinterpret_cast<const char*>(&guarded_), sizeof(guarded_));
  } else {
    std::size_t count = 0;
    void* raw = mpz_export(nullptr, &count, 1, 1, 1, 0, residue_.get_mpz_t());
    out.append(static_cast<const char*>(raw), count);
    void (*freefunc)(void*, size_t);
    mp_get_memory_functions(nullptr, nullptr, &freefunc);
    freefunc(raw, count);
  }
  return out;
}

Ciphertext Ciphertext::from_bytes(std::string_view bytes) {
  if (bytes.size() < 1 + sizeof(std::uint64_t)) throw Error("truncated ciphertext");
  Ciphertext c;
  c.backend_ = static_cast<CryptoBackend>(bytes[0]);
  std::memcpy(&c.key_id_, bytes.data() + 1, sizeof(c.key_id_));
  const std::string_view payload = bytes.substr(1 + sizeof(std::uint64_t));
  if (c.backend_ == CryptoBackend::kMock) {
    if (payload.size() != sizeof(Fixed)) throw Error("bad mock ciphertext size");
    std::memcpy(&c.guarded_, payload.data(), sizeof(Fixed));
  } else if (c.backend_ == CryptoBackend::kPaillier) {
    mpz_import(c.residue_.get_mpz_t(), payload.size(), 1, 1, 1, 0, payload.data());
  } else {
    throw Error("unknown ciphertext backend tag");
  }
  return c;
}

bool Ciphertext::operator==(const Ciphertext& other) const {
  return backend_ == other.backend_ && key_id_ == other.key_id_ &&
         guarded_ == other.guarded_ && residue_ == other.residue_;
}

CryptoContext::CryptoContext(std::shared_ptr<const PublicKey> pk,
                             std::shared_ptr<const PrivateKey> sk,
                             FixedPointCodec codec)
    : pk_(std::move(pk)), sk_(std::move(sk)), codec_(codec) {
  if (!pk_) throw Error("crypto context needs a public key");
}

Fixed CryptoContext::decrypt_fixed(const Ciphertext& c) const {
  if (!sk_) throw AccessError("decryption requires the private key");
  return decrypt(*pk_, *sk_, c);
}

}  // namespace fedgbf
