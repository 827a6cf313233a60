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

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fedgbf {

// Position of a sample in the aligned (intersected) index shared by all parties.
using RowIndex = std::uint32_t;
// Opaque feature handle; the owner alone maps it to a column name.
using FeatureCode = std::int32_t;
using LookupId = std::uint64_t;
// Fixed-point integer as produced by FixedPointCodec; sums stay exact.
using Fixed = __int128;

using RowList = std::vector<RowIndex>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using BinMatrix = Matrix<std::uint16_t>;

enum class Role : std::uint8_t { kActive = 0, kPassive = 1 };

struct PartyId {
  std::uint32_t index = 0;
  Role role = Role::kActive;

  bool is_active() const { return role == Role::kActive; }
  auto operator<=>(const PartyId&) const = default;
  // "A0", "P1", ...
  std::string str() const;
  static PartyId parse(const std::string& text);
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parse failures and bad input files.
class DataError : public Error {
 public:
  using Error::Error;
};

// An operation was invoked from a party context that may not perform it.
class AccessError : public Error {
 public:
  using Error::Error;
};

// A message violated the protocol (unknown ids, unrequested content, ...).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace fedgbf
