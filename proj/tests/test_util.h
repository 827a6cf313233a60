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

#include <numeric>
#include <vector>

#include "fedgbf/dataset.h"

namespace fedgbf::testing {

// Synthetic table split vertically into `plan` and aligned.
inline std::vector<PartyTable> synthetic_parties(std::size_t rows, std::vector<int> plan,
                                                 std::uint64_t seed = 7) {
  SyntheticSpec spec;
  spec.rows = rows;
  spec.features = static_cast<std::size_t>(std::accumulate(plan.begin(), plan.end(), 0));
  spec.seed = seed;
  std::vector<PartyTable> parties = partition_vertically(synthetic_table(spec), plan);
  align_ids(parties);
  return parties;
}

inline RowList all_rows(std::size_t n) {
  RowList rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

}  // namespace fedgbf::testing
