// Copyright 2026 The qec-spinsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "spinsim/pauli_string.hpp"

namespace spinsim::gf2 {

using BitVec = std::vector<std::uint64_t>;

/// Symplectic vector (x | z) of a Pauli, ignoring its sign.
inline BitVec symplectic(const PauliString& p) {
  BitVec v(p.x_words().begin(), p.x_words().end());
  v.insert(v.end(), p.z_words().begin(), p.z_words().end());
  return v;
}

/// Finds a subset of `generators` whose XOR equals `target`. Returns the
/// selected indices, or nullopt when target is outside their span.
inline std::optional<std::vector<std::size_t>> solve(const std::vector<BitVec>& generators,
                                                     const BitVec& target) {
  const std::size_t m = generators.size();
  const std::size_t words = target.size();
  const std::size_t tag_words = (m + 63) / 64;
  // Each working row carries the vector plus a tag recording which
  // generators were combined into it.
  struct Row {
    BitVec v;
    BitVec tag;
  };
  std::vector<Row> rows;
  rows.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    Row r{generators[i], BitVec(tag_words, 0)};
    r.tag[i >> 6] |= std::uint64_t{1} << (i & 63);
    rows.push_back(std::move(r));
  }
  std::vector<std::size_t> pivot_cols;
  std::size_t rank = 0;
  for (std::size_t col = 0; col < words * 64 && rank < rows.size(); ++col) {
    const std::uint64_t bit = std::uint64_t{1} << (col & 63);
    std::size_t sel = rank;
    while (sel < rows.size() && !(rows[sel].v[col >> 6] & bit)) ++sel;
    if (sel == rows.size()) continue;
    std::swap(rows[sel], rows[rank]);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (r != rank && (rows[r].v[col >> 6] & bit)) {
        for (std::size_t w = 0; w < words; ++w) rows[r].v[w] ^= rows[rank].v[w];
        for (std::size_t w = 0; w < tag_words; ++w) rows[r].tag[w] ^= rows[rank].tag[w];
      }
    }
    pivot_cols.push_back(col);
    ++rank;
  }
  BitVec residual = target;
  BitVec tag(tag_words, 0);
  for (std::size_t r = 0; r < rank; ++r) {
    const std::size_t col = pivot_cols[r];
    if (residual[col >> 6] & (std::uint64_t{1} << (col & 63))) {
      for (std::size_t w = 0; w < words; ++w) residual[w] ^= rows[r].v[w];
      for (std::size_t w = 0; w < tag_words; ++w) tag[w] ^= rows[r].tag[w];
    }
  }
  for (std::uint64_t w : residual) {
    if (w) return std::nullopt;
  }
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < m; ++i) {
    if (tag[i >> 6] & (std::uint64_t{1} << (i & 63))) chosen.push_back(i);
  }
  return chosen;
}

/// True when `p` (up to sign) lies in the group generated by `generators`.
inline bool in_span(const std::vector<PauliString>& generators, const PauliString& p) {
  std::vector<BitVec> vs;
  vs.reserve(generators.size());
  for (const auto& g : generators) vs.push_back(symplectic(g));
  return solve(vs, symplectic(p)).has_value();
}

}  // namespace spinsim::gf2
