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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "spinsim/gf2.hpp"
#include "spinsim/pauli_string.hpp"

namespace spinsim {

inline constexpr std::size_t kDataQubits = 9;

/// Per-generator outcomes, +1 or -1, in generator order.
struct Syndrome {
  std::vector<int> x_bits;
  std::vector<int> z_bits;

  bool trivial() const {
    for (int b : x_bits)
      if (b != 1) return false;
    for (int b : z_bits)
      if (b != 1) return false;
    return true;
  }
  friend bool operator==(const Syndrome&, const Syndrome&) = default;
};

/// Table key: generator 1 is the most significant bit and -1 maps to 1, so
/// keys enumerate rows in the order the lookup tables are printed.
inline std::size_t syndrome_key(const std::vector<int>& bits) {
  std::size_t key = 0;
  for (int b : bits) {
    if (b != 1 && b != -1) throw std::invalid_argument("syndrome bits must be +1 or -1");
    key = (key << 1) | (b == -1 ? 1U : 0U);
  }
  return key;
}

inline std::vector<int> syndrome_bits_from_key(std::size_t key, std::size_t length) {
  std::vector<int> bits(length);
  for (std::size_t i = 0; i < length; ++i) {
    bits[i] = ((key >> (length - 1 - i)) & 1U) ? -1 : 1;
  }
  return bits;
}

/// For a BS code, the surface-17 generator indices whose outcomes multiply to
/// each BS generator outcome.
struct GaugeParityMap {
  std::vector<std::vector<std::size_t>> x;
  std::vector<std::vector<std::size_t>> z;
};

struct CodeSpec {
  std::string name;
  std::size_t n_data = kDataQubits;
  std::vector<PauliString> x_stabilizers;
  std::vector<PauliString> z_stabilizers;
  PauliString logical_x;
  PauliString logical_z;
  /// Indexed by syndrome_key of the X-stabilizer outcomes; Z-type corrections.
  std::vector<PauliString> x_lookup;
  /// Indexed by syndrome_key of the Z-stabilizer outcomes; X-type corrections.
  std::vector<PauliString> z_lookup;
  std::optional<GaugeParityMap> gauge_parity_map;
  /// Weight-2 gauge operators (empty for subspace codes).
  std::vector<PauliString> gauge_generators;

  std::vector<PauliString> stabilizers() const {
    std::vector<PauliString> all = x_stabilizers;
    all.insert(all.end(), z_stabilizers.begin(), z_stabilizers.end());
    return all;
  }
};

namespace detail {

inline std::vector<PauliString> parse_all(std::initializer_list<std::string_view> items) {
  std::vector<PauliString> out;
  for (auto s : items) out.push_back(PauliString::from_sparse(kDataQubits, s));
  return out;
}

}  // namespace detail

/// Anticommutation pattern of `error` against the code generators.
inline Syndrome syndrome_of(const CodeSpec& code, const PauliString& error) {
  Syndrome s;
  for (const auto& g : code.x_stabilizers) s.x_bits.push_back(g.commutes_with(error) ? 1 : -1);
  for (const auto& g : code.z_stabilizers) s.z_bits.push_back(g.commutes_with(error) ? 1 : -1);
  return s;
}

/// Distance-3 rotated surface code on a 3x3 data grid numbered row-major.
inline CodeSpec surface17_spec() {
  CodeSpec c;
  c.name = "surface17";
  c.x_stabilizers = detail::parse_all({"X1X2", "X0X1X3X4", "X4X5X7X8", "X6X7"});
  c.z_stabilizers = detail::parse_all({"Z0Z3", "Z1Z2Z4Z5", "Z3Z4Z6Z7", "Z5Z8"});
  c.logical_x = PauliString::from_sparse(kDataQubits, "X0X3X6");
  c.logical_z = PauliString::from_sparse(kDataQubits, "Z0Z1Z2");
  // Rows in key order: (S1 S2 S3 S4) = (+,+,+,+), (+,+,+,-), ...
  c.x_lookup = detail::parse_all({"I", "Z6", "Z5", "Z7", "Z0", "Z3Z6", "Z4", "Z4Z6", "Z2", "Z2Z6",
                                  "Z2Z5", "Z2Z7", "Z1", "Z1Z6", "Z2Z4", "Z1Z7"});
  c.z_lookup = detail::parse_all({"I", "X8", "X6", "X7X8", "X1", "X5", "X4", "X4X8", "X0", "X0X8",
                                  "X3", "X3X8", "X0X1", "X0X5", "X0X4", "X3X5"});
  return c;
}

/// Distance-3 Bacon-Shor code. X stabilizers are pairs of adjacent columns,
/// Z stabilizers pairs of adjacent rows.
inline CodeSpec bs17_spec() {
  CodeSpec c;
  c.name = "bs17";
  c.x_stabilizers = detail::parse_all({"X0X1X3X4X6X7", "X1X2X4X5X7X8"});
  c.z_stabilizers = detail::parse_all({"Z0Z3Z1Z4Z2Z5", "Z3Z6Z4Z7Z5Z8"});
  c.logical_x = PauliString::from_sparse(kDataQubits, "X0X3X6");
  c.logical_z = PauliString::from_sparse(kDataQubits, "Z0Z1Z2");
  c.x_lookup = detail::parse_all({"I", "Z2", "Z0", "Z1"});
  c.z_lookup = detail::parse_all({"I", "X6", "X0", "X3"});

  // X gauge operators pair horizontal neighbours, Z gauge operators vertical
  // ones; both commute with every BS stabilizer.
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t col = 0; col + 1 < 3; ++col) {
      c.gauge_generators.push_back(
          PauliString::on(kDataQubits, Pauli::X, {3 * r + col, 3 * r + col + 1}));
    }
  }
  for (std::size_t r = 0; r + 1 < 3; ++r) {
    for (std::size_t col = 0; col < 3; ++col) {
      c.gauge_generators.push_back(
          PauliString::on(kDataQubits, Pauli::Z, {3 * r + col, 3 * (r + 1) + col}));
    }
  }

  const CodeSpec surface = surface17_spec();
  auto decompose = [](const std::vector<PauliString>& basis, const PauliString& target) {
    std::vector<gf2::BitVec> vs;
    for (const auto& b : basis) vs.push_back(gf2::symplectic(b));
    auto sol = gf2::solve(vs, gf2::symplectic(target));
    if (!sol) {
      throw std::logic_error("BS generator " + target.sparse() +
                             " is not a product of surface-17 generators");
    }
    return *sol;
  };
  GaugeParityMap map;
  for (const auto& g : c.x_stabilizers) map.x.push_back(decompose(surface.x_stabilizers, g));
  for (const auto& g : c.z_stabilizers) map.z.push_back(decompose(surface.z_stabilizers, g));
  c.gauge_parity_map = std::move(map);
  return c;
}

inline CodeSpec code_by_name(std::string_view name) {
  if (name == "surface17") return surface17_spec();
  if (name == "bs17") return bs17_spec();
  throw std::invalid_argument("unknown code '" + std::string(name) + "'");
}

/// Lookup-table decoding; X and Z parts are corrected independently.
inline PauliString decode(const CodeSpec& code, const Syndrome& syndrome) {
  if (syndrome.x_bits.size() != code.x_stabilizers.size() ||
      syndrome.z_bits.size() != code.z_stabilizers.size()) {
    throw std::invalid_argument("syndrome length does not match " + code.name);
  }
  PauliString correction = code.x_lookup.at(syndrome_key(syndrome.x_bits));
  correction.mul_ignoring_phase(code.z_lookup.at(syndrome_key(syndrome.z_bits)));
  return correction;
}

/// Combines surface-17 check outcomes into BS-17 stabilizer outcomes.
inline Syndrome bs_syndrome_from_surface(const CodeSpec& bs, const Syndrome& surface) {
  if (!bs.gauge_parity_map) throw std::invalid_argument(bs.name + " has no gauge parity map");
  if (surface.x_bits.size() != 4 || surface.z_bits.size() != 4) {
    throw std::invalid_argument("surface syndrome must have 4 + 4 outcomes");
  }
  Syndrome out;
  for (const auto& members : bs.gauge_parity_map->x) {
    int v = 1;
    for (std::size_t i : members) v *= surface.x_bits[i];
    out.x_bits.push_back(v);
  }
  for (const auto& members : bs.gauge_parity_map->z) {
    int v = 1;
    for (std::size_t i : members) v *= surface.z_bits[i];
    out.z_bits.push_back(v);
  }
  return out;
}

/// True when `residual` acts trivially on the logical qubit: it lies in the
/// stabilizer group, or for subsystem codes in the gauge group.
inline bool is_trivial_residual(const CodeSpec& code, const PauliString& residual) {
  std::vector<PauliString> group = code.stabilizers();
  group.insert(group.end(), code.gauge_generators.begin(), code.gauge_generators.end());
  return gf2::in_span(group, residual);
}

/// Human-readable dump of generators, logicals and lookup tables.
inline std::string dump(const CodeSpec& code) {
  std::ostringstream out;
  out << "code " << code.name << "\n";
  for (std::size_t i = 0; i < code.x_stabilizers.size(); ++i) {
    out << "SX" << (i + 1) << " " << code.x_stabilizers[i].sparse() << "\n";
  }
  for (std::size_t i = 0; i < code.z_stabilizers.size(); ++i) {
    out << "SZ" << (i + 1) << " " << code.z_stabilizers[i].sparse() << "\n";
  }
  out << "XL " << code.logical_x.sparse() << "\n";
  out << "ZL " << code.logical_z.sparse() << "\n";
  auto table = [&](const char* label, const std::vector<PauliString>& rows, std::size_t len) {
    for (std::size_t key = 0; key < rows.size(); ++key) {
      out << label;
      for (int b : syndrome_bits_from_key(key, len)) out << (b > 0 ? " +1" : " -1");
      out << " -> " << rows[key].sparse() << "\n";
    }
  };
  table("XLUT", code.x_lookup, code.x_stabilizers.size());
  table("ZLUT", code.z_lookup, code.z_stabilizers.size());
  if (code.gauge_parity_map) {
    auto members = [&](const char* label, const std::vector<std::vector<std::size_t>>& m) {
      for (std::size_t i = 0; i < m.size(); ++i) {
        out << label << (i + 1) << " =";
        for (std::size_t s : m[i]) out << " S" << (s + 1);
        out << "\n";
      }
    };
    members("PARITY_X", code.gauge_parity_map->x);
    members("PARITY_Z", code.gauge_parity_map->z);
  }
  return out.str();
}

}  // namespace spinsim
