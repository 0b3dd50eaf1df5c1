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
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spinsim {

enum class Encoding : std::uint8_t { AllLD, Hybrid };
enum class QubitType : std::uint8_t { LD, ST };
enum class QubitRole : std::uint8_t { Data, Ancilla };

inline std::string_view to_string(Encoding e) { return e == Encoding::AllLD ? "all-LD" : "hybrid"; }

inline Encoding parse_encoding(std::string_view s) {
  if (s == "all-LD" || s == "all-ld" || s == "allld" || s == "ld") return Encoding::AllLD;
  if (s == "hybrid") return Encoding::Hybrid;
  throw std::invalid_argument("unknown encoding '" + std::string(s) + "'");
}

enum class OpKind : std::uint8_t { PrepZ, MeasureZ, RYPlus, RYMinus, CZ };

struct Gate {
  OpKind kind;
  std::uint16_t a;
  std::uint16_t b = 0;  // second target, CZ only

  bool two_qubit() const { return kind == OpKind::CZ; }
  friend bool operator==(const Gate&, const Gate&) = default;
};

enum class LayerKind : std::uint8_t { Prep, Measure, SingleQubit, TwoQubit };

struct Layer {
  LayerKind kind;
  double duration_us = 0.0;
  std::vector<Gate> gates;
  friend bool operator==(const Layer&, const Layer&) = default;
};

/// The eight fault categories of the circuit-level noise model.
enum class FaultCategory : std::uint8_t {
  Prep = 0,           // X after |0> preparation
  Measure = 1,        // X before Z measurement
  OneQubit = 2,       // Y after RY(+-pi/2)
  TwoQubit = 3,       // ZZ after CZ
  IdleDataPrep = 4,   // Z on idle data during preparation layers
  IdleDataMeas = 5,   // Z on idle data during measurement layers
  IdleDataCZ = 6,     // Z on idle data during CZ layers
  IdleAncillaCZ = 7,  // Z on idle ancillas during CZ layers
};
inline constexpr std::size_t kNumCategories = 8;

inline std::string_view category_name(FaultCategory c) {
  static constexpr std::array<std::string_view, kNumCategories> names = {
      "prep", "measure", "1q", "cz", "idle_data_prep", "idle_data_meas", "idle_data_cz",
      "idle_anc_cz"};
  return names[static_cast<std::size_t>(c)];
}

enum class FaultPauli : std::uint8_t { X, Y, Z, ZZ };

/// One potential fault site on the maximal unrolling of a protocol.
struct FaultLocation {
  FaultCategory category;
  std::uint16_t block;
  std::uint16_t layer;
  std::uint16_t q0;
  std::uint16_t q1 = 0;  // partner qubit for ZZ faults
  FaultPauli pauli;
  double duration_us = 0.0;  // layer duration, idle categories only
  QubitType type0 = QubitType::LD;
  QubitType type1 = QubitType::LD;
};

inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf.data(), end);
}

/// A timed schedule of gate layers over data qubits [0, 9) and ancillas.
struct Circuit {
  std::size_t n_qubits = 0;
  std::vector<Layer> layers;
  std::vector<QubitRole> roles;
  std::vector<QubitType> types;

  double duration() const {
    double total = 0.0;
    for (const auto& l : layers) total += l.duration_us;
    return total;
  }

  std::size_t count(OpKind kind) const {
    std::size_t c = 0;
    for (const auto& l : layers)
      for (const auto& g : l.gates) c += g.kind == kind;
    return c;
  }

  /// Throws when a layer touches a qubit twice or a target is out of range.
  void validate() const {
    for (std::size_t li = 0; li < layers.size(); ++li) {
      std::vector<bool> used(n_qubits, false);
      auto touch = [&](std::size_t q) {
        if (q >= n_qubits) throw std::out_of_range("gate target out of range");
        if (used[q]) {
          throw std::invalid_argument("layer " + std::to_string(li) + " uses qubit " +
                                      std::to_string(q) + " twice");
        }
        used[q] = true;
      };
      for (const auto& g : layers[li].gates) {
        touch(g.a);
        if (g.two_qubit()) touch(g.b);
      }
    }
  }

  /// One layer per line: `<duration_us> <gate>(<qubits>)...`.
  std::string dump() const {
    std::ostringstream out;
    for (const auto& l : layers) {
      out << format_double(l.duration_us);
      for (const auto& g : l.gates) {
        out << ' ' << gate_name(g.kind) << '(' << g.a;
        if (g.two_qubit()) out << ',' << g.b;
        out << ')';
      }
      out << '\n';
    }
    return out.str();
  }

  static std::string_view gate_name(OpKind k) {
    switch (k) {
      case OpKind::PrepZ:
        return "R";
      case OpKind::MeasureZ:
        return "M";
      case OpKind::RYPlus:
        return "RY+";
      case OpKind::RYMinus:
        return "RY-";
      case OpKind::CZ:
        return "CZ";
    }
    return "?";
  }

  /// Renames qubits through `perm` (old index -> new index).
  void relabel(const std::vector<std::size_t>& perm) {
    for (auto& l : layers) {
      for (auto& g : l.gates) {
        g.a = static_cast<std::uint16_t>(perm.at(g.a));
        if (g.two_qubit()) g.b = static_cast<std::uint16_t>(perm.at(g.b));
      }
    }
    auto old_roles = roles;
    auto old_types = types;
    for (std::size_t q = 0; q < perm.size() && q < old_roles.size(); ++q) {
      roles.at(perm[q]) = old_roles[q];
      types.at(perm[q]) = old_types[q];
    }
  }
};

}  // namespace spinsim
