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
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spinsim/circuit.hpp"
#include "spinsim/codes.hpp"
#include "spinsim/noise.hpp"
#include "spinsim/random.hpp"
#include "spinsim/tableau.hpp"

namespace spinsim {

// Qubit layout: data 0-8, ancilla 9 + i measures S_X^(i+1), ancilla 13 + i
// measures S_Z^(i+1).
inline constexpr std::size_t kRoundQubits = 17;
inline constexpr std::size_t kChecksPerType = 4;
inline constexpr std::size_t x_ancilla(std::size_t i) { return kDataQubits + i; }
inline constexpr std::size_t z_ancilla(std::size_t i) { return kDataQubits + kChecksPerType + i; }

/// CZ timestep (0-3) and data qubit for each interaction of one check.
struct CheckStep {
  std::uint8_t step;
  std::uint8_t data;
};

/// Z checks. Weight-4 checks follow a zigzag whose two-qubit hook errors are
/// aligned with the logical X direction, so they stay correctable.
inline const std::array<std::vector<CheckStep>, kChecksPerType>& z_check_order() {
  static const std::array<std::vector<CheckStep>, kChecksPerType> order = {{
      {{0, 0}, {1, 3}},
      {{0, 1}, {1, 4}, {2, 2}, {3, 5}},
      {{0, 3}, {1, 6}, {2, 4}, {3, 7}},
      {{2, 5}, {3, 8}},
  }};
  return order;
}

inline const std::array<std::vector<CheckStep>, kChecksPerType>& x_check_order() {
  static const std::array<std::vector<CheckStep>, kChecksPerType> order = {{
      {{0, 1}, {1, 2}},
      {{0, 0}, {1, 1}, {2, 3}, {3, 4}},
      {{0, 4}, {1, 5}, {2, 7}, {3, 8}},
      {{2, 6}, {3, 7}},
  }};
  return order;
}

namespace detail {

inline Layer gate_layer(LayerKind kind, OpKind op, double duration,
                        std::initializer_list<std::pair<std::size_t, std::size_t>> ranges) {
  Layer l{kind, duration, {}};
  for (auto [lo, hi] : ranges) {
    for (std::size_t q = lo; q < hi; ++q) l.gates.push_back({op, static_cast<std::uint16_t>(q)});
  }
  return l;
}

inline Layer merge(Layer a, const Layer& b) {
  a.gates.insert(a.gates.end(), b.gates.begin(), b.gates.end());
  return a;
}

inline std::vector<Layer> cz_block(const std::array<std::vector<CheckStep>, kChecksPerType>& order,
                                   std::size_t (*ancilla)(std::size_t), double t_cz) {
  std::vector<Layer> layers(4, Layer{LayerKind::TwoQubit, t_cz, {}});
  for (std::size_t check = 0; check < kChecksPerType; ++check) {
    for (const auto& s : order[check]) {
      layers[s.step].gates.push_back(
          {OpKind::CZ, s.data, static_cast<std::uint16_t>(ancilla(check))});
    }
  }
  return layers;
}

/// X-check CZ block. Every data qubit of a CZ is rotated by RY(-pi/2) right
/// before the gate and back by RY(+pi/2) right after it.
inline std::vector<Layer> x_cz_block(double t_cz, std::size_t (*ancilla)(std::size_t)) {
  std::vector<Layer> out;
  for (const Layer& cz : cz_block(x_check_order(), ancilla, t_cz)) {
    Layer before{LayerKind::SingleQubit, 0.0, {}};
    Layer after{LayerKind::SingleQubit, 0.0, {}};
    for (const auto& g : cz.gates) {
      before.gates.push_back({OpKind::RYMinus, g.a});
      after.gates.push_back({OpKind::RYPlus, g.a});
    }
    out.push_back(std::move(before));
    out.push_back(cz);
    out.push_back(std::move(after));
  }
  return out;
}

inline std::size_t x_anc_fn(std::size_t i) { return x_ancilla(i); }
inline std::size_t z_anc_fn(std::size_t i) { return z_ancilla(i); }

}  // namespace detail

struct RoundTiming {
  double t_prep;
  double t_cz;
  double t_readout;
};

/// Layer durations of syndrome-extraction circuits; gates run at the pace of
/// the ancilla qubit type.
inline RoundTiming round_timing(const NoiseParams& params) {
  const QubitParams& a = params.ancilla();
  return {a.t_prep, a.t_cz, a.readout_time()};
}

inline void tag_qubits(Circuit& c, std::size_t n, Encoding encoding) {
  c.n_qubits = n;
  c.roles.assign(n, QubitRole::Data);
  c.types.assign(n, QubitType::LD);
  for (std::size_t q = kDataQubits; q < n; ++q) {
    c.roles[q] = QubitRole::Ancilla;
    c.types[q] = encoding == Encoding::Hybrid ? QubitType::ST : QubitType::LD;
  }
}

/// One full round measuring all eight surface-17 checks.
inline Circuit build_round(Encoding encoding, const NoiseParams& params) {
  NoiseParams p = params;
  p.encoding = encoding;
  const RoundTiming t = round_timing(p);
  Circuit c;
  tag_qubits(c, kRoundQubits, encoding);
  using detail::gate_layer;
  c.layers.push_back(gate_layer(LayerKind::Prep, OpKind::PrepZ, t.t_prep, {{9, 17}}));
  c.layers.push_back(gate_layer(LayerKind::SingleQubit, OpKind::RYPlus, 0.0, {{9, 17}}));
  for (auto& l : detail::cz_block(z_check_order(), detail::z_anc_fn, t.t_cz)) c.layers.push_back(l);
  for (auto& l : detail::x_cz_block(t.t_cz, detail::x_anc_fn)) c.layers.push_back(l);
  c.layers.push_back(gate_layer(LayerKind::SingleQubit, OpKind::RYMinus, 0.0, {{9, 17}}));
  c.layers.push_back(gate_layer(LayerKind::Measure, OpKind::MeasureZ, t.t_readout, {{9, 17}}));
  return c;
}

/// Z-only or X-only half round using the four ancillas of that check type.
inline Circuit build_half_round(bool z_checks, Encoding encoding, const NoiseParams& params) {
  NoiseParams p = params;
  p.encoding = encoding;
  const RoundTiming t = round_timing(p);
  Circuit c;
  tag_qubits(c, kRoundQubits, encoding);
  using detail::gate_layer;
  const std::size_t lo = z_checks ? z_ancilla(0) : x_ancilla(0);
  const std::size_t hi = lo + kChecksPerType;
  c.layers.push_back(gate_layer(LayerKind::Prep, OpKind::PrepZ, t.t_prep, {{lo, hi}}));
  if (z_checks) {
    c.layers.push_back(gate_layer(LayerKind::SingleQubit, OpKind::RYPlus, 0.0, {{lo, hi}}));
    for (auto& l : detail::cz_block(z_check_order(), detail::z_anc_fn, t.t_cz)) {
      c.layers.push_back(l);
    }
    c.layers.push_back(gate_layer(LayerKind::SingleQubit, OpKind::RYMinus, 0.0, {{lo, hi}}));
  } else {
    c.layers.push_back(gate_layer(LayerKind::SingleQubit, OpKind::RYPlus, 0.0, {{lo, hi}}));
    for (auto& l : detail::x_cz_block(t.t_cz, detail::x_anc_fn)) c.layers.push_back(l);
    c.layers.push_back(gate_layer(LayerKind::SingleQubit, OpKind::RYMinus, 0.0, {{lo, hi}}));
  }
  c.layers.push_back(gate_layer(LayerKind::Measure, OpKind::MeasureZ, t.t_readout, {{lo, hi}}));
  return c;
}

/// Row-wise GHZ preparation followed by the row/column relabeling, so the
/// three GHZ states lie along columns.
inline Circuit build_bs_prep_circuit(const NoiseParams& params) {
  const QubitParams& ld = params.ld;
  Circuit c;
  tag_qubits(c, kDataQubits, Encoding::AllLD);
  using detail::gate_layer;
  c.layers.push_back(gate_layer(LayerKind::Prep, OpKind::PrepZ, ld.t_prep, {{0, 9}}));
  c.layers.push_back(gate_layer(LayerKind::SingleQubit, OpKind::RYPlus, 0.0, {{0, 9}}));
  Layer first{LayerKind::TwoQubit, ld.t_cz, {}};
  Layer second{LayerKind::TwoQubit, ld.t_cz, {}};
  Layer last{LayerKind::SingleQubit, 0.0, {}};
  for (std::uint16_t r = 0; r < 3; ++r) {
    const auto base = static_cast<std::uint16_t>(3 * r);
    first.gates.push_back({OpKind::CZ, base, static_cast<std::uint16_t>(base + 1)});
    second.gates.push_back(
        {OpKind::CZ, static_cast<std::uint16_t>(base + 1), static_cast<std::uint16_t>(base + 2)});
    last.gates.push_back({OpKind::RYMinus, base});
    last.gates.push_back({OpKind::RYMinus, static_cast<std::uint16_t>(base + 2)});
  }
  c.layers.push_back(first);
  c.layers.push_back(second);
  c.layers.push_back(last);
  std::vector<std::size_t> transpose(kDataQubits);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t col = 0; col < 3; ++col) transpose[3 * r + col] = 3 * col + r;
  c.relabel(transpose);
  return c;
}

/// Bit masks of a code over the nine data qubits, for fast decoding.
struct CodeTables {
  std::string name;
  std::vector<std::uint16_t> x_stab;  // X support of each X-type generator
  std::vector<std::uint16_t> z_stab;  // Z support of each Z-type generator
  std::vector<std::uint16_t> x_lut;   // X-syndrome key -> Z correction support
  std::vector<std::uint16_t> z_lut;   // Z-syndrome key -> X correction support
  std::uint16_t logical_x = 0;
  std::uint16_t logical_z = 0;
  // For subsystem codes: surface generator indices (as a bit set) combined
  // into each generator.
  std::vector<std::uint8_t> x_parity;
  std::vector<std::uint8_t> z_parity;
};

inline CodeTables compile_code(const CodeSpec& code) {
  auto mask = [](std::uint64_t m) { return static_cast<std::uint16_t>(m & 0x1ff); };
  CodeTables t;
  t.name = code.name;
  for (const auto& s : code.x_stabilizers) t.x_stab.push_back(mask(s.x_mask()));
  for (const auto& s : code.z_stabilizers) t.z_stab.push_back(mask(s.z_mask()));
  for (const auto& c : code.x_lookup) t.x_lut.push_back(mask(c.z_mask()));
  for (const auto& c : code.z_lookup) t.z_lut.push_back(mask(c.x_mask()));
  t.logical_x = mask(code.logical_x.x_mask());
  t.logical_z = mask(code.logical_z.z_mask());
  if (code.gauge_parity_map) {
    auto pack = [](const std::vector<std::size_t>& members) {
      std::uint8_t bits = 0;
      for (std::size_t i : members) bits |= static_cast<std::uint8_t>(1U << i);
      return bits;
    };
    for (const auto& m : code.gauge_parity_map->x) t.x_parity.push_back(pack(m));
    for (const auto& m : code.gauge_parity_map->z) t.z_parity.push_back(pack(m));
  }
  return t;
}

/// Syndromes travel as flip sets: bit i is set when generator i reads -1.
/// Table keys put generator 1 in the most significant position.
inline std::size_t key_from_flips(std::uint32_t flips, std::size_t len) {
  std::size_t key = 0;
  for (std::size_t i = 0; i < len; ++i) key = (key << 1) | ((flips >> i) & 1U);
  return key;
}

inline std::uint32_t combine_parity(std::uint32_t surface_flips, const std::vector<std::uint8_t>& map) {
  std::uint32_t out = 0;
  for (std::size_t i = 0; i < map.size(); ++i) {
    out |= static_cast<std::uint32_t>(std::popcount(surface_flips & map[i]) & 1) << i;
  }
  return out;
}

inline std::vector<int> bits_from_flips(std::uint32_t flips, std::size_t len) {
  std::vector<int> bits(len);
  for (std::size_t i = 0; i < len; ++i) bits[i] = ((flips >> i) & 1U) ? -1 : 1;
  return bits;
}

enum class ProtocolKind : std::uint8_t { QecStep, SurfacePlusPrep, SurfaceZeroPrep, BsPlusPrep };

inline std::string_view to_string(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::QecStep:
      return "qec-step";
    case ProtocolKind::SurfacePlusPrep:
      return "surface-prep";
    case ProtocolKind::SurfaceZeroPrep:
      return "surface-prep-zero";
    case ProtocolKind::BsPlusPrep:
      return "bs-prep";
  }
  return "?";
}

enum class BlockKind : std::uint8_t { FullRound, ZHalf, XHalf, DataPrep, Ghz };

struct Block {
  BlockKind kind;
  std::string name;
  std::vector<Layer> layers;

  double duration() const {
    double d = 0.0;
    for (const auto& l : layers) d += l.duration_us;
    return d;
  }
};

/// A protocol over its maximal unrolling: every block that any branch may
/// execute, in execution order, plus the fault locations defined on them.
struct Protocol {
  ProtocolKind kind = ProtocolKind::QecStep;
  Encoding encoding = Encoding::Hybrid;
  std::size_t n_qubits = 0;
  std::vector<QubitRole> roles;
  std::vector<QubitType> types;
  std::vector<Block> blocks;
  CodeTables code;
  bool observable_is_x = true;  // X_L for |+>_L experiments, Z_L for |0>_L

  std::vector<FaultLocation> locations;
  std::array<std::vector<std::uint32_t>, kNumCategories> by_category;

  // Noiseless reference run of the maximal unrolling with every random
  // outcome fixed to +1. Used by the Pauli-frame backend.
  std::vector<std::uint32_t> reference_flips;  // per block, measurement order
  std::uint32_t reference_x_syndrome = 0;
  std::uint32_t reference_z_syndrome = 0;
  bool reference_observable_flip = false;

  bool uses_ancillas() const { return n_qubits > kDataQubits; }

  std::array<std::size_t, kNumCategories> counts() const {
    std::array<std::size_t, kNumCategories> n{};
    for (std::size_t i = 0; i < kNumCategories; ++i) n[i] = by_category[i].size();
    return n;
  }

  double max_duration() const {
    double d = 0.0;
    for (const auto& b : blocks) d += b.duration();
    return d;
  }

  /// The maximal unrolling as one flat circuit.
  Circuit unrolled() const {
    Circuit c;
    c.n_qubits = n_qubits;
    c.roles = roles;
    c.types = types;
    for (const auto& b : blocks) c.layers.insert(c.layers.end(), b.layers.begin(), b.layers.end());
    return c;
  }
};

/// Enumerates fault sites. Gate faults follow their gate, measurement faults
/// precede the measurement, and idle faults hit every live qubit a layer
/// leaves untouched. Ancillas are live from their preparation to their
/// measurement within a block; data qubits are always live.
inline std::vector<FaultLocation> enumerate_fault_locations(const Protocol& p) {
  std::vector<FaultLocation> out;
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    std::vector<bool> live(p.n_qubits, false);
    for (std::size_t q = 0; q < p.n_qubits; ++q) live[q] = p.roles[q] == QubitRole::Data;
    const auto& layers = p.blocks[b].layers;
    for (std::size_t li = 0; li < layers.size(); ++li) {
      const Layer& layer = layers[li];
      auto site = [&](FaultCategory cat, std::size_t q0, std::size_t q1, FaultPauli pauli,
                      double duration) {
        FaultLocation f{cat,
                        static_cast<std::uint16_t>(b),
                        static_cast<std::uint16_t>(li),
                        static_cast<std::uint16_t>(q0),
                        static_cast<std::uint16_t>(q1),
                        pauli,
                        duration,
                        p.types[q0],
                        p.types[q1]};
        out.push_back(f);
      };
      std::vector<bool> busy(p.n_qubits, false);
      for (const auto& g : layer.gates) {
        busy[g.a] = true;
        if (g.two_qubit()) busy[g.b] = true;
      }
      if (layer.kind == LayerKind::Measure) {
        for (const auto& g : layer.gates) site(FaultCategory::Measure, g.a, g.a, FaultPauli::X, 0.0);
      }
      for (const auto& g : layer.gates) {
        switch (g.kind) {
          case OpKind::PrepZ:
            site(FaultCategory::Prep, g.a, g.a, FaultPauli::X, 0.0);
            live[g.a] = true;
            break;
          case OpKind::RYPlus:
          case OpKind::RYMinus:
            site(FaultCategory::OneQubit, g.a, g.a, FaultPauli::Y, 0.0);
            break;
          case OpKind::CZ:
            site(FaultCategory::TwoQubit, g.a, g.b, FaultPauli::ZZ, 0.0);
            break;
          case OpKind::MeasureZ:
            break;
        }
      }
      if (layer.kind != LayerKind::SingleQubit) {
        for (std::size_t q = 0; q < p.n_qubits; ++q) {
          if (busy[q] || !live[q]) continue;
          const bool data = p.roles[q] == QubitRole::Data;
          FaultCategory cat;
          if (layer.kind == LayerKind::Prep) {
            if (!data) continue;
            cat = FaultCategory::IdleDataPrep;
          } else if (layer.kind == LayerKind::Measure) {
            if (!data) continue;
            cat = FaultCategory::IdleDataMeas;
          } else {
            cat = data ? FaultCategory::IdleDataCZ : FaultCategory::IdleAncillaCZ;
          }
          site(cat, q, q, FaultPauli::Z, layer.duration_us);
        }
      }
      if (layer.kind == LayerKind::Measure) {
        for (const auto& g : layer.gates) live[g.a] = false;
      }
    }
  }
  return out;
}

/// Outcome of one protocol run.
struct ProtocolOutcome {
  struct Record {
    std::uint8_t block;
    std::uint8_t flips;  // measurement k of the block read -1 when bit k is set
  };
  std::size_t rounds = 0;  // QEC step: rounds run; surface prep: Z rounds run
  std::array<Record, 8> history{};
  std::size_t history_size = 0;
  std::uint16_t correction_x = 0;
  std::uint16_t correction_z = 0;
  bool logical_failure = false;

  std::span<const Record> records() const { return {history.data(), history_size}; }

  PauliString correction() const {
    PauliString c(kDataQubits);
    for (std::size_t q = 0; q < kDataQubits; ++q) {
      const bool x = (correction_x >> q) & 1U;
      const bool z = (correction_z >> q) & 1U;
      if (x || z) c.set(q, x ? (z ? Pauli::Y : Pauli::X) : Pauli::Z);
    }
    return c;
  }
};

/// Data-qubit Pauli as a PauliString of width n.
inline PauliString data_pauli(std::size_t n, std::uint16_t x_mask, std::uint16_t z_mask) {
  PauliString p(n);
  for (std::size_t q = 0; q < kDataQubits; ++q) {
    const bool x = (x_mask >> q) & 1U;
    const bool z = (z_mask >> q) & 1U;
    if (x || z) p.set(q, x ? (z ? Pauli::Y : Pauli::X) : Pauli::Z);
  }
  return p;
}

inline std::uint16_t pauli_x_mask(const PauliString& p) {
  return static_cast<std::uint16_t>(p.x_mask() & 0x1ff);
}
inline std::uint16_t pauli_z_mask(const PauliString& p) {
  return static_cast<std::uint16_t>(p.z_mask() & 0x1ff);
}

/// Puts the data register of `t` into the code state with every generator
/// and the chosen logical at +1: prepare a product state, measure, then
/// apply Pauli fixups.
template <class Rng>
void prepare_perfect_logical(StabilizerTableau& t, const CodeSpec& code, bool plus, Rng& rng) {
  const std::size_t n = t.num_qubits();
  for (std::size_t q = 0; q < kDataQubits; ++q) {
    t.prepare_z(q, rng);
    if (plus) t.ry_plus(q);
  }
  auto widen = [&](const PauliString& p) {
    return data_pauli(n, pauli_x_mask(p), pauli_z_mask(p));
  };
  Syndrome s;
  for (const auto& g : code.x_stabilizers) s.x_bits.push_back(t.measure_pauli(widen(g), rng));
  for (const auto& g : code.z_stabilizers) s.z_bits.push_back(t.measure_pauli(widen(g), rng));
  t.apply_pauli(widen(decode(code, s)));
  const PauliString& logical = plus ? code.logical_x : code.logical_z;
  const PauliString& partner = plus ? code.logical_z : code.logical_x;
  if (t.measure_pauli(widen(logical), rng) < 0) t.apply_pauli(widen(partner));
  for (const auto& g : code.stabilizers()) {
    if (t.eigenvalue_of(widen(g)) != Eigenvalue::Plus) {
      throw std::logic_error("perfect logical state construction failed");
    }
  }
}

/// Always reports +1 for random measurements.
struct ZeroRng {
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return 0; }
};

/// Exact backend: a full stabilizer tableau.
template <class Rng = SplitMix64>
class TableauBackend {
 public:
  explicit TableauBackend(Rng& rng) : rng_(rng), state_(1) {}

  void begin(const Protocol& p) {
    state_ = StabilizerTableau(p.n_qubits);
    if (p.kind == ProtocolKind::QecStep) {
      prepare_perfect_logical(state_, surface17_spec(), true, rng_);
    }
  }

  void prep(std::size_t q) { state_.prepare_z(q, rng_); }
  bool measure(std::size_t q, bool /*reference_flip*/) { return state_.measure_z(q, rng_) < 0; }
  void ry_plus(std::size_t q) { state_.ry_plus(q); }
  void ry_minus(std::size_t q) { state_.ry_minus(q); }
  void cz(std::size_t a, std::size_t b) { state_.cz(a, b); }

  void inject(const FaultLocation& f) {
    switch (f.pauli) {
      case FaultPauli::X:
        state_.pauli_x(f.q0);
        break;
      case FaultPauli::Y:
        state_.pauli_y(f.q0);
        break;
      case FaultPauli::Z:
        state_.pauli_z(f.q0);
        break;
      case FaultPauli::ZZ:
        state_.pauli_z(f.q0);
        state_.pauli_z(f.q1);
        break;
    }
  }

  void apply_data(std::uint16_t x_mask, std::uint16_t z_mask) {
    if (x_mask == 0 && z_mask == 0) return;
    state_.apply_pauli(data_pauli(state_.num_qubits(), x_mask, z_mask));
  }

  /// Noiseless generator eigenvalues as flip sets.
  std::pair<std::uint32_t, std::uint32_t> code_syndrome(const Protocol& p) const {
    std::uint32_t sx = 0;
    std::uint32_t sz = 0;
    for (std::size_t i = 0; i < p.code.x_stab.size(); ++i) {
      sx |= static_cast<std::uint32_t>(read(data_pauli(n(), p.code.x_stab[i], 0))) << i;
    }
    for (std::size_t i = 0; i < p.code.z_stab.size(); ++i) {
      sz |= static_cast<std::uint32_t>(read(data_pauli(n(), 0, p.code.z_stab[i]))) << i;
    }
    return {sx, sz};
  }

  bool observable_flip(const Protocol& p) const {
    return p.observable_is_x ? read(data_pauli(n(), p.code.logical_x, 0))
                             : read(data_pauli(n(), 0, p.code.logical_z));
  }

  const StabilizerTableau& state() const { return state_; }
  StabilizerTableau& state() { return state_; }

 private:
  std::size_t n() const { return state_.num_qubits(); }

  bool read(const PauliString& p) const {
    const Eigenvalue e = state_.eigenvalue_of(p);
    if (e == Eigenvalue::Indeterminate) {
      throw std::logic_error("data state is not a Pauli image of a code state");
    }
    return e == Eigenvalue::Minus;
  }

  Rng& rng_;
  StabilizerTableau state_;
};

/// Runs block `b`, injecting the faults in `faults` (indices into
/// p.locations) that belong to it. Returns the measurement flip set.
template <class Backend>
std::uint32_t run_block(const Protocol& p, std::size_t b, Backend& be,
                        std::span<const std::uint32_t> faults) {
  std::uint32_t flips = 0;
  std::size_t k = 0;
  const std::uint32_t reference = p.reference_flips.empty() ? 0U : p.reference_flips[b];
  const auto& layers = p.blocks[b].layers;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const Layer& layer = layers[li];
    auto inject = [&](bool before) {
      for (std::uint32_t idx : faults) {
        const FaultLocation& f = p.locations[idx];
        if (f.block != b || f.layer != li) continue;
        if ((f.category == FaultCategory::Measure) == before) be.inject(f);
      }
    };
    if (!faults.empty() && layer.kind == LayerKind::Measure) inject(true);
    for (const auto& g : layer.gates) {
      switch (g.kind) {
        case OpKind::PrepZ:
          be.prep(g.a);
          break;
        case OpKind::MeasureZ:
          if (be.measure(g.a, (reference >> k) & 1U)) flips |= 1U << k;
          ++k;
          break;
        case OpKind::RYPlus:
          be.ry_plus(g.a);
          break;
        case OpKind::RYMinus:
          be.ry_minus(g.a);
          break;
        case OpKind::CZ:
          be.cz(g.a, g.b);
          break;
      }
    }
    if (!faults.empty()) inject(false);
  }
  return flips;
}

/// Noise-free correction of the final data state. Returns true on logical
/// failure.
template <class Backend>
bool ideal_ec(const Protocol& p, Backend& be) {
  const auto [sx, sz] = be.code_syndrome(p);
  const std::uint16_t cz_mask = p.code.x_lut[key_from_flips(sx, p.code.x_stab.size())];
  const std::uint16_t cx_mask = p.code.z_lut[key_from_flips(sz, p.code.z_stab.size())];
  be.apply_data(cx_mask, cz_mask);
  return be.observable_flip(p);
}

struct InitialError {
  std::uint16_t x = 0;
  std::uint16_t z = 0;
};

namespace detail {

inline void record(ProtocolOutcome& out, std::size_t block, std::uint32_t flips) {
  if (out.history_size < out.history.size()) {
    out.history[out.history_size++] = {static_cast<std::uint8_t>(block),
                                       static_cast<std::uint8_t>(flips)};
  }
}

inline void correct(const Protocol& p, std::uint32_t x_flips, std::uint32_t z_flips,
                    ProtocolOutcome& out) {
  out.correction_z = p.code.x_lut[key_from_flips(x_flips, p.code.x_stab.size())];
  out.correction_x = p.code.z_lut[key_from_flips(z_flips, p.code.z_stab.size())];
}

}  // namespace detail

/// Executes one run of `p` on `be`. `faults` lists active fault locations;
/// faults in blocks that the run skips have no effect.
template <class Backend>
ProtocolOutcome execute(const Protocol& p, Backend& be, std::span<const std::uint32_t> faults,
                        InitialError initial = {}) {
  ProtocolOutcome out;
  be.begin(p);
  be.apply_data(initial.x, initial.z);
  auto run = [&](std::size_t b) {
    const std::uint32_t f = run_block(p, b, be, faults);
    detail::record(out, b, f);
    return f;
  };
  switch (p.kind) {
    case ProtocolKind::QecStep: {
      std::uint32_t last = run(0);
      out.rounds = 1;
      if (last != 0) {
        last = run(1);
        out.rounds = 2;
      }
      std::uint32_t xf = last & 0xF;
      std::uint32_t zf = (last >> 4) & 0xF;
      if (!p.code.x_parity.empty()) {
        xf = combine_parity(xf, p.code.x_parity);
        zf = combine_parity(zf, p.code.z_parity);
      }
      detail::correct(p, xf, zf, out);
      break;
    }
    case ProtocolKind::SurfacePlusPrep:
    case ProtocolKind::SurfaceZeroPrep: {
      // Blocks: data prep, P1, Q1, P2, Q2, P3 where P projects (Z checks for
      // |+>_L) and Q checks the complementary type.
      run(0);
      const std::uint32_t p1 = run(1);
      std::uint32_t q_last = run(2);
      std::uint32_t p_last;
      if (q_last != 0) {
        p_last = run(3);
        q_last = run(4);
      } else {
        p_last = run(3);
      }
      out.rounds = 2;
      if (p1 != p_last) {
        p_last = run(5);
        out.rounds = 3;
      }
      const bool plus = p.kind == ProtocolKind::SurfacePlusPrep;
      detail::correct(p, plus ? q_last : p_last, plus ? p_last : q_last, out);
      break;
    }
    case ProtocolKind::BsPlusPrep:
      run(0);
      out.rounds = 0;
      break;
  }
  be.apply_data(out.correction_x, out.correction_z);
  out.logical_failure = ideal_ec(p, be);
  return out;
}

namespace detail {

inline void finalize(Protocol& p) {
  p.locations = enumerate_fault_locations(p);
  for (auto& v : p.by_category) v.clear();
  for (std::size_t i = 0; i < p.locations.size(); ++i) {
    p.by_category[static_cast<std::size_t>(p.locations[i].category)].push_back(
        static_cast<std::uint32_t>(i));
  }
  // Reference run over every block.
  ZeroRng zero;
  TableauBackend<ZeroRng> be(zero);
  be.begin(p);
  p.reference_flips.clear();
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    p.reference_flips.push_back(run_block(p, b, be, {}));
  }
  const auto [sx, sz] = be.code_syndrome(p);
  p.reference_x_syndrome = sx;
  p.reference_z_syndrome = sz;
  p.reference_observable_flip = be.observable_flip(p);
}

inline Block as_block(BlockKind kind, std::string name, Circuit c) {
  return Block{kind, std::move(name), std::move(c.layers)};
}

}  // namespace detail

/// The adaptive QEC step: one round, a second round when the first shows
/// any -1 outcome, then lookup decoding of the last round.
inline Protocol make_qec_step(const CodeSpec& code, const NoiseParams& params) {
  Protocol p;
  p.kind = ProtocolKind::QecStep;
  p.encoding = params.encoding;
  Circuit round = build_round(params.encoding, params);
  p.n_qubits = round.n_qubits;
  p.roles = round.roles;
  p.types = round.types;
  p.blocks.push_back(detail::as_block(BlockKind::FullRound, "round1", round));
  p.blocks.push_back(detail::as_block(BlockKind::FullRound, "round2", round));
  p.code = compile_code(code);
  p.observable_is_x = true;
  detail::finalize(p);
  return p;
}

/// Projective surface-17 preparation of |+>_L (plus = true) or |0>_L.
inline Protocol make_surface_prep(const NoiseParams& params, bool plus = true) {
  Protocol p;
  p.kind = plus ? ProtocolKind::SurfacePlusPrep : ProtocolKind::SurfaceZeroPrep;
  p.encoding = params.encoding;
  Circuit data;
  tag_qubits(data, kRoundQubits, params.encoding);
  data.layers.push_back(
      detail::gate_layer(LayerKind::Prep, OpKind::PrepZ, params.ld.t_prep, {{0, 9}}));
  if (plus) {
    data.layers.push_back(
        detail::gate_layer(LayerKind::SingleQubit, OpKind::RYPlus, 0.0, {{0, 9}}));
  }
  p.n_qubits = data.n_qubits;
  p.roles = data.roles;
  p.types = data.types;
  const Circuit zh = build_half_round(true, params.encoding, params);
  const Circuit xh = build_half_round(false, params.encoding, params);
  const Circuit& proj = plus ? zh : xh;
  const Circuit& other = plus ? xh : zh;
  const char* pn = plus ? "Z" : "X";
  const char* on = plus ? "X" : "Z";
  const BlockKind pk = plus ? BlockKind::ZHalf : BlockKind::XHalf;
  const BlockKind ok = plus ? BlockKind::XHalf : BlockKind::ZHalf;
  p.blocks.push_back(detail::as_block(BlockKind::DataPrep, "data", data));
  p.blocks.push_back(detail::as_block(pk, std::string(pn) + "1", proj));
  p.blocks.push_back(detail::as_block(ok, std::string(on) + "1", other));
  p.blocks.push_back(detail::as_block(pk, std::string(pn) + "2", proj));
  p.blocks.push_back(detail::as_block(ok, std::string(on) + "2", other));
  p.blocks.push_back(detail::as_block(pk, std::string(pn) + "3", proj));
  p.code = compile_code(surface17_spec());
  p.observable_is_x = plus;
  detail::finalize(p);
  return p;
}

/// Coherent BS-17 |+>_L preparation from three GHZ states.
inline Protocol make_bs_prep(const NoiseParams& params) {
  Protocol p;
  p.kind = ProtocolKind::BsPlusPrep;
  p.encoding = params.encoding;
  Circuit c = build_bs_prep_circuit(params);
  p.n_qubits = c.n_qubits;
  p.roles = c.roles;
  p.types = c.types;
  p.blocks.push_back(detail::as_block(BlockKind::Ghz, "ghz", c));
  p.code = compile_code(bs17_spec());
  p.observable_is_x = true;
  detail::finalize(p);
  return p;
}

/// Convenience wrappers running the exact tableau backend.
inline ProtocolOutcome run_qec_step(const CodeSpec& code, const NoiseParams& params,
                                    std::span<const std::uint32_t> faults, SplitMix64& rng,
                                    InitialError initial = {}) {
  const Protocol p = make_qec_step(code, params);
  TableauBackend<> be(rng);
  return execute(p, be, faults, initial);
}

inline ProtocolOutcome run_surface_plus_prep(const NoiseParams& params,
                                             std::span<const std::uint32_t> faults,
                                             SplitMix64& rng) {
  const Protocol p = make_surface_prep(params, true);
  TableauBackend<> be(rng);
  return execute(p, be, faults);
}

inline ProtocolOutcome run_bs_plus_prep(const NoiseParams& params,
                                        std::span<const std::uint32_t> faults, SplitMix64& rng) {
  const Protocol p = make_bs_prep(params);
  TableauBackend<> be(rng);
  return execute(p, be, faults);
}

/// Probability per location category for protocol `p`.
inline std::array<double, kNumCategories> fault_probabilities(const NoiseParams& params,
                                                              const Protocol& p) {
  return fault_probabilities(params, p.locations, p.uses_ancillas());
}

}  // namespace spinsim
