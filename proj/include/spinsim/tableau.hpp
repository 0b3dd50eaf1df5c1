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
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinsim/pauli_string.hpp"
#include "spinsim/random.hpp"

namespace spinsim {

enum class GateKind : std::uint8_t { RYPlus, RYMinus, CZ, X, Y, Z };

enum class Eigenvalue : std::int8_t { Minus = -1, Indeterminate = 0, Plus = 1 };

/// CHP-style stabilizer tableau: rows [0, n) are destabilizers, rows [n, 2n)
/// are stabilizers. Each row is a bit-packed Pauli with a sign bit.
class StabilizerTableau {
 public:
  explicit StabilizerTableau(std::size_t n) : n_(n), words_(words_for(n)) {
    if (n == 0) throw std::invalid_argument("tableau needs at least one qubit");
    xs_.assign(2 * n_ * words_, 0);
    zs_.assign(2 * n_ * words_, 0);
    signs_.assign(2 * n_, 0);
    for (std::size_t q = 0; q < n_; ++q) {
      set_bit(xs_, q, q);
      set_bit(zs_, n_ + q, q);
    }
  }

  std::size_t num_qubits() const { return n_; }

  PauliString destabilizer(std::size_t i) const { return row(i); }
  PauliString stabilizer(std::size_t i) const { return row(n_ + i); }

  void apply(GateKind kind, std::span<const std::size_t> targets) {
    for (std::size_t t : targets) check_qubit(t);
    switch (kind) {
      case GateKind::RYPlus:
        for (std::size_t t : targets) ry_plus(t);
        break;
      case GateKind::RYMinus:
        for (std::size_t t : targets) ry_minus(t);
        break;
      case GateKind::CZ:
        if (targets.size() % 2 != 0) throw std::invalid_argument("CZ needs target pairs");
        for (std::size_t i = 0; i < targets.size(); i += 2) cz(targets[i], targets[i + 1]);
        break;
      case GateKind::X:
        for (std::size_t t : targets) pauli_x(t);
        break;
      case GateKind::Y:
        for (std::size_t t : targets) pauli_y(t);
        break;
      case GateKind::Z:
        for (std::size_t t : targets) pauli_z(t);
        break;
    }
  }

  /// RY(+pi/2): X -> -Z, Z -> X.
  void ry_plus(std::size_t q) {
    check_qubit(q);
    const std::size_t w = q >> 6;
    const std::uint64_t m = std::uint64_t{1} << (q & 63);
    for (std::size_t r = 0; r < 2 * n_; ++r) {
      std::uint64_t& x = xs_[r * words_ + w];
      std::uint64_t& z = zs_[r * words_ + w];
      const bool xb = x & m;
      const bool zb = z & m;
      if (xb && !zb) signs_[r] ^= 1;
      if (xb != zb) {
        x ^= m;
        z ^= m;
      }
    }
  }

  /// RY(-pi/2): X -> Z, Z -> -X.
  void ry_minus(std::size_t q) {
    check_qubit(q);
    const std::size_t w = q >> 6;
    const std::uint64_t m = std::uint64_t{1} << (q & 63);
    for (std::size_t r = 0; r < 2 * n_; ++r) {
      std::uint64_t& x = xs_[r * words_ + w];
      std::uint64_t& z = zs_[r * words_ + w];
      const bool xb = x & m;
      const bool zb = z & m;
      if (zb && !xb) signs_[r] ^= 1;
      if (xb != zb) {
        x ^= m;
        z ^= m;
      }
    }
  }

  void cz(std::size_t a, std::size_t b) {
    check_qubit(a);
    check_qubit(b);
    if (a == b) throw std::invalid_argument("CZ targets must differ");
    for (std::size_t r = 0; r < 2 * n_; ++r) {
      const bool xa = get_bit(xs_, r, a);
      const bool xb = get_bit(xs_, r, b);
      const bool za = get_bit(zs_, r, a);
      const bool zb = get_bit(zs_, r, b);
      if (xa && xb && (za != zb)) signs_[r] ^= 1;
      if (xb) flip_bit(zs_, r, a);
      if (xa) flip_bit(zs_, r, b);
    }
  }

  void pauli_x(std::size_t q) {
    check_qubit(q);
    for (std::size_t r = 0; r < 2 * n_; ++r) signs_[r] ^= get_bit(zs_, r, q);
  }
  void pauli_z(std::size_t q) {
    check_qubit(q);
    for (std::size_t r = 0; r < 2 * n_; ++r) signs_[r] ^= get_bit(xs_, r, q);
  }
  void pauli_y(std::size_t q) {
    check_qubit(q);
    for (std::size_t r = 0; r < 2 * n_; ++r) signs_[r] ^= get_bit(xs_, r, q) ^ get_bit(zs_, r, q);
  }

  /// Applies a Pauli operator as a gate; its sign is a global phase.
  void apply_pauli(const PauliString& p) {
    check_width(p);
    for (std::size_t r = 0; r < 2 * n_; ++r) {
      unsigned parity = 0;
      for (std::size_t w = 0; w < words_; ++w) {
        parity ^= std::popcount((xs_[r * words_ + w] & p.z_words()[w]) ^
                                (zs_[r * words_ + w] & p.x_words()[w])) &
                  1;
      }
      signs_[r] ^= static_cast<std::uint8_t>(parity);
    }
  }

  /// Z-basis measurement. Returns +1 or -1.
  template <class Rng>
  int measure_z(std::size_t q, Rng& rng) {
    check_qubit(q);
    std::size_t pivot = 2 * n_;
    for (std::size_t r = n_; r < 2 * n_; ++r) {
      if (get_bit(xs_, r, q)) {
        pivot = r;
        break;
      }
    }
    if (pivot == 2 * n_) {
      return deterministic_from_destabilizers([&](std::size_t i) { return get_bit(xs_, i, q); });
    }
    for (std::size_t r = 0; r < 2 * n_; ++r) {
      if (r != pivot && get_bit(xs_, r, q)) rowmul(r, pivot);
    }
    copy_row(pivot - n_, pivot);
    clear_row(pivot);
    set_bit(zs_, pivot, q);
    const bool flip = coin(rng);
    signs_[pivot] = flip ? 1 : 0;
    return flip ? -1 : 1;
  }

  /// Measures an arbitrary Hermitian Pauli observable. Returns +1 or -1.
  template <class Rng>
  int measure_pauli(const PauliString& p, Rng& rng) {
    check_width(p);
    std::size_t pivot = 2 * n_;
    for (std::size_t r = n_; r < 2 * n_; ++r) {
      if (!row_commutes(r, p)) {
        pivot = r;
        break;
      }
    }
    if (pivot == 2 * n_) {
      const Eigenvalue e = eigenvalue_of(p);
      return static_cast<int>(e);
    }
    for (std::size_t r = 0; r < 2 * n_; ++r) {
      if (r != pivot && !row_commutes(r, p)) rowmul(r, pivot);
    }
    copy_row(pivot - n_, pivot);
    for (std::size_t w = 0; w < words_; ++w) {
      xs_[pivot * words_ + w] = p.x_words()[w];
      zs_[pivot * words_ + w] = p.z_words()[w];
    }
    const bool flip = coin(rng);
    signs_[pivot] = (flip ? 1 : 0) ^ (p.negative() ? 1 : 0);
    return flip ? -1 : 1;
  }

  template <class Rng>
  void prepare_z(std::size_t q, Rng& rng) {
    if (measure_z(q, rng) < 0) pauli_x(q);
  }

  /// +1/-1 when +-p is in the stabilizer group, Indeterminate otherwise.
  Eigenvalue eigenvalue_of(const PauliString& p) const {
    check_width(p);
    for (std::size_t r = n_; r < 2 * n_; ++r) {
      if (!row_commutes(r, p)) return Eigenvalue::Indeterminate;
    }
    std::vector<std::uint64_t> sx(words_, 0);
    std::vector<std::uint64_t> sz(words_, 0);
    unsigned log_i = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (row_commutes(i, p)) continue;
      log_i += mul_words_log_i(sx, sz, row_x(n_ + i), row_z(n_ + i));
      log_i += 2U * signs_[n_ + i];
    }
    for (std::size_t w = 0; w < words_; ++w) {
      if (sx[w] != p.x_words()[w] || sz[w] != p.z_words()[w]) {
        throw std::logic_error("tableau is not full rank");
      }
    }
    bool negative = ((log_i >> 1) & 1U) != 0;
    negative ^= p.negative();
    return negative ? Eigenvalue::Minus : Eigenvalue::Plus;
  }

  /// True when the stabilizer rows pairwise commute, each destabilizer
  /// anticommutes exactly with its partner, and the rows have full rank.
  bool check_invariants() const {
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        if (!rows_commute(n_ + i, n_ + j)) return false;
        const bool anti = !rows_commute(i, n_ + j);
        if (anti != (i == j)) return false;
      }
    }
    return symplectic_rank() == 2 * n_;
  }

  /// Rank over GF(2) of the 2n rows viewed as 2n-bit vectors.
  std::size_t symplectic_rank() const {
    std::vector<std::vector<std::uint64_t>> rows(2 * n_, std::vector<std::uint64_t>(2 * words_));
    for (std::size_t r = 0; r < 2 * n_; ++r) {
      for (std::size_t w = 0; w < words_; ++w) {
        rows[r][w] = xs_[r * words_ + w];
        rows[r][words_ + w] = zs_[r * words_ + w];
      }
    }
    std::size_t rank = 0;
    for (std::size_t col = 0; col < 2 * n_ && rank < rows.size(); ++col) {
      const std::size_t cw = col < n_ ? (col >> 6) : words_ + ((col - n_) >> 6);
      const std::uint64_t cm = std::uint64_t{1} << ((col < n_ ? col : col - n_) & 63);
      std::size_t sel = rank;
      while (sel < rows.size() && !(rows[sel][cw] & cm)) ++sel;
      if (sel == rows.size()) continue;
      std::swap(rows[sel], rows[rank]);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (r != rank && (rows[r][cw] & cm)) {
          for (std::size_t w = 0; w < rows[r].size(); ++w) rows[r][w] ^= rows[rank][w];
        }
      }
      ++rank;
    }
    return rank;
  }

  friend bool operator==(const StabilizerTableau&, const StabilizerTableau&) = default;

 private:
  template <class Rng>
  static bool coin(Rng& rng) {
    return (rng() >> 63) != 0;
  }

  template <class Pred>
  int deterministic_from_destabilizers(Pred anticommutes_with_destab) const {
    std::vector<std::uint64_t> sx(words_, 0);
    std::vector<std::uint64_t> sz(words_, 0);
    unsigned log_i = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (!anticommutes_with_destab(i)) continue;
      log_i += mul_words_log_i(sx, sz, row_x(n_ + i), row_z(n_ + i));
      log_i += 2U * signs_[n_ + i];
    }
    return ((log_i >> 1) & 1U) ? -1 : 1;
  }

  std::span<const std::uint64_t> row_x(std::size_t r) const {
    return {xs_.data() + r * words_, words_};
  }
  std::span<const std::uint64_t> row_z(std::size_t r) const {
    return {zs_.data() + r * words_, words_};
  }

  PauliString row(std::size_t r) const {
    PauliString p(n_);
    for (std::size_t w = 0; w < words_; ++w) {
      p.x_words()[w] = xs_[r * words_ + w];
      p.z_words()[w] = zs_[r * words_ + w];
    }
    if (signs_[r]) p.negate();
    return p;
  }

  /// row h := row h * row i, tracking the sign. Imaginary residues only occur
  /// on destabilizer rows, whose signs carry no meaning.
  void rowmul(std::size_t h, std::size_t i) {
    std::span<std::uint64_t> hx(xs_.data() + h * words_, words_);
    std::span<std::uint64_t> hz(zs_.data() + h * words_, words_);
    unsigned k = mul_words_log_i(hx, hz, row_x(i), row_z(i));
    k += 2U * (signs_[h] + signs_[i]);
    signs_[h] = static_cast<std::uint8_t>((k >> 1) & 1U);
  }

  void copy_row(std::size_t dst, std::size_t src) {
    for (std::size_t w = 0; w < words_; ++w) {
      xs_[dst * words_ + w] = xs_[src * words_ + w];
      zs_[dst * words_ + w] = zs_[src * words_ + w];
    }
    signs_[dst] = signs_[src];
  }

  void clear_row(std::size_t r) {
    for (std::size_t w = 0; w < words_; ++w) {
      xs_[r * words_ + w] = 0;
      zs_[r * words_ + w] = 0;
    }
    signs_[r] = 0;
  }

  bool row_commutes(std::size_t r, const PauliString& p) const {
    unsigned parity = 0;
    for (std::size_t w = 0; w < words_; ++w) {
      parity ^= std::popcount((xs_[r * words_ + w] & p.z_words()[w]) ^
                              (zs_[r * words_ + w] & p.x_words()[w])) &
                1;
    }
    return parity == 0;
  }

  bool rows_commute(std::size_t a, std::size_t b) const {
    unsigned parity = 0;
    for (std::size_t w = 0; w < words_; ++w) {
      parity ^= std::popcount((xs_[a * words_ + w] & zs_[b * words_ + w]) ^
                              (zs_[a * words_ + w] & xs_[b * words_ + w])) &
                1;
    }
    return parity == 0;
  }

  bool get_bit(const std::vector<std::uint64_t>& m, std::size_t r, std::size_t q) const {
    return (m[r * words_ + (q >> 6)] >> (q & 63)) & 1U;
  }
  void set_bit(std::vector<std::uint64_t>& m, std::size_t r, std::size_t q) {
    m[r * words_ + (q >> 6)] |= std::uint64_t{1} << (q & 63);
  }
  void flip_bit(std::vector<std::uint64_t>& m, std::size_t r, std::size_t q) {
    m[r * words_ + (q >> 6)] ^= std::uint64_t{1} << (q & 63);
  }

  void check_qubit(std::size_t q) const {
    if (q >= n_) throw std::out_of_range("qubit " + std::to_string(q) + " out of range");
  }
  void check_width(const PauliString& p) const {
    if (p.size() != n_) throw std::invalid_argument("Pauli width does not match tableau");
  }

  std::size_t n_;
  std::size_t words_;
  std::vector<std::uint64_t> xs_;
  std::vector<std::uint64_t> zs_;
  std::vector<std::uint8_t> signs_;
};

/// Free-function surface mirroring the operations the rest of the library uses.
inline StabilizerTableau new_tableau(std::size_t n) { return StabilizerTableau(n); }

inline void apply_gate(StabilizerTableau& t, GateKind kind, std::span<const std::size_t> qubits) {
  if (kind == GateKind::CZ) {
    if (qubits.size() != 2) throw std::invalid_argument("CZ takes exactly two targets");
  }
  t.apply(kind, qubits);
}

}  // namespace spinsim
