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

#include <bit>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spinsim {

enum class Pauli : std::uint8_t { I = 0, X = 1, Z = 2, Y = 3 };

inline constexpr std::size_t words_for(std::size_t n) { return (n + 63) / 64; }

/// Accumulates the power of i picked up when multiplying Hermitian Pauli
/// products word by word. `lhs` is overwritten with lhs * rhs (unsigned part).
/// The returned value is the exponent k (mod 4) in lhs * rhs = i^k * P.
inline unsigned mul_words_log_i(std::span<std::uint64_t> lx, std::span<std::uint64_t> lz,
                                std::span<const std::uint64_t> rx,
                                std::span<const std::uint64_t> rz) {
  unsigned cnt1 = 0;
  unsigned cnt2 = 0;
  for (std::size_t w = 0; w < lx.size(); ++w) {
    const std::uint64_t x1 = lx[w];
    const std::uint64_t z1 = lz[w];
    const std::uint64_t x2 = rx[w];
    const std::uint64_t z2 = rz[w];
    const std::uint64_t nx = x1 ^ x2;
    const std::uint64_t nz = z1 ^ z2;
    const std::uint64_t x1z2 = x1 & z2;
    const std::uint64_t anti = (x2 & z1) ^ x1z2;
    // Per-bit mod-4 counters: low bit in c1, high bit in c2.
    std::uint64_t c1 = 0;
    std::uint64_t c2 = 0;
    c2 ^= (c1 ^ nx ^ nz ^ x1z2) & anti;
    c1 ^= anti;
    cnt1 += static_cast<unsigned>(std::popcount(c1));
    cnt2 += static_cast<unsigned>(std::popcount(c2));
    lx[w] = nx;
    lz[w] = nz;
  }
  return (cnt1 + 2 * cnt2) & 3U;
}

/// A signed, Hermitian n-qubit Pauli operator stored as bit-packed X/Z masks.
/// Y on a qubit is encoded as x = z = 1.
class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(std::size_t n) : n_(n), xs_(words_for(n), 0), zs_(words_for(n), 0) {}

  /// Parses dense ("+XIZY", "-ZZ", "XX") notation.
  static PauliString from_dense(std::string_view text) {
    bool negative = false;
    if (!text.empty() && (text.front() == '+' || text.front() == '-')) {
      negative = text.front() == '-';
      text.remove_prefix(1);
    }
    PauliString p(text.size());
    for (std::size_t q = 0; q < text.size(); ++q) {
      switch (std::toupper(static_cast<unsigned char>(text[q]))) {
        case 'I':
        case '_':
          break;
        case 'X':
          p.set(q, Pauli::X);
          break;
        case 'Y':
          p.set(q, Pauli::Y);
          break;
        case 'Z':
          p.set(q, Pauli::Z);
          break;
        default:
          throw std::invalid_argument("bad Pauli character in '" + std::string(text) + "'");
      }
    }
    if (negative) p.negate();
    return p;
  }

  /// Parses sparse notation such as "X0X3X6", "-Z1Z2", "+I" over n qubits.
  static PauliString from_sparse(std::size_t n, std::string_view text) {
    PauliString p(n);
    bool negative = false;
    if (!text.empty() && (text.front() == '+' || text.front() == '-')) {
      negative = text.front() == '-';
      text.remove_prefix(1);
    }
    if (text == "I" || text.empty()) {
      if (negative) p.negate();
      return p;
    }
    std::size_t i = 0;
    while (i < text.size()) {
      const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(text[i])));
      Pauli kind;
      if (c == 'X') {
        kind = Pauli::X;
      } else if (c == 'Y') {
        kind = Pauli::Y;
      } else if (c == 'Z') {
        kind = Pauli::Z;
      } else {
        throw std::invalid_argument("bad sparse Pauli '" + std::string(text) + "'");
      }
      ++i;
      std::size_t q = 0;
      const std::size_t start = i;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        q = q * 10 + static_cast<std::size_t>(text[i] - '0');
        ++i;
      }
      if (i == start || q >= n) {
        throw std::invalid_argument("bad qubit index in sparse Pauli '" + std::string(text) + "'");
      }
      p.set(q, multiply_kinds(p.at(q), kind));
    }
    if (negative) p.negate();
    return p;
  }

  static PauliString single(std::size_t n, std::size_t q, Pauli kind) {
    PauliString p(n);
    p.set(q, kind);
    return p;
  }

  static PauliString on(std::size_t n, Pauli kind, std::initializer_list<std::size_t> qubits) {
    return on(n, kind, std::span<const std::size_t>(qubits.begin(), qubits.size()));
  }

  static PauliString on(std::size_t n, Pauli kind, std::span<const std::size_t> qubits) {
    PauliString p(n);
    for (std::size_t q : qubits) p.set(q, kind);
    return p;
  }

  std::size_t size() const { return n_; }
  int sign() const { return negative_ ? -1 : 1; }
  bool negative() const { return negative_; }
  void negate() { negative_ = !negative_; }
  void set_sign(int s) { negative_ = s < 0; }

  bool x(std::size_t q) const { return (xs_[q >> 6] >> (q & 63)) & 1U; }
  bool z(std::size_t q) const { return (zs_[q >> 6] >> (q & 63)) & 1U; }

  Pauli at(std::size_t q) const {
    return static_cast<Pauli>(static_cast<unsigned>(x(q)) | (static_cast<unsigned>(z(q)) << 1));
  }

  void set(std::size_t q, Pauli kind) {
    check_qubit(q);
    const std::uint64_t bit = std::uint64_t{1} << (q & 63);
    const auto k = static_cast<unsigned>(kind);
    xs_[q >> 6] = (k & 1U) ? (xs_[q >> 6] | bit) : (xs_[q >> 6] & ~bit);
    zs_[q >> 6] = (k & 2U) ? (zs_[q >> 6] | bit) : (zs_[q >> 6] & ~bit);
  }

  std::span<const std::uint64_t> x_words() const { return xs_; }
  std::span<const std::uint64_t> z_words() const { return zs_; }
  std::span<std::uint64_t> x_words() { return xs_; }
  std::span<std::uint64_t> z_words() { return zs_; }

  /// Convenience accessors for registers of at most 64 qubits.
  std::uint64_t x_mask() const { return xs_.empty() ? 0 : xs_[0]; }
  std::uint64_t z_mask() const { return zs_.empty() ? 0 : zs_[0]; }

  bool is_identity() const {
    for (std::size_t w = 0; w < xs_.size(); ++w) {
      if (xs_[w] | zs_[w]) return false;
    }
    return true;
  }

  std::size_t weight() const {
    std::size_t total = 0;
    for (std::size_t w = 0; w < xs_.size(); ++w) total += std::popcount(xs_[w] | zs_[w]);
    return total;
  }

  bool commutes_with(const PauliString& other) const {
    check_width(other);
    unsigned parity = 0;
    for (std::size_t w = 0; w < xs_.size(); ++w) {
      parity ^= std::popcount((xs_[w] & other.zs_[w]) ^ (zs_[w] & other.xs_[w])) & 1;
    }
    return parity == 0;
  }

  /// this := this * rhs. Throws when the operators anticommute, since the
  /// product would carry an imaginary phase.
  PauliString& operator*=(const PauliString& rhs) {
    check_width(rhs);
    const unsigned k = mul_words_log_i(xs_, zs_, rhs.xs_, rhs.zs_);
    if (k & 1U) throw std::invalid_argument("product of anticommuting Paulis is not Hermitian");
    negative_ ^= ((k >> 1) & 1U) != 0;
    negative_ ^= rhs.negative_;
    return *this;
  }

  friend PauliString operator*(PauliString lhs, const PauliString& rhs) { return lhs *= rhs; }

  /// Multiplies the masks while discarding the phase. Used for composing error
  /// frames where only the Pauli class matters.
  PauliString& mul_ignoring_phase(const PauliString& rhs) {
    check_width(rhs);
    for (std::size_t w = 0; w < xs_.size(); ++w) {
      xs_[w] ^= rhs.xs_[w];
      zs_[w] ^= rhs.zs_[w];
    }
    negative_ = false;
    return *this;
  }

  bool same_up_to_sign(const PauliString& other) const {
    return n_ == other.n_ && xs_ == other.xs_ && zs_ == other.zs_;
  }

  friend bool operator==(const PauliString& a, const PauliString& b) {
    return a.same_up_to_sign(b) && a.negative_ == b.negative_;
  }

  /// Dense form, e.g. "+XI_Z" uses '_' for identity.
  std::string str() const {
    std::string out(1, negative_ ? '-' : '+');
    for (std::size_t q = 0; q < n_; ++q) out.push_back("_XZY"[static_cast<unsigned>(at(q))]);
    return out;
  }

  /// Sparse form, e.g. "+X0X3X6"; the identity is "+I".
  std::string sparse() const {
    std::string out(1, negative_ ? '-' : '+');
    bool any = false;
    for (std::size_t q = 0; q < n_; ++q) {
      const Pauli p = at(q);
      if (p == Pauli::I) continue;
      out.push_back("IXZY"[static_cast<unsigned>(p)]);
      out += std::to_string(q);
      any = true;
    }
    if (!any) out.push_back('I');
    return out;
  }

  static Pauli multiply_kinds(Pauli a, Pauli b) {
    return static_cast<Pauli>(static_cast<unsigned>(a) ^ static_cast<unsigned>(b));
  }

 private:
  void check_qubit(std::size_t q) const {
    if (q >= n_) throw std::out_of_range("qubit index out of range");
  }
  void check_width(const PauliString& other) const {
    if (other.n_ != n_) throw std::invalid_argument("Pauli width mismatch");
  }

  std::size_t n_ = 0;
  std::vector<std::uint64_t> xs_;
  std::vector<std::uint64_t> zs_;
  bool negative_ = false;
};

}  // namespace spinsim
