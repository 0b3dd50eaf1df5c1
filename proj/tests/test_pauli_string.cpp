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

#include <gtest/gtest.h>

#include <array>
#include <complex>
#include <stdexcept>

#include "spinsim/pauli_string.hpp"
#include "spinsim/random.hpp"

namespace {

using spinsim::Pauli;
using spinsim::PauliString;
using cplx = std::complex<double>;
using Mat2 = std::array<cplx, 4>;

Mat2 matrix(Pauli p) {
  const cplx i(0, 1);
  switch (p) {
    case Pauli::I:
      return {1, 0, 0, 1};
    case Pauli::X:
      return {0, 1, 1, 0};
    case Pauli::Y:
      return {0, -i, i, 0};
    case Pauli::Z:
      return {1, 0, 0, -1};
  }
  return {};
}

Mat2 mul(const Mat2& a, const Mat2& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2],
          a[2] * b[1] + a[3] * b[3]};
}

// Phase c with a * b = c * P for single-qubit Paulis, from explicit matrices.
cplx single_phase(Pauli a, Pauli b, Pauli& product) {
  const Mat2 m = mul(matrix(a), matrix(b));
  for (Pauli p : {Pauli::I, Pauli::X, Pauli::Y, Pauli::Z}) {
    const Mat2 r = matrix(p);
    for (cplx c : {cplx(1, 0), cplx(-1, 0), cplx(0, 1), cplx(0, -1)}) {
      bool eq = true;
      for (int k = 0; k < 4; ++k) eq = eq && std::abs(m[k] - c * r[k]) < 1e-12;
      if (eq) {
        product = p;
        return c;
      }
    }
  }
  throw std::logic_error("no Pauli match");
}

TEST(PauliString, ParsesDenseAndSparse) {
  const auto d = PauliString::from_dense("-XIZY");
  EXPECT_EQ(d.size(), 4U);
  EXPECT_EQ(d.sign(), -1);
  EXPECT_EQ(d.at(0), Pauli::X);
  EXPECT_EQ(d.at(1), Pauli::I);
  EXPECT_EQ(d.at(2), Pauli::Z);
  EXPECT_EQ(d.at(3), Pauli::Y);
  EXPECT_EQ(d.str(), "-X_ZY");
  EXPECT_EQ(d.sparse(), "-X0Z2Y3");

  const auto s = PauliString::from_sparse(9, "X0X3X6");
  EXPECT_EQ(s.weight(), 3U);
  EXPECT_TRUE(s.x(3));
  EXPECT_FALSE(s.z(3));
  EXPECT_EQ(PauliString::from_sparse(9, "I").sparse(), "+I");
  EXPECT_TRUE(PauliString::from_sparse(4, "+I").is_identity());
  // Repeated indices multiply.
  EXPECT_EQ(PauliString::from_sparse(2, "X0Z0").at(0), Pauli::Y);
}

TEST(PauliString, RejectsMalformedInput) {
  EXPECT_THROW(PauliString::from_dense("XQ"), std::invalid_argument);
  EXPECT_THROW(PauliString::from_sparse(3, "X3"), std::invalid_argument);
  EXPECT_THROW(PauliString::from_sparse(3, "X"), std::invalid_argument);
  EXPECT_THROW(PauliString::from_sparse(3, "W1"), std::invalid_argument);
}

TEST(PauliString, SingleQubitPhasesMatchMatrices) {
  for (Pauli a : {Pauli::I, Pauli::X, Pauli::Y, Pauli::Z}) {
    for (Pauli b : {Pauli::I, Pauli::X, Pauli::Y, Pauli::Z}) {
      Pauli expect_kind;
      const cplx phase = single_phase(a, b, expect_kind);
      std::array<std::uint64_t, 1> lx{(a == Pauli::X || a == Pauli::Y) ? 1ULL : 0ULL};
      std::array<std::uint64_t, 1> lz{(a == Pauli::Z || a == Pauli::Y) ? 1ULL : 0ULL};
      const std::array<std::uint64_t, 1> rx{(b == Pauli::X || b == Pauli::Y) ? 1ULL : 0ULL};
      const std::array<std::uint64_t, 1> rz{(b == Pauli::Z || b == Pauli::Y) ? 1ULL : 0ULL};
      const unsigned k = spinsim::mul_words_log_i(lx, lz, rx, rz);
      const cplx got = std::pow(cplx(0, 1), static_cast<int>(k));
      EXPECT_LT(std::abs(got - phase), 1e-12) << "a=" << int(a) << " b=" << int(b);
      EXPECT_EQ(PauliString::multiply_kinds(a, b), expect_kind);
    }
  }
}

TEST(PauliString, MultiWordProductPhaseMatchesPerQubitProduct) {
  spinsim::SplitMix64 rng(17);
  constexpr std::size_t n = 130;
  for (int trial = 0; trial < 200; ++trial) {
    PauliString a(n);
    PauliString b(n);
    for (std::size_t q = 0; q < n; ++q) {
      a.set(q, static_cast<Pauli>(rng.below(4)));
      b.set(q, static_cast<Pauli>(rng.below(4)));
    }
    cplx phase = 1;
    PauliString expect(n);
    for (std::size_t q = 0; q < n; ++q) {
      Pauli kind;
      phase *= single_phase(a.at(q), b.at(q), kind);
      expect.set(q, kind);
    }
    if (a.commutes_with(b)) {
      ASSERT_LT(std::abs(phase.imag()), 1e-9);
      const PauliString got = a * b;
      EXPECT_TRUE(got.same_up_to_sign(expect));
      EXPECT_EQ(got.sign(), phase.real() > 0 ? 1 : -1);
    } else {
      ASSERT_LT(std::abs(phase.real()), 1e-9);
      EXPECT_THROW(a * b, std::invalid_argument);
    }
  }
}

TEST(PauliString, SignsCompose) {
  auto a = PauliString::from_dense("-ZZ");
  const auto b = PauliString::from_dense("-ZZ");
  a *= b;
  EXPECT_TRUE(a.is_identity());
  EXPECT_EQ(a.sign(), 1);
  // XX * ZZ = (XZ)(XZ) = (-iY)(-iY) = -YY
  EXPECT_EQ(PauliString::from_dense("XX") * PauliString::from_dense("ZZ"),
            PauliString::from_dense("-YY"));
}

TEST(PauliString, CommutationIsSymplectic) {
  EXPECT_FALSE(PauliString::from_dense("XI").commutes_with(PauliString::from_dense("ZI")));
  EXPECT_TRUE(PauliString::from_dense("XX").commutes_with(PauliString::from_dense("ZZ")));
  EXPECT_TRUE(PauliString::from_dense("XY").commutes_with(PauliString::from_dense("XY")));
  EXPECT_TRUE(PauliString::from_dense("XYZ").commutes_with(PauliString::from_dense("ZZZ")));
  EXPECT_FALSE(PauliString::from_dense("XYZ").commutes_with(PauliString::from_dense("ZZX")));
}

TEST(PauliString, IgnoringPhaseDropsSign) {
  auto a = PauliString::from_dense("-XZ");
  a.mul_ignoring_phase(PauliString::from_dense("ZI"));
  EXPECT_EQ(a.str(), "+YZ");
}

TEST(PauliString, WidthMismatchThrows) {
  auto a = PauliString::from_dense("XX");
  EXPECT_THROW(a.commutes_with(PauliString::from_dense("XXX")), std::invalid_argument);
}

}  // namespace
