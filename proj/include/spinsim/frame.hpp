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
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>

#include "spinsim/protocols.hpp"
#include "spinsim/random.hpp"

namespace spinsim {

/// Pauli-frame backend. Tracks only the Pauli difference between the noisy
/// run and the protocol's noiseless reference run.
///
/// Measurement outcomes are the reference outcome flipped by the frame's X
/// component. Preparation and measurement randomize the Z component, which
/// is a stabilizer of the reference state at that point; propagating it
/// reproduces the outcome distribution of non-deterministic measurements.
/// Blocks skipped by a branch leave the data reference unchanged because a
/// noiseless check round on a code state is the identity on the data.
class FrameBackend {
 public:
  explicit FrameBackend(SplitMix64& rng) : rng_(rng) {}

  void begin(const Protocol& p) {
    if (p.n_qubits > 64) throw std::invalid_argument("frame backend supports up to 64 qubits");
    x_ = 0;
    z_ = 0;
  }

  void prep(std::size_t q) {
    const std::uint64_t b = bit(q);
    x_ &= ~b;
    z_ = (z_ & ~b) | (rng_.coin() ? b : 0);
  }

  bool measure(std::size_t q, bool reference_flip) {
    const std::uint64_t b = bit(q);
    const bool flip = ((x_ & b) != 0) != reference_flip;
    z_ = (z_ & ~b) | (rng_.coin() ? b : 0);
    return flip;
  }

  // RY(+-pi/2) swap the X and Z components up to sign.
  void ry_plus(std::size_t q) { swap_xz(q); }
  void ry_minus(std::size_t q) { swap_xz(q); }

  void cz(std::size_t a, std::size_t b) {
    const std::uint64_t xa = (x_ >> a) & 1U;
    const std::uint64_t xb = (x_ >> b) & 1U;
    z_ ^= (xb << a) | (xa << b);
  }

  void inject(const FaultLocation& f) {
    switch (f.pauli) {
      case FaultPauli::X:
        x_ ^= bit(f.q0);
        break;
      case FaultPauli::Y:
        x_ ^= bit(f.q0);
        z_ ^= bit(f.q0);
        break;
      case FaultPauli::Z:
        z_ ^= bit(f.q0);
        break;
      case FaultPauli::ZZ:
        z_ ^= bit(f.q0) ^ bit(f.q1);
        break;
    }
  }

  void apply_data(std::uint16_t x_mask, std::uint16_t z_mask) {
    x_ ^= x_mask;
    z_ ^= z_mask;
  }

  std::pair<std::uint32_t, std::uint32_t> code_syndrome(const Protocol& p) const {
    std::uint32_t sx = p.reference_x_syndrome;
    std::uint32_t sz = p.reference_z_syndrome;
    for (std::size_t i = 0; i < p.code.x_stab.size(); ++i) {
      sx ^= static_cast<std::uint32_t>(std::popcount(z_ & p.code.x_stab[i]) & 1) << i;
    }
    for (std::size_t i = 0; i < p.code.z_stab.size(); ++i) {
      sz ^= static_cast<std::uint32_t>(std::popcount(x_ & p.code.z_stab[i]) & 1) << i;
    }
    return {sx, sz};
  }

  bool observable_flip(const Protocol& p) const {
    const bool anti = p.observable_is_x ? (std::popcount(z_ & p.code.logical_x) & 1)
                                        : (std::popcount(x_ & p.code.logical_z) & 1);
    return anti != p.reference_observable_flip;
  }

  std::uint64_t x_frame() const { return x_; }
  std::uint64_t z_frame() const { return z_; }

 private:
  static std::uint64_t bit(std::size_t q) { return std::uint64_t{1} << q; }

  void swap_xz(std::size_t q) {
    const std::uint64_t b = bit(q);
    const std::uint64_t diff = (x_ ^ z_) & b;
    x_ ^= diff;
    z_ ^= diff;
  }

  SplitMix64& rng_;
  std::uint64_t x_ = 0;
  std::uint64_t z_ = 0;
};

/// Runs `p` once on the frame backend and reports logical failure.
inline bool frame_shot_fails(const Protocol& p, std::span<const std::uint32_t> faults,
                             SplitMix64& rng) {
  FrameBackend be(rng);
  return execute(p, be, faults).logical_failure;
}

}  // namespace spinsim
