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

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "spinsim/circuit.hpp"
#include "spinsim/frame.hpp"
#include "spinsim/protocols.hpp"
#include "spinsim/random.hpp"

namespace spinsim {

using Counts = std::array<std::size_t, kNumCategories>;
using Probs = std::array<double, kNumCategories>;
using WeightVector = std::array<std::uint32_t, kNumCategories>;

/// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      c_ += (sum_ - t) + v;
    } else {
      c_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

/// log(C(n, w) p^w (1-p)^(n-w)); -inf when the term vanishes.
inline double log_binomial_term(std::size_t n, std::size_t w, double p) {
  if (w > n) throw std::invalid_argument("subset weight exceeds location count");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside [0, 1]");
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (p == 0.0) return w == 0 ? 0.0 : kNegInf;
  if (p == 1.0) return w == n ? 0.0 : kNegInf;
  const double dn = static_cast<double>(n);
  const double dw = static_cast<double>(w);
  return std::lgamma(dn + 1) - std::lgamma(dw + 1) - std::lgamma(dn - dw + 1) + dw * std::log(p) +
         (dn - dw) * std::log1p(-p);
}

/// A_w = prod_i C(n_i, w_i) p_i^w_i (1 - p_i)^(n_i - w_i).
inline double subset_weight(const WeightVector& w, const Counts& n, const Probs& p) {
  double log_a = 0.0;
  for (std::size_t i = 0; i < kNumCategories; ++i) log_a += log_binomial_term(n[i], w[i], p[i]);
  return std::exp(log_a);
}

struct WeightedSubset {
  WeightVector w;
  double a_w;
};

/// Every w with A_w > threshold, sorted by decreasing A_w (ties by w).
///
/// Depth-first over categories. A branch is abandoned once the partial
/// product times the largest attainable factor of each remaining category
/// cannot exceed the threshold, so no qualifying w is missed.
inline std::vector<WeightedSubset> enumerate_subsets(const Counts& n, const Probs& p,
                                                     double threshold = 1e-6) {
  if (!(threshold > 0.0)) throw std::invalid_argument("threshold must be positive");
  std::vector<WeightedSubset> out;
  if (threshold >= 1.0) return out;
  const double log_thr = std::log(threshold);
  std::array<std::vector<double>, kNumCategories> terms;
  std::array<double, kNumCategories + 1> suffix_max{};
  for (std::size_t i = 0; i < kNumCategories; ++i) {
    terms[i].resize(n[i] + 1);
    for (std::size_t w = 0; w <= n[i]; ++w) terms[i][w] = log_binomial_term(n[i], w, p[i]);
  }
  suffix_max[kNumCategories] = 0.0;
  for (std::size_t i = kNumCategories; i-- > 0;) {
    suffix_max[i] = suffix_max[i + 1] + *std::max_element(terms[i].begin(), terms[i].end());
  }
  WeightVector w{};
  std::function<void(std::size_t, double)> dfs = [&](std::size_t depth, double partial) {
    if (depth == kNumCategories) {
      if (partial > log_thr) out.push_back({w, std::exp(partial)});
      return;
    }
    for (std::size_t k = 0; k <= n[depth]; ++k) {
      const double next = partial + terms[depth][k];
      if (next + suffix_max[depth + 1] <= log_thr) continue;
      w[depth] = static_cast<std::uint32_t>(k);
      dfs(depth + 1, next);
    }
    w[depth] = 0;
  };
  dfs(0, 0.0);
  std::sort(out.begin(), out.end(), [](const WeightedSubset& a, const WeightedSubset& b) {
    if (a.a_w != b.a_w) return a.a_w > b.a_w;
    return a.w < b.w;
  });
  return out;
}

struct SubsetEstimate {
  WeightVector w{};
  double a_w = 0.0;
  std::uint64_t shots = 0;
  std::uint64_t failures = 0;

  double p_l() const { return shots ? static_cast<double>(failures) / static_cast<double>(shots) : 0.0; }
  double std_err() const {
    if (shots == 0) return 0.0;
    const double p = p_l();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(shots));
  }
};

struct BoundPair {
  double lower = 0.0;
  double upper = 1.0;
  double sampled_mass = 0.0;
  double std_err = 0.0;
};

/// lower = sum A_w p_w, upper = lower + (1 - sum A_w).
inline BoundPair combine_bounds(std::span<const SubsetEstimate> estimates) {
  std::set<WeightVector> seen;
  CompensatedSum lower;
  CompensatedSum mass;
  CompensatedSum var;
  for (const auto& e : estimates) {
    if (!seen.insert(e.w).second) throw std::invalid_argument("duplicate subset in bound combination");
    lower.add(e.a_w * e.p_l());
    mass.add(e.a_w);
    const double s = e.a_w * e.std_err();
    var.add(s * s);
  }
  BoundPair b;
  b.lower = lower.value();
  b.sampled_mass = mass.value();
  b.upper = b.lower + (1.0 - b.sampled_mass);
  b.std_err = std::sqrt(var.value());
  return b;
}

/// Anything that can be sampled: categorized fault locations plus a shot
/// function taking active location indices.
template <class M>
concept FaultModel = requires(const M& m, std::span<const std::uint32_t> faults, SplitMix64& rng,
                              std::size_t i) {
  { m.members(i) } -> std::convertible_to<std::span<const std::uint32_t>>;
  { m.fails(faults, rng) } -> std::convertible_to<bool>;
};

/// Frame-backend sampling model of a protocol.
struct ProtocolModel {
  const Protocol* protocol;

  explicit ProtocolModel(const Protocol& p) : protocol(&p) {}
  std::span<const std::uint32_t> members(std::size_t i) const { return protocol->by_category[i]; }
  bool fails(std::span<const std::uint32_t> faults, SplitMix64& rng) const {
    return frame_shot_fails(*protocol, faults, rng);
  }
};

/// Draws k distinct indices in [0, n) (Floyd's algorithm).
inline void choose_without_replacement(std::size_t n, std::size_t k, SplitMix64& rng,
                                       std::vector<std::uint32_t>& out) {
  const std::size_t start = out.size();
  for (std::size_t j = n - k; j < n; ++j) {
    const auto t = static_cast<std::uint32_t>(rng.below(j + 1));
    bool present = false;
    for (std::size_t i = start; i < out.size(); ++i) {
      if (out[i] == t) {
        present = true;
        break;
      }
    }
    out.push_back(present ? static_cast<std::uint32_t>(j) : t);
  }
}

inline std::uint64_t subset_stream_id(const WeightVector& w) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint32_t v : w) h = mix64(h ^ (v + 0x9e3779b97f4a7c15ULL));
  return h;
}

/// Number of workers: SPINSIM_WORKERS when set, else hardware concurrency.
inline std::size_t default_workers() {
  if (const char* env = std::getenv("SPINSIM_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

/// Runs `count` independent jobs on `workers` threads. Each job writes only
/// its own slot, so results do not depend on scheduling.
inline void parallel_for(std::size_t count, std::size_t workers,
                         const std::function<void(std::size_t)>& job) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          job(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

/// Failure count over shots [first, first + count) of subset `w`.
template <FaultModel M>
std::uint64_t count_failures(const M& model, const WeightVector& w, std::uint64_t seed,
                             std::uint64_t first, std::uint64_t count) {
  const std::uint64_t stream = subset_stream_id(w);
  std::vector<std::uint32_t> picks;
  std::vector<std::uint32_t> faults;
  std::uint64_t failures = 0;
  for (std::uint64_t s = first; s < first + count; ++s) {
    SplitMix64 rng = SplitMix64::for_stream(seed, stream, s);
    faults.clear();
    for (std::size_t i = 0; i < kNumCategories; ++i) {
      if (w[i] == 0) continue;
      const auto members = model.members(i);
      picks.clear();
      choose_without_replacement(members.size(), w[i], rng, picks);
      for (std::uint32_t k : picks) faults.push_back(members[k]);
    }
    failures += model.fails(faults, rng) ? 1 : 0;
  }
  return failures;
}

/// Fixed-size Monte Carlo estimate of one subset.
template <FaultModel M>
SubsetEstimate sample_subset(const M& model, const WeightVector& w, double a_w,
                             std::uint64_t shots, std::uint64_t seed) {
  if (shots == 0) throw std::invalid_argument("shots must be positive");
  for (std::size_t i = 0; i < kNumCategories; ++i) {
    if (w[i] > model.members(i).size()) throw std::invalid_argument("subset weight exceeds location count");
  }
  SubsetEstimate e;
  e.w = w;
  e.a_w = a_w;
  e.shots = shots;
  e.failures = count_failures(model, w, seed, 0, shots);
  return e;
}

/// Shot budget per subset. A pilot pass of `initial` shots fixes a reference
/// lower bound L; each subset is then doubled until A_w * std_err falls below
/// `rel_tol` * L or the cap is reached.
struct ShotPolicy {
  std::uint64_t initial = 10'000;
  std::uint64_t cap = 1'000'000;
  double rel_tol = 0.05;
  bool adaptive = true;
};

struct SamplerConfig {
  double threshold = 1e-6;
  ShotPolicy shots;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  double timeout_s = 0.0;  // 0 disables the wall-clock guard
};

struct SamplerResult {
  std::vector<SubsetEstimate> subsets;
  BoundPair bounds;
  bool partial = false;  // true when the wall-clock guard cut sampling short
};

template <FaultModel M>
SamplerResult importance_sample(const M& model, const Probs& probs, const SamplerConfig& cfg) {
  Counts n{};
  for (std::size_t i = 0; i < kNumCategories; ++i) n[i] = model.members(i).size();
  const auto subsets = enumerate_subsets(n, probs, cfg.threshold);
  SamplerResult result;
  result.subsets.resize(subsets.size());
  const auto t0 = std::chrono::steady_clock::now();
  auto expired = [&] {
    if (cfg.timeout_s <= 0.0) return false;
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    return dt.count() > cfg.timeout_s;
  };
  std::atomic<bool> cut{false};

  // Work unit: (subset, chunk of shots). Chunks keep the pool busy when a
  // few heavy subsets dominate.
  constexpr std::uint64_t kChunk = 2'500;
  auto run_pass = [&](const std::vector<std::pair<std::size_t, std::uint64_t>>& targets) {
    struct Unit {
      std::size_t subset;
      std::uint64_t first;
      std::uint64_t count;
    };
    std::vector<Unit> units;
    for (auto [idx, total] : targets) {
      const std::uint64_t have = result.subsets[idx].shots;
      for (std::uint64_t s = have; s < total; s += kChunk) {
        units.push_back({idx, s, std::min(kChunk, total - s)});
      }
    }
    std::vector<std::uint64_t> fails(units.size(), 0);
    std::vector<char> done(units.size(), 0);
    parallel_for(units.size(), cfg.workers, [&](std::size_t u) {
      if (expired()) {
        cut.store(true);
        return;
      }
      fails[u] = count_failures(model, subsets[units[u].subset].w, cfg.seed, units[u].first,
                                units[u].count);
      done[u] = 1;
    });
    // Merge in unit order; an interrupted subset keeps its completed prefix.
    std::vector<bool> broken(result.subsets.size(), false);
    for (std::size_t u = 0; u < units.size(); ++u) {
      auto& e = result.subsets[units[u].subset];
      if (!done[u] || broken[units[u].subset]) {
        broken[units[u].subset] = true;
        continue;
      }
      e.shots += units[u].count;
      e.failures += fails[u];
    }
  };

  for (std::size_t i = 0; i < subsets.size(); ++i) {
    result.subsets[i].w = subsets[i].w;
    result.subsets[i].a_w = subsets[i].a_w;
  }
  std::vector<std::pair<std::size_t, std::uint64_t>> targets;
  for (std::size_t i = 0; i < subsets.size(); ++i) targets.emplace_back(i, cfg.shots.initial);
  run_pass(targets);

  if (cfg.shots.adaptive && !cut.load()) {
    const double reference = combine_bounds(result.subsets).lower;
    for (;;) {
      targets.clear();
      for (std::size_t i = 0; i < result.subsets.size(); ++i) {
        const auto& e = result.subsets[i];
        if (e.shots >= cfg.shots.cap) continue;
        if (e.a_w * e.std_err() > cfg.shots.rel_tol * reference) {
          targets.emplace_back(i, std::min(cfg.shots.cap, 2 * e.shots));
        }
      }
      if (targets.empty() || cut.load()) break;
      run_pass(targets);
    }
  }
  // Subsets without any completed shot carry no estimate.
  std::vector<SubsetEstimate> kept;
  for (const auto& e : result.subsets) {
    if (e.shots > 0) kept.push_back(e);
  }
  result.subsets = std::move(kept);
  result.partial = cut.load();
  result.bounds = combine_bounds(result.subsets);
  return result;
}

struct DirectEstimate {
  std::uint64_t shots = 0;
  std::uint64_t failures = 0;
  double p_l() const { return shots ? static_cast<double>(failures) / static_cast<double>(shots) : 0.0; }
  double std_err() const {
    if (shots == 0) return 0.0;
    const double p = p_l();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(shots));
  }
};

/// Independent Bernoulli faults at every location, drawn by geometric
/// skipping within each category.
template <FaultModel M>
DirectEstimate direct_sample(const M& model, const Probs& probs, std::uint64_t shots,
                             std::uint64_t seed, std::size_t workers = 1) {
  if (shots == 0) throw std::invalid_argument("shots must be positive");
  constexpr std::uint64_t kChunk = 5'000;
  const std::size_t units = static_cast<std::size_t>((shots + kChunk - 1) / kChunk);
  std::vector<std::uint64_t> fails(units, 0);
  parallel_for(units, workers, [&](std::size_t u) {
    std::vector<std::uint32_t> faults;
    const std::uint64_t first = u * kChunk;
    const std::uint64_t last = std::min(shots, first + kChunk);
    for (std::uint64_t s = first; s < last; ++s) {
      SplitMix64 rng = SplitMix64::for_stream(seed, 0xd1ec7ULL, s);
      faults.clear();
      for (std::size_t i = 0; i < kNumCategories; ++i) {
        const double p = probs[i];
        if (p <= 0.0) continue;
        const auto members = model.members(i);
        if (p >= 1.0) {
          faults.insert(faults.end(), members.begin(), members.end());
          continue;
        }
        const double log_q = std::log1p(-p);
        double pos = -1.0;
        for (;;) {
          const double u01 = 1.0 - rng.uniform();  // (0, 1]
          pos += 1.0 + std::floor(std::log(u01) / log_q);
          if (pos >= static_cast<double>(members.size())) break;
          faults.push_back(members[static_cast<std::size_t>(pos)]);
        }
      }
      fails[u] += model.fails(faults, rng) ? 1 : 0;
    }
  });
  DirectEstimate d;
  d.shots = shots;
  for (auto f : fails) d.failures += f;
  return d;
}

/// Per-subset ledger: w_1..w_8, A_w, shots, failures, p_L_w, std_err.
inline void write_subset_ledger(std::ostream& out, std::span<const SubsetEstimate> subsets) {
  out << "w_1,w_2,w_3,w_4,w_5,w_6,w_7,w_8,A_w,shots,failures,p_L_w,std_err\n";
  for (const auto& e : subsets) {
    for (std::uint32_t v : e.w) out << v << ',';
    out << format_double(e.a_w) << ',' << e.shots << ',' << e.failures << ','
        << format_double(e.p_l()) << ',' << format_double(e.std_err()) << '\n';
  }
}

}  // namespace spinsim
