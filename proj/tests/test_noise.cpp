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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "oracles/anchors.hpp"
#include "spinsim/frame.hpp"
#include "spinsim/noise.hpp"
#include "spinsim/protocols.hpp"

namespace {

namespace fs = std::filesystem;
using spinsim::Encoding;
using spinsim::FaultCategory;
using spinsim::ReadoutModel;

fs::path temp_file(const std::string& name, const std::string& body) {
  const fs::path dir = fs::temp_directory_path() / "spinsim_noise_test";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p) << body;
  return p;
}

TEST(Noise, IdleProbabilityMatchesAnchors) {
  for (const auto& a : oracle::kIdleAnchors) {
    EXPECT_NEAR(spinsim::p_idle(a.t_us, a.t2_us), a.p, 1e-14 + 1e-12 * a.p)
        << "t=" << a.t_us << " T2=" << a.t2_us;
  }
  EXPECT_NEAR(spinsim::physical_baseline(48.64, 21.0), 0.497660657805, 1e-6);
}

TEST(Noise, IdleProbabilityIsMonotoneAndBelowHalf) {
  double prev = 0.0;
  for (double t = 0.0; t < 200.0; t += 0.37) {
    const double p = spinsim::p_idle(t, 14.8);
    EXPECT_GE(p, prev);
    EXPECT_LE(p, 0.5);
    prev = p;
  }
  EXPECT_EQ(spinsim::p_idle(0.0, 21.0), 0.0);
  EXPECT_EQ(spinsim::p_idle(48.64, spinsim::kInfiniteT2), 0.0);
  EXPECT_THROW(spinsim::p_idle(-1.0, 21.0), std::invalid_argument);
  EXPECT_THROW(spinsim::p_idle(1.0, 0.0), std::invalid_argument);
}

TEST(Noise, TableDefaults) {
  const auto ld = spinsim::table1_ld();
  EXPECT_EQ(ld.T2_star, 21.0);
  EXPECT_EQ(ld.p_1q, 4e-4);
  EXPECT_EQ(ld.t_cz, 0.040);
  EXPECT_EQ(ld.p_cz, 2e-3);
  EXPECT_EQ(ld.t_ramp, 0.0);
  EXPECT_EQ(ld.t_int, 24.0);
  EXPECT_EQ(ld.readout_infidelity(), 2.4e-3);
  EXPECT_EQ(ld.p_prep, 6.5e-3);
  const auto st = spinsim::table1_st();
  EXPECT_EQ(st.T2_star, 14.8);
  EXPECT_EQ(st.p_1q, 4e-3);
  EXPECT_EQ(st.t_cz, 0.040);
  EXPECT_EQ(st.p_cz, 4e-3);
  EXPECT_EQ(st.t_ramp, 0.4);
  EXPECT_EQ(st.t_int, 2.0);
  EXPECT_NEAR(st.readout_infidelity(), 4e-4, 1e-15);
  EXPECT_EQ(st.p_prep, 4e-3);
}

TEST(Noise, FallbackReadoutCurve) {
  const auto m = ReadoutModel::parametric();
  EXPECT_NEAR(m.a(), oracle::kFallbackA, 1e-15);
  EXPECT_NEAR(m.b(), oracle::kFallbackB, 1e-17);
  EXPECT_NEAR(m.infidelity(2.0), 4e-4, 1e-16);
  EXPECT_NEAR(m.infidelity(0.88), oracle::kFallbackAt088, 1e-16);
  // Minimum at 1.4 us.
  double best_t = 0.0;
  double best = 1.0;
  for (int i = 1; i <= 4000; ++i) {
    const double t = i * 1e-3;
    if (m.infidelity(t) < best) {
      best = m.infidelity(t);
      best_t = t;
    }
  }
  EXPECT_NEAR(best_t, 1.4, 1e-3);
  EXPECT_THROW(m.infidelity(0.0), std::invalid_argument);
}

TEST(Noise, DigitizedCurveInterpolatesMonotonically) {
  const std::vector<double> t{0.2, 0.5, 1.0, 2.0, 4.0};
  const std::vector<double> p{0.2, 0.05, 0.004, 0.001, 0.001};
  const auto m = ReadoutModel::digitized(t, p);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_DOUBLE_EQ(m.infidelity(t[i]), p[i]);
  double prev = 1.0;
  for (double x = 0.2; x <= 4.0; x += 1e-3) {
    const double v = m.infidelity(x);
    EXPECT_LE(v, prev + 1e-15) << x;
    EXPECT_GE(v, 0.001 - 1e-15);
    prev = v;
  }
  EXPECT_EQ(m.infidelity(0.1), 0.2);
  EXPECT_EQ(m.infidelity(9.0), 0.001);
  EXPECT_THROW(ReadoutModel::digitized({1.0, 1.0}, {0.1, 0.2}), std::invalid_argument);
  EXPECT_THROW(ReadoutModel::digitized({1.0}, {0.1}), std::invalid_argument);
  EXPECT_THROW(ReadoutModel::digitized({1.0, 2.0}, {0.1, 1.5}), std::invalid_argument);
}

TEST(Noise, LoadsReadoutCurveFiles) {
  const auto good = temp_file("curve.csv", "t_int_us,infidelity\n# note\n0.5, 0.01\n1.0,0.002\n");
  const auto m = spinsim::load_readout_curve(good.string());
  EXPECT_EQ(m.samples_t().size(), 2U);
  EXPECT_DOUBLE_EQ(m.infidelity(1.0), 0.002);
  const auto bad_header = temp_file("bad_header.csv", "t,p\n0.5,0.01\n");
  EXPECT_THROW(spinsim::load_readout_curve(bad_header.string()), std::runtime_error);
  const auto bad_number = temp_file("bad_number.csv", "t_int_us,infidelity\n0.5,x\n");
  EXPECT_THROW(spinsim::load_readout_curve(bad_number.string()), std::runtime_error);
  const auto empty = temp_file("empty.csv", "t_int_us,infidelity\n");
  EXPECT_THROW(spinsim::load_readout_curve(empty.string()), std::runtime_error);
  EXPECT_THROW(spinsim::load_readout_curve("/nonexistent/curve.csv"), std::runtime_error);
}

TEST(Noise, OverridesReachEveryField) {
  auto p = spinsim::table1_defaults(Encoding::Hybrid);
  spinsim::apply_override(p, "st.T2_star", 10.0);
  spinsim::apply_override(p, "ld.p_1q", 1e-5);
  spinsim::apply_override(p, "ld.t_cz", 0.0);
  spinsim::apply_override(p, "st.t_int", 0.9);
  spinsim::apply_override(p, "st.t_ramp", 0.1);
  spinsim::apply_override(p, "ld.p_prep", 0.01);
  spinsim::apply_override(p, "st.t_prep", 0.2);
  EXPECT_EQ(p.st.T2_star, 10.0);
  EXPECT_EQ(p.ld.p_1q, 1e-5);
  EXPECT_EQ(p.ld.t_cz, 0.0);
  EXPECT_EQ(p.st.t_int, 0.9);
  EXPECT_EQ(p.st.readout_time(), 1.0);
  EXPECT_EQ(p.ld.p_prep, 0.01);
  EXPECT_EQ(p.st.t_prep, 0.2);
  EXPECT_THROW(spinsim::apply_override(p, "st.bogus", 1.0), std::invalid_argument);
  EXPECT_THROW(spinsim::apply_override(p, "T2_star", 1.0), std::invalid_argument);
  EXPECT_TRUE(spinsim::is_parameter_key("ld.p_readout"));
  EXPECT_FALSE(spinsim::is_parameter_key("t_int"));
}

TEST(Noise, CrossCzFollowsStUnlessSet) {
  auto p = spinsim::table1_defaults(Encoding::Hybrid);
  EXPECT_EQ(p.hybrid_cz(), 4e-3);
  spinsim::apply_override(p, "st.p_cz", 4e-4);
  EXPECT_EQ(p.hybrid_cz(), 4e-4);
  spinsim::apply_override(p, "hybrid.p_cz", 1e-3);
  spinsim::apply_override(p, "st.p_cz", 2e-3);
  EXPECT_EQ(p.hybrid_cz(), 1e-3);
  EXPECT_EQ(p.cz_probability(spinsim::QubitType::LD, spinsim::QubitType::LD), p.ld.p_cz);
  EXPECT_EQ(p.cz_probability(spinsim::QubitType::ST, spinsim::QubitType::ST), 2e-3);
}

TEST(Noise, CategoryProbabilitiesPerProtocol) {
  const auto surface = spinsim::surface17_spec();
  {
    const auto params = spinsim::table1_defaults(Encoding::Hybrid);
    const auto probs = spinsim::fault_probabilities(params, spinsim::make_qec_step(surface, params));
    EXPECT_EQ(probs[0], 4e-3);
    EXPECT_NEAR(probs[1], 4e-4, 1e-15);
    EXPECT_EQ(probs[2], 4e-3);
    EXPECT_EQ(probs[3], 4e-3);
    EXPECT_EQ(probs[4], 0.0);
    EXPECT_NEAR(probs[5], oracle::kIdleAnchors[0].p, 1e-15);
    EXPECT_NEAR(probs[6], oracle::kIdleAnchors[4].p, 1e-18);
    EXPECT_NEAR(probs[7], oracle::kIdleAnchors[5].p, 1e-18);
  }
  {
    const auto params = spinsim::table1_defaults(Encoding::AllLD);
    const auto probs = spinsim::fault_probabilities(params, spinsim::make_qec_step(surface, params));
    EXPECT_EQ(probs[0], 6.5e-3);
    EXPECT_EQ(probs[1], 2.4e-3);
    EXPECT_EQ(probs[2], 4e-4);
    EXPECT_EQ(probs[3], 2e-3);
    EXPECT_NEAR(probs[5], oracle::kIdleAnchors[8].p, 1e-15);
    EXPECT_EQ(probs[6], probs[7]);
  }
  {
    // No ancillas: the LD column applies even in a hybrid device.
    const auto params = spinsim::table1_defaults(Encoding::Hybrid);
    const auto probs = spinsim::fault_probabilities(params, spinsim::make_bs_prep(params));
    EXPECT_EQ(probs[0], 6.5e-3);
    EXPECT_EQ(probs[2], 4e-4);
    EXPECT_EQ(probs[3], 2e-3);
    EXPECT_NEAR(probs[6], oracle::kIdleAnchors[4].p, 1e-18);
  }
}

TEST(Noise, PerQubitAttributionRejectsMixedCategories) {
  auto params = spinsim::table1_defaults(Encoding::Hybrid);
  params.attribution = spinsim::GateAttribution::PerQubit;
  const auto step = spinsim::make_qec_step(spinsim::surface17_spec(), params);
  EXPECT_THROW(spinsim::fault_probabilities(params, step), std::invalid_argument);
  // All-LD has one qubit type, so per-qubit attribution is consistent.
  auto ld = spinsim::table1_defaults(Encoding::AllLD);
  ld.attribution = spinsim::GateAttribution::PerQubit;
  EXPECT_NO_THROW(spinsim::fault_probabilities(ld, spinsim::make_qec_step(spinsim::surface17_spec(), ld)));
}

TEST(Noise, LoadsParameterFiles) {
  auto p = spinsim::table1_defaults(Encoding::Hybrid);
  const auto good = temp_file("params.txt", "# sweep base\nst.p_cz = 1e-3\n  ld.T2_star=30 # echo\n\n");
  spinsim::load_params_file(p, good.string());
  EXPECT_EQ(p.st.p_cz, 1e-3);
  EXPECT_EQ(p.ld.T2_star, 30.0);
  const auto bad_key = temp_file("bad_key.txt", "st.nope = 1\n");
  EXPECT_THROW(spinsim::load_params_file(p, bad_key.string()), std::invalid_argument);
  const auto bad_value = temp_file("bad_value.txt", "st.p_cz = 1e-3x\n");
  EXPECT_THROW(spinsim::load_params_file(p, bad_value.string()), std::invalid_argument);
  const auto no_eq = temp_file("no_eq.txt", "st.p_cz 1e-3\n");
  EXPECT_THROW(spinsim::load_params_file(p, no_eq.string()), std::invalid_argument);
  EXPECT_THROW(spinsim::load_params_file(p, "/nonexistent/params.txt"), std::runtime_error);
}

// An ancilla's reported outcome flips when an odd number of its prep, two
// rotation and measurement faults fire, so to first order the effective
// readout error is p_prep + p_meas + 2 p_1q. The exact odd-parity
// probability is compared with sampled flips of the first X-check outcome.
TEST(Noise, EffectiveAncillaReadoutError) {
  for (Encoding e : {Encoding::Hybrid, Encoding::AllLD}) {
    const auto params = spinsim::table1_defaults(e);
    const auto step = spinsim::make_qec_step(spinsim::surface17_spec(), params);
    const auto probs = spinsim::fault_probabilities(params, step);
    const std::size_t anc = spinsim::x_ancilla(0);
    std::vector<std::uint32_t> sites;
    std::vector<double> site_p;
    for (std::uint32_t i = 0; i < step.locations.size(); ++i) {
      const auto& f = step.locations[i];
      if (f.block != 0 || f.q0 != anc) continue;
      const auto c = static_cast<std::size_t>(f.category);
      if (c > 2) continue;
      sites.push_back(i);
      site_p.push_back(probs[c]);
    }
    ASSERT_EQ(sites.size(), 4U);
    double keep = 1.0;
    for (double p : site_p) keep *= 1.0 - 2.0 * p;
    const double exact = 0.5 * (1.0 - keep);
    const double pa = params.ancilla().p_prep + params.ancilla().readout_infidelity() +
                      2 * params.ancilla().p_1q;
    EXPECT_NEAR(exact, pa, 2 * pa * pa);

    constexpr int kShots = 100'000;
    spinsim::SplitMix64 rng(77);
    int flips = 0;
    std::vector<std::uint32_t> active;
    for (int s = 0; s < kShots; ++s) {
      active.clear();
      for (std::size_t k = 0; k < sites.size(); ++k)
        if (rng.uniform() < site_p[k]) active.push_back(sites[k]);
      spinsim::FrameBackend be(rng);
      const auto out = spinsim::execute(step, be, active);
      flips += out.records()[0].flips & 1U;
    }
    const double sigma = std::sqrt(exact * (1 - exact) / kShots);
    EXPECT_NEAR(static_cast<double>(flips) / kShots, exact, 3 * sigma) << spinsim::to_string(e);
  }
}

}  // namespace
