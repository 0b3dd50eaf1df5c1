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
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/anchors.hpp"
#include "spinsim/experiments.hpp"

namespace {

namespace fs = std::filesystem;
using spinsim::ConfigError;
using spinsim::ExperimentConfig;
using spinsim::ExperimentId;
using spinsim::SweepRow;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "spinsim_experiments_test" / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ExperimentConfig quick(ExperimentId id, const std::string& code, const std::string& grid) {
  ExperimentConfig c;
  c.experiment = id;
  c.code = code;
  c.grid = spinsim::parse_grid(grid);
  c.shots = spinsim::parse_shot_policy("fixed:500");
  c.threshold = 1e-3;
  c.seed = 42;
  return c;
}

TEST(Experiments, ParsesGrids) {
  EXPECT_EQ(spinsim::parse_grid("0.5,1,2"), (std::vector<double>{0.5, 1, 2}));
  EXPECT_EQ(spinsim::parse_grid("linspace:0:1:5"), (std::vector<double>{0, 0.25, 0.5, 0.75, 1}));
  const auto g = spinsim::parse_grid("logspace:0.1:10:3");
  ASSERT_EQ(g.size(), 3U);
  EXPECT_NEAR(g[0], 0.1, 1e-15);
  EXPECT_NEAR(g[1], 1.0, 1e-14);
  EXPECT_EQ(g[2], 10.0);
  EXPECT_EQ(spinsim::parse_grid("logspace:0.1:10:20").size(), 20U);
  EXPECT_TRUE(std::isinf(spinsim::parse_grid("21,inf").back()));
  for (const char* bad : {"", "1,1", "2,1", "1,,2", "linspace:1:2", "logspace:0:1:3",
                          "linspace:0:1:0", "linspace:0:1:2.5", "x"}) {
    EXPECT_THROW(spinsim::parse_grid(bad), ConfigError) << "'" << bad << "'";
  }
}

TEST(Experiments, ParsesShotPolicies) {
  const auto a = spinsim::parse_shot_policy("adaptive");
  EXPECT_TRUE(a.adaptive);
  EXPECT_EQ(a.initial, 10'000U);
  EXPECT_EQ(a.cap, 1'000'000U);
  EXPECT_EQ(spinsim::describe(a), "adaptive:10000:1000000");
  const auto f = spinsim::parse_shot_policy("fixed:2500");
  EXPECT_FALSE(f.adaptive);
  EXPECT_EQ(f.initial, 2500U);
  EXPECT_EQ(spinsim::describe(f), "fixed:2500");
  const auto c = spinsim::parse_shot_policy("adaptive:100:800");
  EXPECT_EQ(c.initial, 100U);
  EXPECT_EQ(c.cap, 800U);
  for (const char* bad : {"fixed:0", "fixed:1.5", "adaptive:10", "adaptive:10:5", "many"}) {
    EXPECT_THROW(spinsim::parse_shot_policy(bad), ConfigError) << bad;
  }
}

TEST(Experiments, ExperimentNames) {
  for (auto id : {ExperimentId::QecStep, ExperimentId::SurfacePrep, ExperimentId::BsPrep}) {
    EXPECT_EQ(spinsim::parse_experiment(spinsim::to_string(id)), id);
  }
  EXPECT_THROW(spinsim::parse_experiment("magic"), ConfigError);
}

TEST(Experiments, ValidationRejectsInconsistentConfigs) {
  ExperimentConfig c;
  EXPECT_NO_THROW(c.validate());
  auto expect_bad = [](ExperimentConfig bad) { EXPECT_THROW(bad.validate(), ConfigError); };
  {
    auto b = c;
    b.experiment = ExperimentId::SurfacePrep;
    b.code = "bs17";
    expect_bad(b);
  }
  {
    auto b = c;
    b.experiment = ExperimentId::BsPrep;
    expect_bad(b);
  }
  {
    auto b = c;
    b.code = "steane";
    expect_bad(b);
  }
  {
    auto b = c;
    b.sweep_variable = "t_coffee";
    expect_bad(b);
  }
  {
    auto b = c;
    b.overrides.emplace_back("st.nope", 1.0);
    expect_bad(b);
  }
  {
    auto b = c;
    b.grid = {2.0, 1.0};
    expect_bad(b);
  }
  {
    auto b = c;
    b.threshold = 0.0;
    expect_bad(b);
  }
  EXPECT_TRUE(spinsim::is_sweep_variable("T2_star"));
  EXPECT_TRUE(spinsim::is_sweep_variable("ld.p_cz"));
}

TEST(Experiments, ReadoutSelection) {
  EXPECT_EQ(spinsim::ReadoutSelection{"fallback"}.model().mode(),
            spinsim::ReadoutModel::Mode::Parametric);
  EXPECT_EQ(spinsim::ReadoutSelection{"const:1e-3"}.model().infidelity(0.3), 1e-3);
  EXPECT_THROW(spinsim::ReadoutSelection{"const:2"}.model(), ConfigError);
  EXPECT_THROW(spinsim::ReadoutSelection{"/nonexistent/curve.csv"}.model(), spinsim::IoError);
}

TEST(Experiments, ParametersAtGridPoints) {
  ExperimentConfig c;
  c.overrides = {{"st.p_cz", 4e-4}, {"st.t_int", 9.0}};
  auto p = spinsim::params_at(c, 0.7);
  EXPECT_EQ(p.st.t_int, 0.7);  // the sweep value wins over an override
  EXPECT_EQ(p.st.p_cz, 4e-4);
  EXPECT_EQ(p.hybrid_cz(), 4e-4);
  EXPECT_NEAR(p.st.readout_infidelity(), spinsim::ReadoutModel::parametric().infidelity(0.7), 0);

  c.overrides.clear();
  c.sweep_variable = "t_readout";
  p = spinsim::params_at(c, 1.5);
  EXPECT_EQ(p.st.t_ramp, 0.0);
  EXPECT_EQ(p.st.readout_time(), 1.5);
  EXPECT_EQ(p.ld.readout_time(), 15.0);
  EXPECT_EQ(p.st.readout_infidelity(), 4e-4);
  EXPECT_EQ(p.ld.readout_infidelity(), 2.4e-3);

  c.sweep_variable = "T2_star";
  p = spinsim::params_at(c, 30.0);
  EXPECT_EQ(p.ld.T2_star, 30.0);
  EXPECT_NEAR(p.st.T2_star, 30.0 / std::sqrt(2.0), 1e-14);
  EXPECT_THROW(spinsim::params_at(c, -1.0), ConfigError);

  c.sweep_variable = "ld.p_cz";
  EXPECT_EQ(spinsim::params_at(c, 1e-4).ld.p_cz, 1e-4);
  EXPECT_THROW(spinsim::params_at(c, 2.0), ConfigError);

  c.sweep_variable = "t_int";
  c.readout.text = "const:5e-3";
  EXPECT_EQ(spinsim::params_at(c, 1.0).st.readout_infidelity(), 5e-3);
}

TEST(Experiments, CsvRoundTrip) {
  const std::vector<SweepRow> rows = {
      {0.1, 1.5e-2, 1.6e-2, 3e-4, 0.03, 3e-4, 0.999, 0.0},
      {1.0 / 3.0, 2.0000000000000004e-2, 0.1 + 0.2, 1e-310, 0.5, 0.0, 1.0, 12.25},
  };
  std::stringstream s;
  spinsim::write_csv(s, rows);
  EXPECT_EQ(spinsim::parse_csv(s), rows);

  std::stringstream empty;
  spinsim::write_csv(empty, {});
  EXPECT_EQ(empty.str(), std::string(spinsim::kCsvHeader) + "\n");
  EXPECT_TRUE(spinsim::parse_csv(empty).empty());

  std::stringstream bad_header("a,b\n");
  EXPECT_THROW(spinsim::parse_csv(bad_header), std::invalid_argument);
  std::stringstream short_row(std::string(spinsim::kCsvHeader) + "\n1,2,3\n");
  EXPECT_THROW(spinsim::parse_csv(short_row), std::invalid_argument);
  std::stringstream bad_number(std::string(spinsim::kCsvHeader) + "\n1,2,3,4,5,6,7,x\n");
  EXPECT_THROW(spinsim::parse_csv(bad_number), std::invalid_argument);
}

TEST(Experiments, ConfigHashTracksEveryResultInput) {
  ExperimentConfig a;
  ExperimentConfig b;
  EXPECT_EQ(spinsim::config_hash(a), spinsim::config_hash(b));
  EXPECT_EQ(spinsim::config_hash(a).size(), 16U);
  b.seed = 1;
  EXPECT_NE(spinsim::config_hash(a), spinsim::config_hash(b));
  b = a;
  b.overrides.emplace_back("ld.p_1q", 1e-4);
  EXPECT_NE(spinsim::config_hash(a), spinsim::config_hash(b));
  b = a;
  b.workers = 4;  // does not change results
  EXPECT_EQ(spinsim::config_hash(a), spinsim::config_hash(b));
  EXPECT_EQ(spinsim::fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(spinsim::fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Experiments, RunsAreReproducibleByteForByte) {
  auto cfg = quick(ExperimentId::QecStep, "surface17", "0.5,2");
  const auto d1 = scratch("run1");
  const auto d2 = scratch("run2");
  spinsim::emit_all(spinsim::run_experiment(cfg), d1);
  cfg.workers = 2;
  spinsim::emit_all(spinsim::run_experiment(cfg), d2);
  for (const char* f : {"results.csv", "manifest.txt", "subsets_0.csv", "subsets_1.csv"}) {
    ASSERT_TRUE(fs::exists(d1 / f)) << f;
    EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
  }
  const std::string manifest = slurp(d1 / "manifest.txt");
  EXPECT_NE(manifest.find("seed=42\n"), std::string::npos);
  EXPECT_NE(manifest.find("config_hash=" + spinsim::config_hash(cfg)), std::string::npos);
  EXPECT_NE(manifest.find("version=" + std::string(spinsim::kVersion)), std::string::npos);
  EXPECT_NE(manifest.find("readout_model=fallback("), std::string::npos);
  EXPECT_NE(manifest.find("point.1.locations=16,16,80,48,18,18,96,80"), std::string::npos);
  std::ifstream csv(d1 / "results.csv");
  const auto rows = spinsim::parse_csv(csv);
  ASSERT_EQ(rows.size(), 2U);
  for (const auto& r : rows) {
    EXPECT_EQ(r.wall_s, 0.0);
    EXPECT_LE(r.p_l_lower, r.p_l_upper);
  }
}

TEST(Experiments, BaselinesUseTheStepDuration) {
  const auto r = spinsim::run_experiment(quick(ExperimentId::QecStep, "surface17", "2")).rows();
  ASSERT_EQ(r.size(), 1U);
  EXPECT_NEAR(r[0].baseline_bare, oracle::kIdleAnchors[1].p, 1e-15);
  EXPECT_NEAR(r[0].baseline_echo, oracle::kIdleAnchors[6].p, 1e-15);
}

TEST(Experiments, WallTimeOnlyWhenRequested) {
  auto cfg = quick(ExperimentId::BsPrep, "bs17", "1");
  cfg.record_wall_time = true;
  EXPECT_GT(spinsim::run_experiment(cfg).rows()[0].wall_s, 0.0);
}

TEST(Experiments, InfiniteT2RemovesIdleErrors) {
  auto cfg = quick(ExperimentId::QecStep, "surface17", "21,inf");
  const auto result = spinsim::run_experiment([&] {
    auto c = cfg;
    c.sweep_variable = "T2_star";
    return c;
  }());
  const auto& last = result.points.back();
  for (std::size_t c = 4; c < spinsim::kNumCategories; ++c) EXPECT_EQ(last.probs[c], 0.0);
  EXPECT_EQ(last.row.baseline_bare, 0.0);
  EXPECT_EQ(last.row.baseline_echo, 0.0);
  EXPECT_GT(result.points.front().probs[6], 0.0);
  EXPECT_EQ(spinsim::t2_sweep(cfg).size(), 2U);
  cfg.grid = {0.0, 1.0};
  EXPECT_THROW(spinsim::t2_sweep(cfg), ConfigError);
}

// BS-17 preparation uses no ancillas, so the ST integration time cannot
// change it.
TEST(Experiments, BsPrepDoesNotDependOnIntegrationTime) {
  const auto rows = spinsim::run_experiment(quick(ExperimentId::BsPrep, "bs17", "0.3,1,5")).rows();
  ASSERT_EQ(rows.size(), 3U);
  for (const auto& r : rows) {
    EXPECT_EQ(r.p_l_lower, rows[0].p_l_lower);
    EXPECT_EQ(r.p_l_upper, rows[0].p_l_upper);
  }
}

TEST(Experiments, BaconShorStepFailsMoreOftenThanSurface) {
  auto s = quick(ExperimentId::QecStep, "surface17", "2");
  s.shots = spinsim::parse_shot_policy("fixed:4000");
  s.threshold = 1e-5;
  auto b = s;
  b.code = "bs17";
  const auto rs = spinsim::run_experiment(s).rows()[0];
  const auto rb = spinsim::run_experiment(b).rows()[0];
  EXPECT_GT(rb.p_l_lower - 3 * rb.std_err, rs.p_l_upper + 3 * rs.std_err)
      << "bs " << rb.p_l_lower << " surface " << rs.p_l_lower;
}

TEST(Experiments, EmitReportsUnwritableDestinations) {
  const auto base = scratch("blocked");
  fs::create_directories(base);
  std::ofstream(base / "file") << "x";
  const auto r = spinsim::run_experiment(quick(ExperimentId::BsPrep, "bs17", "1"));
  EXPECT_THROW(spinsim::emit_all(r, base / "file" / "out"), spinsim::IoError);
}

}  // namespace
