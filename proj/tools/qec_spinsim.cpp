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

// qec-spinsim: parameter sweeps of logical error rates.
//
//   qec-spinsim run --experiment qec-step --code surface17 --encoding hybrid
//       --sweep t_int=logspace:0.1:10:20 --set st.p_cz=4e-4 --seed 1 --out out/
//   qec-spinsim circuit --experiment qec-step --encoding all-LD
//
// Exit codes: 0 success, 2 configuration error, 3 I/O error.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spinsim/experiments.hpp"

namespace {

constexpr int kConfigExit = 2;
constexpr int kIoExit = 3;

struct Options {
  std::string experiment = "qec-step";
  std::string code;
  std::string encoding = "hybrid";
  std::string sweep = "t_int=logspace:0.1:10:20";
  std::vector<std::string> sets;
  std::string params_file;
  std::string readout = "fallback";
  std::uint64_t seed = 0;
  std::string shots = "adaptive";
  double threshold = 1e-6;
  double timeout = 0.0;
  std::string out;
  bool wall_time = false;
};

std::pair<std::string, std::string> split_assignment(const std::string& s, const char* flag) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw spinsim::ConfigError(std::string(flag) + " expects <key>=<value>, got '" + s + "'");
  }
  return {s.substr(0, eq), s.substr(eq + 1)};
}

spinsim::ExperimentConfig make_config(const Options& o) {
  using namespace spinsim;
  ExperimentConfig cfg;
  cfg.experiment = parse_experiment(o.experiment);
  if (!o.code.empty()) {
    cfg.code = o.code;
  } else {
    cfg.code = cfg.experiment == ExperimentId::BsPrep ? "bs17" : "surface17";
  }
  try {
    cfg.encoding = parse_encoding(o.encoding);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto [var, grid] = split_assignment(o.sweep, "--sweep");
  cfg.sweep_variable = var;
  cfg.grid = parse_grid(grid);

  if (!o.params_file.empty()) {
    std::ifstream in(o.params_file);
    if (!in) throw IoError("cannot open parameter file '" + o.params_file + "'");
    for (const auto& [k, v] : parse_key_values(in, o.params_file)) {
      cfg.overrides.emplace_back(k, detail::parse_number(v, o.params_file));
    }
  }
  for (const auto& s : o.sets) {
    const auto [k, v] = split_assignment(s, "--set");
    cfg.overrides.emplace_back(k, detail::parse_number(v, "--set " + k));
  }
  cfg.readout.text = o.readout;
  cfg.seed = o.seed;
  cfg.shots = parse_shot_policy(o.shots);
  cfg.threshold = o.threshold;
  cfg.timeout_s = o.timeout;
  cfg.workers = default_workers();
  cfg.record_wall_time = o.wall_time;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--experiment", o.experiment, "qec-step | surface-prep | bs-prep")
      ->capture_default_str();
  cmd->add_option("--code", o.code, "surface17 | bs17 (default follows the experiment)");
  cmd->add_option("--encoding", o.encoding, "all-LD | hybrid")->capture_default_str();
  cmd->add_option("--set", o.sets, "Parameter override <key>=<value>, repeatable");
  cmd->add_option("--params", o.params_file, "Flat key=value parameter file");
  cmd->add_option("--readout-curve", o.readout, "ST readout model: <csv> | fallback | const:<p>")
      ->capture_default_str();
}

int run(const Options& o) {
  const auto cfg = make_config(o);
  if (o.out.empty()) throw spinsim::ConfigError("--out is required");
  std::cerr << "qec-spinsim: " << spinsim::to_string(cfg.experiment) << ' ' << cfg.code << ' '
            << spinsim::to_string(cfg.encoding) << ", " << cfg.grid.size() << " point(s), "
            << cfg.workers << " worker(s)\n";
  spinsim::ExperimentResult result;
  result.config = cfg;
  for (double v : cfg.grid) {
    result.points.push_back(spinsim::run_point(cfg, v));
    const auto& r = result.points.back().row;
    std::cerr << "  " << cfg.sweep_variable << '=' << spinsim::format_double(v) << "  p_L in ["
              << r.p_l_lower << ", " << r.p_l_upper << "]"
              << (result.points.back().sampling.partial ? "  (partial)" : "") << '\n';
  }
  spinsim::emit_all(result, o.out);
  return 0;
}

int dump_circuit(const Options& o) {
  const auto cfg = make_config(o);
  const auto params = spinsim::params_at(cfg, cfg.grid.front());
  const auto protocol = spinsim::build_protocol(cfg, params);
  for (const auto& b : protocol.blocks) {
    std::cout << "# block " << b.name << " (" << spinsim::format_double(b.duration()) << " us)\n";
    spinsim::Circuit c;
    c.n_qubits = protocol.n_qubits;
    c.layers = b.layers;
    std::cout << c.dump();
  }
  const auto probs = spinsim::fault_probabilities(params, protocol);
  const auto counts = protocol.counts();
  for (std::size_t i = 0; i < spinsim::kNumCategories; ++i) {
    std::cout << "# category " << (i + 1) << ' '
              << spinsim::category_name(static_cast<spinsim::FaultCategory>(i)) << ": n="
              << counts[i] << " p=" << spinsim::format_double(probs[i]) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stabilizer simulation of distance-3 codes on spin-qubit encodings"};
  app.require_subcommand(1);
  Options o;

  auto* run_cmd = app.add_subcommand("run", "Sweep one parameter and write CSV artifacts");
  add_common(run_cmd, o);
  run_cmd->add_option("--sweep", o.sweep, "<variable>=<grid>")->capture_default_str();
  run_cmd->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  run_cmd->add_option("--shots", o.shots, "adaptive | adaptive:<initial>:<cap> | fixed:<n>")
      ->capture_default_str();
  run_cmd->add_option("--threshold", o.threshold, "Subset probability threshold")
      ->capture_default_str();
  run_cmd->add_option("--timeout", o.timeout, "Per-point wall-clock limit in seconds (0 = none)");
  run_cmd->add_option("--out", o.out, "Output directory")->required();
  run_cmd->add_flag("--record-wall-time", o.wall_time,
                    "Fill the wall_s column (output is then not byte-reproducible)");

  auto* circ_cmd = app.add_subcommand("circuit", "Print the protocol circuit and fault counts");
  add_common(circ_cmd, o);
  circ_cmd->add_option("--sweep", o.sweep, "<variable>=<value> used to build the circuit")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigExit;
  }

  try {
    if (*run_cmd) return run(o);
    return dump_circuit(o);
  } catch (const spinsim::IoError& e) {
    std::cerr << "qec-spinsim: " << e.what() << '\n';
    return kIoExit;
  } catch (const std::invalid_argument& e) {
    std::cerr << "qec-spinsim: " << e.what() << '\n';
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "qec-spinsim: internal error: " << e.what() << '\n';
    return 1;
  }
}
