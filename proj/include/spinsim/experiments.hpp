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

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spinsim/noise.hpp"
#include "spinsim/protocols.hpp"
#include "spinsim/sampler.hpp"

namespace spinsim {

inline constexpr std::string_view kVersion = "0.1.0";

/// Bad experiment configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Failure reading or writing an artifact (CLI exit code 3).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentId : std::uint8_t { QecStep, SurfacePrep, BsPrep };

inline std::string_view to_string(ExperimentId e) {
  switch (e) {
    case ExperimentId::QecStep:
      return "qec-step";
    case ExperimentId::SurfacePrep:
      return "surface-prep";
    case ExperimentId::BsPrep:
      return "bs-prep";
  }
  return "?";
}

inline ExperimentId parse_experiment(std::string_view s) {
  if (s == "qec-step") return ExperimentId::QecStep;
  if (s == "surface-prep") return ExperimentId::SurfacePrep;
  if (s == "bs-prep") return ExperimentId::BsPrep;
  throw ConfigError("unknown experiment '" + std::string(s) + "'");
}

namespace detail {

inline double parse_number(std::string_view s, std::string_view what) {
  if (s == "inf" || s == "infinity") return kInfiniteT2;
  const std::string str(s);
  try {
    std::size_t used = 0;
    const double v = std::stod(str, &used);
    if (used == str.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("bad number '" + str + "' in " + std::string(what));
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

}  // namespace detail

/// Grid syntax: `v1,v2,...`, `linspace:a:b:n` or `logspace:a:b:n` (a and b
/// are the end values, not exponents). `inf` is accepted as a value.
inline std::vector<double> parse_grid(std::string_view text) {
  std::vector<double> grid;
  if (text.starts_with("linspace:") || text.starts_with("logspace:")) {
    const bool log = text.starts_with("log");
    const auto parts = detail::split(text.substr(9), ':');
    if (parts.size() != 3) throw ConfigError("grid '" + std::string(text) + "' needs a:b:n");
    const double a = detail::parse_number(parts[0], "grid");
    const double b = detail::parse_number(parts[1], "grid");
    const double nd = detail::parse_number(parts[2], "grid");
    if (!(nd >= 1.0) || nd != std::floor(nd)) throw ConfigError("grid size must be a positive integer");
    const auto n = static_cast<std::size_t>(nd);
    if (!std::isfinite(a) || !std::isfinite(b)) throw ConfigError("grid ends must be finite");
    if (log && !(a > 0.0 && b > 0.0)) throw ConfigError("logspace ends must be positive");
    for (std::size_t i = 0; i < n; ++i) {
      const double f = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
      grid.push_back(log ? std::exp(std::log(a) + f * (std::log(b) - std::log(a)))
                         : a + f * (b - a));
    }
    if (n > 1) grid.back() = b;
  } else {
    for (auto tok : detail::split(text, ',')) grid.push_back(detail::parse_number(tok, "grid"));
  }
  if (grid.empty()) throw ConfigError("empty sweep grid");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw ConfigError("sweep grid must be strictly increasing");
  }
  return grid;
}

/// ST readout model: `fallback`, `const:<p>` or a curve CSV path.
struct ReadoutSelection {
  std::string text = "fallback";

  ReadoutModel model() const {
    if (text == "fallback") return ReadoutModel::parametric();
    if (text.starts_with("const:")) {
      const double p = detail::parse_number(std::string_view(text).substr(6), "readout model");
      try {
        return ReadoutModel::constant(p);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    try {
      return load_readout_curve(text);
    } catch (const std::exception& e) {
      throw IoError(e.what());
    }
  }
};

/// `adaptive` (10^4 doubling to 10^6), `adaptive:<initial>:<cap>` or
/// `fixed:<n>`.
inline ShotPolicy parse_shot_policy(std::string_view text) {
  ShotPolicy p;
  auto count = [&](std::string_view s) {
    const double v = detail::parse_number(s, "shot policy");
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e15) throw ConfigError("bad shot count");
    return static_cast<std::uint64_t>(v);
  };
  if (text == "adaptive") return p;
  if (text.starts_with("fixed:")) {
    p.adaptive = false;
    p.initial = count(text.substr(6));
    p.cap = p.initial;
    return p;
  }
  if (text.starts_with("adaptive:")) {
    const auto parts = detail::split(text.substr(9), ':');
    if (parts.size() != 2) throw ConfigError("shot policy 'adaptive:<initial>:<cap>' expected");
    p.initial = count(parts[0]);
    p.cap = count(parts[1]);
    if (p.cap < p.initial) throw ConfigError("shot cap below initial shots");
    return p;
  }
  throw ConfigError("unknown shot policy '" + std::string(text) + "'");
}

inline std::string describe(const ShotPolicy& p) {
  if (!p.adaptive) return "fixed:" + std::to_string(p.initial);
  return "adaptive:" + std::to_string(p.initial) + ":" + std::to_string(p.cap);
}

/// Sweep variables beyond the raw parameter keys:
///   t_int      ST integration time.
///   t_readout  ST readout duration with t_ramp = 0 and the LD readout locked
///              to 10x; both readout infidelities held at their constants.
///   T2_star    LD T2*, with ST T2* = LD / sqrt(2); `inf` disables idling.
inline bool is_sweep_variable(std::string_view v) {
  return v == "t_int" || v == "t_readout" || v == "T2_star" || is_parameter_key(v);
}

struct ExperimentConfig {
  ExperimentId experiment = ExperimentId::QecStep;
  std::string code = "surface17";
  Encoding encoding = Encoding::Hybrid;
  std::string sweep_variable = "t_int";
  std::vector<double> grid = parse_grid("logspace:0.1:10:20");
  std::vector<std::pair<std::string, double>> overrides;
  ReadoutSelection readout;
  std::uint64_t seed = 0;
  ShotPolicy shots;
  double threshold = 1e-6;
  double timeout_s = 0.0;
  std::size_t workers = 1;
  bool record_wall_time = false;

  void validate() const {
    if (code != "surface17" && code != "bs17") throw ConfigError("unknown code '" + code + "'");
    if (experiment == ExperimentId::SurfacePrep && code != "surface17") {
      throw ConfigError("surface-prep requires code surface17");
    }
    if (experiment == ExperimentId::BsPrep && code != "bs17") {
      throw ConfigError("bs-prep requires code bs17");
    }
    if (!is_sweep_variable(sweep_variable)) {
      throw ConfigError("unknown sweep variable '" + sweep_variable + "'");
    }
    if (grid.empty()) throw ConfigError("empty sweep grid");
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (!(grid[i] > grid[i - 1])) throw ConfigError("sweep grid must be strictly increasing");
    }
    for (const auto& [k, v] : overrides) {
      if (!is_parameter_key(k)) throw ConfigError("unknown parameter key '" + k + "'");
    }
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must be in (0, 1)");
    if (timeout_s < 0.0) throw ConfigError("timeout must be nonnegative");
  }

  /// Canonical text of everything that affects results.
  std::string canonical() const {
    std::ostringstream s;
    s << "experiment=" << to_string(experiment) << '\n'
      << "code=" << code << '\n'
      << "encoding=" << to_string(encoding) << '\n'
      << "sweep=" << sweep_variable << '\n'
      << "grid=";
    for (std::size_t i = 0; i < grid.size(); ++i) s << (i ? "," : "") << format_double(grid[i]);
    s << '\n';
    for (const auto& [k, v] : overrides) s << "set." << k << '=' << format_double(v) << '\n';
    s << "readout=" << readout.text << '\n'
      << "seed=" << seed << '\n'
      << "shots=" << describe(shots) << '\n'
      << "rel_tol=" << format_double(shots.rel_tol) << '\n'
      << "threshold=" << format_double(threshold) << '\n'
      << "timeout_s=" << format_double(timeout_s) << '\n';
    return s.str();
  }
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const ExperimentConfig& cfg) {
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << fnv1a64(cfg.canonical());
  return s.str();
}

/// Noise parameters at one grid point: Table-I defaults, the selected ST
/// readout model, overrides, then the sweep value.
inline NoiseParams params_at(const ExperimentConfig& cfg, double value) {
  NoiseParams p = table1_defaults(cfg.encoding);
  p.st.readout = cfg.readout.model();
  if (p.st.readout.mode() == ReadoutModel::Mode::Constant) {
    p.st.p_readout = p.st.readout.infidelity(1.0);
  }
  try {
    for (const auto& [k, v] : cfg.overrides) apply_override(p, k, v);
    const std::string& var = cfg.sweep_variable;
    if (var == "t_int") {
      p.st.t_int = value;
    } else if (var == "t_readout") {
      p.st.t_ramp = 0.0;
      p.st.t_int = value;
      p.st.readout = ReadoutModel::constant(p.st.p_readout);
      p.ld.t_ramp = 0.0;
      p.ld.t_int = 10.0 * value;
      p.ld.readout = ReadoutModel::constant(p.ld.p_readout);
    } else if (var == "T2_star") {
      if (!(value > 0.0)) throw ConfigError("T2* must be positive or inf");
      p.ld.T2_star = value;
      p.st.T2_star = value / std::sqrt(2.0);
    } else {
      apply_override(p, var, value);
    }
    p.validate();
    if (p.st.readout.mode() != ReadoutModel::Mode::Constant) (void)p.st.readout_infidelity();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(e.what()) + " at " + cfg.sweep_variable + "=" +
                      format_double(value));
  }
  return p;
}

inline Protocol build_protocol(const ExperimentConfig& cfg, const NoiseParams& params) {
  switch (cfg.experiment) {
    case ExperimentId::QecStep:
      return make_qec_step(code_by_name(cfg.code), params);
    case ExperimentId::SurfacePrep:
      return make_surface_prep(params, true);
    case ExperimentId::BsPrep:
      return make_bs_prep(params);
  }
  throw ConfigError("unknown experiment");
}

struct SweepRow {
  double sweep_value = 0.0;
  double p_l_lower = 0.0;
  double p_l_upper = 0.0;
  double std_err = 0.0;
  double baseline_bare = 0.0;
  double baseline_echo = 0.0;
  double sampled_mass = 0.0;
  double wall_s = 0.0;

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct PointResult {
  SweepRow row;
  SamplerResult sampling;
  Probs probs{};
  Counts counts{};
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<PointResult> points;

  std::vector<SweepRow> rows() const {
    std::vector<SweepRow> r;
    for (const auto& p : points) r.push_back(p.row);
    return r;
  }
};

/// Echo-refocused dephasing time relative to T2*.
inline constexpr double kEchoFactor = 10.0;

inline PointResult run_point(const ExperimentConfig& cfg, double value) {
  const auto t0 = std::chrono::steady_clock::now();
  const NoiseParams params = params_at(cfg, value);
  const Protocol protocol = build_protocol(cfg, params);
  PointResult out;
  try {
    out.probs = fault_probabilities(params, protocol);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  out.counts = protocol.counts();
  SamplerConfig sc;
  sc.threshold = cfg.threshold;
  sc.shots = cfg.shots;
  sc.seed = cfg.seed;
  sc.workers = cfg.workers;
  sc.timeout_s = cfg.timeout_s;
  out.sampling = importance_sample(ProtocolModel(protocol), out.probs, sc);
  const double duration = protocol.max_duration();
  SweepRow& row = out.row;
  row.sweep_value = value;
  row.p_l_lower = out.sampling.bounds.lower;
  row.p_l_upper = out.sampling.bounds.upper;
  row.std_err = out.sampling.bounds.std_err;
  row.baseline_bare = physical_baseline(duration, params.ld.T2_star);
  row.baseline_echo = physical_baseline(duration, kEchoFactor * params.ld.T2_star);
  row.sampled_mass = out.sampling.bounds.sampled_mass;
  if (cfg.record_wall_time) {
    row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return out;
}

/// Runs every grid point in order. Parallelism lives inside the sampler, so
/// results do not depend on the worker count.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  result.config = cfg;
  for (double v : cfg.grid) result.points.push_back(run_point(cfg, v));
  return result;
}

/// T2* sweep; ST T2* follows LD / sqrt(2) and `inf` zeroes idle errors.
inline std::vector<SweepRow> t2_sweep(ExperimentConfig cfg) {
  cfg.sweep_variable = "T2_star";
  for (double v : cfg.grid) {
    if (!(v > 0.0)) throw ConfigError("T2* grid values must be positive or inf");
  }
  return run_experiment(cfg).rows();
}

inline constexpr std::string_view kCsvHeader =
    "sweep_value,p_l_lower,p_l_upper,std_err,baseline_bare,baseline_echo,sampled_mass,wall_s";

inline void write_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << format_double(r.sweep_value) << ',' << format_double(r.p_l_lower) << ','
        << format_double(r.p_l_upper) << ',' << format_double(r.std_err) << ','
        << format_double(r.baseline_bare) << ',' << format_double(r.baseline_echo) << ','
        << format_double(r.sampled_mass) << ',' << format_double(r.wall_s) << '\n';
  }
}

inline std::vector<SweepRow> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("missing CSV header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw std::invalid_argument("unexpected CSV header '" + line + "'");
  std::vector<SweepRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split(line, ',');
    if (fields.size() != 8) {
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected 8 fields");
    }
    double v[8];
    for (std::size_t i = 0; i < 8; ++i) {
      // from_chars, unlike stod, accepts the subnormals to_chars may write.
      const std::string_view f = fields[i];
      const auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), v[i]);
      if (f.empty() || ec != std::errc{} || end != f.data() + f.size()) {
        throw std::invalid_argument("line " + std::to_string(lineno) + ": bad number '" +
                                    std::string(f) + "'");
      }
    }
    rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]});
  }
  return rows;
}

inline void write_manifest(std::ostream& out, const ExperimentResult& result) {
  const ExperimentConfig& cfg = result.config;
  out << "version=" << kVersion << '\n'
      << "config_hash=" << config_hash(cfg) << '\n'
      << cfg.canonical();
  if (cfg.readout.text == "fallback") {
    out << "readout_model=" << ReadoutModel::parametric().describe() << '\n';
  }
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    const auto& p = result.points[i];
    const std::string prefix = "point." + std::to_string(i) + ".";
    std::uint64_t shots = 0;
    for (const auto& e : p.sampling.subsets) shots += e.shots;
    out << prefix << "sweep_value=" << format_double(p.row.sweep_value) << '\n'
        << prefix << "subsets=" << p.sampling.subsets.size() << '\n'
        << prefix << "shots=" << shots << '\n'
        << prefix << "partial=" << (p.sampling.partial ? 1 : 0) << '\n'
        << prefix << "probabilities=";
    for (std::size_t c = 0; c < kNumCategories; ++c) out << (c ? "," : "") << format_double(p.probs[c]);
    out << '\n' << prefix << "locations=";
    for (std::size_t c = 0; c < kNumCategories; ++c) out << (c ? "," : "") << p.counts[c];
    out << '\n';
  }
}

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace detail

inline void emit_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  write_csv(out, rows);
  detail::finish(out, path);
}

inline void emit_manifest(const ExperimentResult& result, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  write_manifest(out, result);
  detail::finish(out, path);
}

/// Writes results.csv, manifest.txt and one subsets_<i>.csv per grid point.
inline void emit_all(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  emit_csv(result.rows(), dir / "results.csv");
  emit_manifest(result, dir / "manifest.txt");
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    const auto path = dir / ("subsets_" + std::to_string(i) + ".csv");
    auto out = detail::open_for_write(path);
    write_subset_ledger(out, result.points[i].sampling.subsets);
    detail::finish(out, path);
  }
}

}  // namespace spinsim
