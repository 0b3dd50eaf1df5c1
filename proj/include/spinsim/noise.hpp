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
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "spinsim/circuit.hpp"

namespace spinsim {

inline constexpr double kInfiniteT2 = std::numeric_limits<double>::infinity();

/// Gaussian idle dephasing: 1/2 (1 - exp(-(t/T2*)^2)).
inline double p_idle(double t_us, double t2_star_us) {
  if (!(t_us >= 0.0)) throw std::invalid_argument("idle time must be non-negative");
  if (!(t2_star_us > 0.0)) throw std::invalid_argument("T2* must be positive");
  if (std::isinf(t2_star_us)) return 0.0;
  const double r = t_us / t2_star_us;
  return -0.5 * std::expm1(-r * r);
}

inline double readout_time(double t_ramp_us, double t_int_us) {
  if (t_ramp_us < 0.0 || t_int_us < 0.0) throw std::invalid_argument("negative readout time");
  return t_ramp_us + t_int_us;
}

/// Dephasing infidelity of a bare physical qubit prepared in |+> that waits
/// for `t_total_us`.
inline double physical_baseline(double t_total_us, double t2_us) { return p_idle(t_total_us, t2_us); }

/// Readout infidelity as a function of integration time.
class ReadoutModel {
 public:
  enum class Mode { Constant, Digitized, Parametric };

  static ReadoutModel constant(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("readout infidelity outside [0, 1]");
    ReadoutModel m;
    m.mode_ = Mode::Constant;
    m.constant_ = p;
    return m;
  }

  /// Monotone cubic (Fritsch-Carlson) interpolation through digitized samples.
  static ReadoutModel digitized(std::vector<double> t_int, std::vector<double> infidelity) {
    if (t_int.size() != infidelity.size()) throw std::invalid_argument("curve column mismatch");
    if (t_int.size() < 2) throw std::invalid_argument("readout curve needs at least two samples");
    for (std::size_t i = 0; i < t_int.size(); ++i) {
      if (i > 0 && !(t_int[i] > t_int[i - 1])) {
        throw std::invalid_argument("readout curve t_int must be strictly increasing");
      }
      if (!(infidelity[i] >= 0.0 && infidelity[i] <= 1.0)) {
        throw std::invalid_argument("readout curve infidelity outside [0, 1]");
      }
    }
    ReadoutModel m;
    m.mode_ = Mode::Digitized;
    m.t_ = std::move(t_int);
    m.p_ = std::move(infidelity);
    m.build_slopes();
    return m;
  }

  /// p(t) = a exp(-t / tau) + b t, with a and b fixed by p(t_ref) = p_ref
  /// and a minimum at t_min.
  static ReadoutModel parametric(double tau_us = 0.25, double t_ref_us = 2.0, double p_ref = 4e-4,
                                 double t_min_us = 1.4) {
    if (!(tau_us > 0.0)) throw std::invalid_argument("tau must be positive");
    ReadoutModel m;
    m.mode_ = Mode::Parametric;
    m.tau_ = tau_us;
    const double em = std::exp(-t_min_us / tau_us);
    m.a_ = p_ref / (std::exp(-t_ref_us / tau_us) + (t_ref_us / tau_us) * em);
    m.b_ = m.a_ / tau_us * em;
    return m;
  }

  Mode mode() const { return mode_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double tau() const { return tau_; }
  const std::vector<double>& samples_t() const { return t_; }
  const std::vector<double>& samples_p() const { return p_; }

  double infidelity(double t_int_us) const {
    if (!(t_int_us > 0.0)) throw std::invalid_argument("integration time must be positive");
    switch (mode_) {
      case Mode::Constant:
        return constant_;
      case Mode::Parametric:
        return std::clamp(a_ * std::exp(-t_int_us / tau_) + b_ * t_int_us, 0.0, 1.0);
      case Mode::Digitized:
        return interpolate(t_int_us);
    }
    return constant_;
  }

  std::string describe() const {
    switch (mode_) {
      case Mode::Constant:
        return "const:" + format_double(constant_);
      case Mode::Parametric:
        return "fallback(a=" + format_double(a_) + ",tau=" + format_double(tau_) +
               ",b=" + format_double(b_) + ")";
      case Mode::Digitized:
        return "curve(" + std::to_string(t_.size()) + " samples)";
    }
    return "?";
  }

 private:
  void build_slopes() {
    const std::size_t n = t_.size();
    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (p_[i + 1] - p_[i]) / (t_[i + 1] - t_[i]);
    m_.assign(n, 0.0);
    m_[0] = delta[0];
    m_[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      m_[i] = (delta[i - 1] * delta[i] <= 0.0) ? 0.0 : 0.5 * (delta[i - 1] + delta[i]);
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (delta[i] == 0.0) {
        m_[i] = 0.0;
        m_[i + 1] = 0.0;
        continue;
      }
      const double alpha = m_[i] / delta[i];
      const double beta = m_[i + 1] / delta[i];
      const double s = alpha * alpha + beta * beta;
      if (s > 9.0) {
        const double tau = 3.0 / std::sqrt(s);
        m_[i] = tau * alpha * delta[i];
        m_[i + 1] = tau * beta * delta[i];
      }
    }
  }

  double interpolate(double t) const {
    if (t <= t_.front()) return p_.front();
    if (t >= t_.back()) return p_.back();
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - t_.begin()) - 1;
    const double h = t_[i + 1] - t_[i];
    const double s = (t - t_[i]) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    const double v = h00 * p_[i] + h10 * h * m_[i] + h01 * p_[i + 1] + h11 * h * m_[i + 1];
    return std::clamp(v, 0.0, 1.0);
  }

  Mode mode_ = Mode::Constant;
  double constant_ = 0.0;
  double a_ = 0.0;
  double b_ = 0.0;
  double tau_ = 1.0;
  std::vector<double> t_;
  std::vector<double> p_;
  std::vector<double> m_;
};

/// Reads a `t_int_us,infidelity` CSV. Whitespace around fields is ignored.
inline ReadoutModel load_readout_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open readout curve '" + path + "'");
  std::string line;
  std::vector<double> ts;
  std::vector<double> ps;
  bool header_seen = false;
  std::size_t lineno = 0;
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto comma = view.find(',');
    if (comma == std::string_view::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected two columns");
    }
    const std::string a(trim(view.substr(0, comma)));
    const std::string b(trim(view.substr(comma + 1)));
    if (!header_seen) {
      header_seen = true;
      if (a == "t_int_us" && b == "infidelity") continue;
      throw std::runtime_error(path + ": header must be 't_int_us,infidelity'");
    }
    try {
      std::size_t used_a = 0;
      std::size_t used_b = 0;
      ts.push_back(std::stod(a, &used_a));
      ps.push_back(std::stod(b, &used_b));
      if (used_a != a.size() || used_b != b.size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad number");
    }
  }
  if (ts.empty()) throw std::runtime_error(path + ": readout curve is empty");
  try {
    return ReadoutModel::digitized(std::move(ts), std::move(ps));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

struct QubitParams {
  double T2_star = 21.0;   // us
  double p_1q = 4e-4;
  double p_cz = 2e-3;
  double t_cz = 0.040;     // us
  double p_prep = 6.5e-3;
  double p_readout = 2.4e-3;  // nominal infidelity, used by constant readout models
  double t_ramp = 0.0;     // us
  double t_int = 24.0;     // us
  double t_prep = 0.0;     // us; preparation treated as instantaneous
  ReadoutModel readout = ReadoutModel::constant(2.4e-3);

  double readout_time() const { return spinsim::readout_time(t_ramp, t_int); }

  double readout_infidelity() const {
    if (readout.mode() == ReadoutModel::Mode::Constant) return p_readout;
    return readout.infidelity(t_int);
  }

  void validate() const {
    for (double p : {p_1q, p_cz, p_prep, p_readout}) {
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside [0, 1]");
    }
    for (double t : {t_cz, t_ramp, t_int, t_prep}) {
      if (!(t >= 0.0)) throw std::invalid_argument("negative duration");
    }
    if (!(T2_star > 0.0)) throw std::invalid_argument("T2* must be positive");
  }
};

/// How gate-type fault probabilities (categories 1-4) are attributed.
enum class GateAttribution {
  /// One value per category: the parameter column of the ancilla encoding
  /// when the protocol uses ancillas, otherwise the data encoding.
  EncodingColumn,
  /// Each gate uses the parameters of the qubit(s) it acts on. Mixed
  /// categories are rejected by fault_probabilities.
  PerQubit,
};

struct NoiseParams {
  QubitParams ld;
  QubitParams st;
  Encoding encoding = Encoding::Hybrid;
  // LD data - ST ancilla CZ; follows st.p_cz unless set explicitly.
  std::optional<double> hybrid_p_cz;
  GateAttribution attribution = GateAttribution::EncodingColumn;

  const QubitParams& data() const { return ld; }
  const QubitParams& ancilla() const { return encoding == Encoding::Hybrid ? st : ld; }
  QubitType ancilla_type() const {
    return encoding == Encoding::Hybrid ? QubitType::ST : QubitType::LD;
  }
  const QubitParams& of(QubitType t) const { return t == QubitType::ST ? st : ld; }

  double cz_probability(QubitType a, QubitType b) const {
    if (a == QubitType::LD && b == QubitType::LD) return ld.p_cz;
    if (a == QubitType::ST && b == QubitType::ST) return st.p_cz;
    return hybrid_cz();
  }

  double hybrid_cz() const { return hybrid_p_cz.value_or(st.p_cz); }

  void validate() const {
    ld.validate();
    st.validate();
    if (!(hybrid_cz() >= 0.0 && hybrid_cz() <= 1.0)) {
      throw std::invalid_argument("hybrid CZ probability outside [0, 1]");
    }
  }
};

inline QubitParams table1_ld() {
  QubitParams q;
  q.T2_star = 21.0;
  q.p_1q = 4e-4;
  q.t_cz = 0.040;
  q.p_cz = 2e-3;
  q.t_ramp = 0.0;
  q.t_int = 24.0;
  q.p_readout = 2.4e-3;
  q.p_prep = 6.5e-3;
  q.readout = ReadoutModel::constant(2.4e-3);
  return q;
}

inline QubitParams table1_st() {
  QubitParams q;
  q.T2_star = 14.8;
  q.p_1q = 4e-3;
  q.t_cz = 0.040;
  q.p_cz = 4e-3;
  q.t_ramp = 0.4;
  q.t_int = 2.0;
  q.p_readout = 4e-4;
  q.p_prep = 4e-3;
  q.readout = ReadoutModel::parametric();
  return q;
}

inline NoiseParams table1_defaults(Encoding encoding) {
  NoiseParams p;
  p.ld = table1_ld();
  p.st = table1_st();
  p.encoding = encoding;
  return p;
}

/// Probability of a single fault location under `params`. `uses_ancillas`
/// selects the parameter column for gate categories under EncodingColumn.
inline double location_probability(const NoiseParams& params, const FaultLocation& loc,
                                   bool uses_ancillas) {
  const QubitType column = uses_ancillas ? params.ancilla_type() : QubitType::LD;
  const bool per_qubit = params.attribution == GateAttribution::PerQubit;
  const QubitParams& gate_params = params.of(per_qubit ? loc.type0 : column);
  switch (loc.category) {
    case FaultCategory::Prep:
      return gate_params.p_prep;
    case FaultCategory::Measure:
      return gate_params.readout_infidelity();
    case FaultCategory::OneQubit:
      return gate_params.p_1q;
    case FaultCategory::TwoQubit:
      if (per_qubit) return params.cz_probability(loc.type0, loc.type1);
      if (!uses_ancillas) return params.ld.p_cz;
      return params.encoding == Encoding::Hybrid ? params.hybrid_cz() : params.ld.p_cz;
    case FaultCategory::IdleDataPrep:
    case FaultCategory::IdleDataMeas:
    case FaultCategory::IdleDataCZ:
    case FaultCategory::IdleAncillaCZ:
      return p_idle(loc.duration_us, params.of(loc.type0).T2_star);
  }
  return 0.0;
}

/// Per-category probabilities p_1..p_8. Every location in a category must
/// share one probability, otherwise the subset weights would not be exact.
inline std::array<double, kNumCategories> fault_probabilities(
    const NoiseParams& params, const std::vector<FaultLocation>& locations, bool uses_ancillas) {
  params.validate();
  std::array<double, kNumCategories> probs{};
  std::array<bool, kNumCategories> seen{};
  for (const auto& loc : locations) {
    const auto c = static_cast<std::size_t>(loc.category);
    const double p = location_probability(params, loc, uses_ancillas);
    if (!seen[c]) {
      probs[c] = p;
      seen[c] = true;
    } else if (p != probs[c]) {
      std::ostringstream msg;
      msg << "fault category " << (c + 1) << " (" << category_name(loc.category)
          << ") mixes probabilities " << probs[c] << " and " << p
          << "; subset weights require one probability per category";
      throw std::invalid_argument(msg.str());
    }
  }
  return probs;
}

/// Applies `key=value` overrides. Keys are QubitParams field names prefixed
/// with `ld.` or `st.`, plus `hybrid.p_cz`.
inline void apply_override(NoiseParams& params, std::string_view key, double value) {
  if (key == "hybrid.p_cz") {
    params.hybrid_p_cz = value;
    return;
  }
  QubitParams* target = nullptr;
  std::string_view field;
  if (key.starts_with("ld.")) {
    target = &params.ld;
    field = key.substr(3);
  } else if (key.starts_with("st.")) {
    target = &params.st;
    field = key.substr(3);
  } else {
    throw std::invalid_argument("unknown parameter key '" + std::string(key) + "'");
  }
  if (field == "T2_star") {
    target->T2_star = value;
  } else if (field == "p_1q") {
    target->p_1q = value;
  } else if (field == "p_cz") {
    target->p_cz = value;
  } else if (field == "t_cz") {
    target->t_cz = value;
  } else if (field == "p_prep") {
    target->p_prep = value;
  } else if (field == "p_readout") {
    target->p_readout = value;
  } else if (field == "t_ramp") {
    target->t_ramp = value;
  } else if (field == "t_int") {
    target->t_int = value;
  } else if (field == "t_prep") {
    target->t_prep = value;
  } else {
    throw std::invalid_argument("unknown parameter key '" + std::string(key) + "'");
  }
}

inline bool is_parameter_key(std::string_view key) {
  NoiseParams probe;
  try {
    apply_override(probe, key, 0.5);
  } catch (const std::invalid_argument&) {
    return false;
  }
  return true;
}

/// Parses a flat `key = value` file; '#' starts a comment.
inline std::map<std::string, std::string> parse_key_values(std::istream& in,
                                                           const std::string& origin) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": expected key=value");
    }
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    out[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
  }
  return out;
}

inline void load_params_file(NoiseParams& params, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open parameter file '" + path + "'");
  for (const auto& [k, v] : parse_key_values(in, path)) {
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw std::invalid_argument(path + ": bad value for '" + k + "'");
    }
    apply_override(params, k, value);
  }
}

}  // namespace spinsim
