// Copyright 2026 The cesmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experiment files: `key = value` lines under [section] headers, `#` comments.
// Matrices are given by their diagonal, vectors as space-separated numbers.
// Numbers are written with 17 significant digits so that a written config
// parses back to an identical SimConfig.

#pragma once

#include <cesmpc/sim.hpp>

#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

namespace cesmpc {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

struct Entry {
  std::string value;
  int line = 0;
};

using Document = std::map<std::string, std::map<std::string, Entry>>;

inline const std::set<std::string>& known_keys(const std::string& section) {
  static const std::map<std::string, std::set<std::string>> keys{
      {"manipulator", {"m1", "m2", "l1", "l2", "g"}},
      {"trajectory",
       {"kind", "center", "radius", "rate", "phase", "start", "end",
        "traversal", "elbow"}},
      {"controller",
       {"kind", "kp", "kd", "lambda", "singularity_damping",
        "singularity_threshold", "exit_threshold"}},
      {"weights", {"q1", "q2", "r", "horizon"}},
      {"limits", {"tau_max"}},
      {"sim", {"period", "duration", "substeps", "initial_q", "initial_qd"}},
  };
  static const std::set<std::string> none;
  const auto it = keys.find(section);
  return it == keys.end() ? none : it->second;
}

inline Document parse_document(std::istream& in) {
  Document doc;
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view s = raw;
    if (const auto hash = s.find('#'); hash != std::string_view::npos)
      s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("unterminated section header", line);
      section = std::string(trim(s.substr(1, s.size() - 2)));
      if (known_keys(section).empty())
        throw ConfigError("unknown section [" + section + "]", line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("expected `key = value`", line);
    if (section.empty())
      throw ConfigError("key outside of any [section]", line);
    const std::string key(trim(s.substr(0, eq)));
    const std::string value(trim(s.substr(eq + 1)));
    if (key.empty()) throw ConfigError("empty key", line);
    if (!known_keys(section).count(key))
      throw ConfigError("unknown key '" + key + "' in [" + section + "]", line);
    if (value.empty())
      throw ConfigError("missing value for '" + key + "'", line);
    auto [it, inserted] = doc[section].emplace(key, Entry{value, line});
    if (!inserted) throw ConfigError("duplicate key '" + key + "'", line);
  }
  return doc;
}

inline double parse_number(std::string_view text, int line,
                           const std::string& key) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ConfigError("'" + key + "': not a finite number: " + std::string(text),
                      line);
  }
  return v;
}

class Reader {
 public:
  explicit Reader(const Document& doc) : doc_(doc) {}

  bool has(const std::string& section, const std::string& key) const {
    const auto s = doc_.find(section);
    return s != doc_.end() && s->second.count(key);
  }

  const Entry& entry(const std::string& section, const std::string& key) const {
    if (!has(section, key)) {
      throw ConfigError("missing required key '" + key + "' in [" + section + "]");
    }
    return doc_.at(section).at(key);
  }

  std::string word(const std::string& section, const std::string& key) const {
    return entry(section, key).value;
  }

  Vec vector(const std::string& section, const std::string& key,
             Index size) const {
    const Entry& e = entry(section, key);
    std::vector<double> values;
    std::string_view rest = e.value;
    while (true) {
      rest = trim(rest);
      if (rest.empty()) break;
      const auto sep = rest.find_first_of(" \t,");
      values.push_back(parse_number(rest.substr(0, sep), e.line, key));
      if (sep == std::string_view::npos) break;
      rest = rest.substr(sep + 1);
    }
    if (Index(values.size()) != size) {
      throw ConfigError("'" + key + "' expects " + std::to_string(size) +
                            " values, got " + std::to_string(values.size()),
                        e.line);
    }
    return Eigen::Map<const Vec>(values.data(), size);
  }

  double number(const std::string& section, const std::string& key) const {
    return vector(section, key, 1)(0);
  }

  int integer(const std::string& section, const std::string& key) const {
    const Entry& e = entry(section, key);
    const double v = number(section, key);
    if (v != std::floor(v) || std::abs(v) > 1e9)
      throw ConfigError("'" + key + "' must be an integer", e.line);
    return int(v);
  }

  int line(const std::string& section, const std::string& key) const {
    return has(section, key) ? entry(section, key).line : 0;
  }

 private:
  const Document& doc_;
};

inline std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string format_vector(const Vec& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_number(v(i));
  }
  return out;
}

inline bool is_diagonal(const Mat& m) {
  return (m - Mat(m.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace detail

inline ControllerKind parse_controller_kind(std::string_view s) {
  if (s == "ctc") return ControllerKind::kCtc;
  if (s == "mpc") return ControllerKind::kMpc;
  if (s == "ces-mpc") return ControllerKind::kCesMpc;
  throw InvalidArgument("unknown controller '" + std::string(s) +
                        "' (expected ctc, mpc or ces-mpc)");
}

/// Parses an experiment file. Errors carry the offending line number.
inline SimConfig parse_config(std::istream& in) {
  const detail::Document doc = detail::parse_document(in);
  const detail::Reader r(doc);
  SimConfig c;

  c.params.m1 = r.number("manipulator", "m1");
  c.params.m2 = r.number("manipulator", "m2");
  c.params.l1 = r.number("manipulator", "l1");
  c.params.l2 = r.number("manipulator", "l2");
  c.params.g = r.number("manipulator", "g");

  const std::string kind = r.word("trajectory", "kind");
  if (kind == "circle") {
    c.spec.kind = PathKind::kCircle;
    c.spec.center = r.vector("trajectory", "center", 2);
    c.spec.radius = r.number("trajectory", "radius");
    c.spec.rate = r.number("trajectory", "rate");
    c.spec.phase = r.number("trajectory", "phase");
  } else if (kind == "line") {
    c.spec.kind = PathKind::kLine;
    c.spec.start = r.vector("trajectory", "start", 2);
    c.spec.end = r.vector("trajectory", "end", 2);
    c.spec.traversal = r.number("trajectory", "traversal");
  } else {
    throw ConfigError("trajectory kind must be circle or line",
                      r.line("trajectory", "kind"));
  }
  const std::string elbow = r.word("trajectory", "elbow");
  if (elbow == "down") {
    c.spec.elbow = ElbowBranch::kDown;
  } else if (elbow == "up") {
    c.spec.elbow = ElbowBranch::kUp;
  } else {
    throw ConfigError("elbow must be up or down", r.line("trajectory", "elbow"));
  }

  try {
    c.controller = parse_controller_kind(r.word("controller", "kind"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what(), r.line("controller", "kind"));
  }
  c.gains.Kp = r.vector("controller", "kp", 2).asDiagonal();
  c.gains.Kd = r.vector("controller", "kd", 2).asDiagonal();
  c.coupling.lambda = r.number("controller", "lambda");
  c.coupling.singularity_damping = r.number("controller", "singularity_damping");
  c.coupling.singularity_threshold =
      r.number("controller", "singularity_threshold");
  c.exit_threshold = r.number("controller", "exit_threshold");

  c.weights.Q1 = r.vector("weights", "q1", 2).asDiagonal();
  c.weights.Q2 = r.vector("weights", "q2", 2).asDiagonal();
  c.weights.R = r.vector("weights", "r", 2).asDiagonal();
  c.weights.Z = r.integer("weights", "horizon");

  c.limits.tau_max = r.vector("limits", "tau_max", 2);

  c.T = r.number("sim", "period");
  c.duration = r.number("sim", "duration");
  c.substeps = r.integer("sim", "substeps");
  c.initial.q = r.vector("sim", "initial_q", 2);
  c.initial.qd = r.vector("sim", "initial_qd", 2);

  try {
    c.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return c;
}

inline SimConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

inline std::string serialize_config(const SimConfig& c) {
  using detail::format_number;
  using detail::format_vector;
  require(detail::is_diagonal(c.gains.Kp) && detail::is_diagonal(c.gains.Kd) &&
              detail::is_diagonal(c.weights.Q1) &&
              detail::is_diagonal(c.weights.Q2) &&
              detail::is_diagonal(c.weights.R),
          "only diagonal gains and weights can be written");
  std::ostringstream os;
  os << "[manipulator]\n"
     << "m1 = " << format_number(c.params.m1) << "\n"
     << "m2 = " << format_number(c.params.m2) << "\n"
     << "l1 = " << format_number(c.params.l1) << "\n"
     << "l2 = " << format_number(c.params.l2) << "\n"
     << "g = " << format_number(c.params.g) << "\n\n";
  os << "[trajectory]\n";
  if (c.spec.kind == PathKind::kCircle) {
    os << "kind = circle\n"
       << "center = " << format_vector(c.spec.center) << "\n"
       << "radius = " << format_number(c.spec.radius) << "\n"
       << "rate = " << format_number(c.spec.rate) << "\n"
       << "phase = " << format_number(c.spec.phase) << "\n";
  } else {
    os << "kind = line\n"
       << "start = " << format_vector(c.spec.start) << "\n"
       << "end = " << format_vector(c.spec.end) << "\n"
       << "traversal = " << format_number(c.spec.traversal) << "\n";
  }
  os << "elbow = " << (c.spec.elbow == ElbowBranch::kDown ? "down" : "up")
     << "\n\n";
  os << "[controller]\n"
     << "kind = " << to_string(c.controller) << "\n"
     << "kp = " << format_vector(c.gains.Kp.diagonal()) << "\n"
     << "kd = " << format_vector(c.gains.Kd.diagonal()) << "\n"
     << "lambda = " << format_number(c.coupling.lambda) << "\n"
     << "singularity_damping = "
     << format_number(c.coupling.singularity_damping) << "\n"
     << "singularity_threshold = "
     << format_number(c.coupling.singularity_threshold) << "\n"
     << "exit_threshold = " << format_number(c.exit_threshold) << "\n\n";
  os << "[weights]\n"
     << "q1 = " << format_vector(c.weights.Q1.diagonal()) << "\n"
     << "q2 = " << format_vector(c.weights.Q2.diagonal()) << "\n"
     << "r = " << format_vector(c.weights.R.diagonal()) << "\n"
     << "horizon = " << c.weights.Z << "\n\n";
  os << "[limits]\n"
     << "tau_max = " << format_vector(c.limits.tau_max) << "\n\n";
  os << "[sim]\n"
     << "period = " << format_number(c.T) << "\n"
     << "duration = " << format_number(c.duration) << "\n"
     << "substeps = " << c.substeps << "\n"
     << "initial_q = " << format_vector(c.initial.q) << "\n"
     << "initial_qd = " << format_vector(c.initial.qd) << "\n";
  return os.str();
}

/// Circle of radius 5 cm about (0.15, 0.15) m with a 4 s period, run for 8 s
/// from rest at a point 2 cm radially outside the path start.
inline SimConfig fig3_repro_config() {
  SimConfig c;
  c.spec.kind = PathKind::kCircle;
  c.spec.center = (Vec(2) << 0.15, 0.15).finished();
  c.spec.radius = 0.05;
  c.spec.rate = 2.0 * std::numbers::pi / 4.0;
  c.spec.phase = 0.0;
  c.spec.elbow = ElbowBranch::kDown;
  c.duration = 8.0;
  const Vec start = sample_path(c.spec, 0.0).p;
  const Vec outward = (start - c.spec.center).normalized();
  c.initial.q = inverse_kinematics(c.params, start + 0.02 * outward, c.spec.elbow);
  c.initial.qd = Vec::Zero(2);
  return c;
}

/// Arm at rest on a stationary reference point.
inline SimConfig gravity_hold_config() {
  SimConfig c;
  c.spec.kind = PathKind::kLine;
  c.spec.start = (Vec(2) << 0.15, 0.15).finished();
  c.spec.end = c.spec.start;
  c.spec.traversal = 1.0;
  c.spec.elbow = ElbowBranch::kDown;
  c.controller = ControllerKind::kCtc;
  c.duration = 1.0;
  c.initial.q = inverse_kinematics(c.params, c.spec.start, c.spec.elbow);
  c.initial.qd = Vec::Zero(2);
  return c;
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig3-repro", "gravity-hold"};
  return names;
}

inline SimConfig preset(std::string_view name) {
  if (name == "fig3-repro") return fig3_repro_config();
  if (name == "gravity-hold") return gravity_hold_config();
  throw InvalidArgument("unknown preset '" + std::string(name) +
                        "' (expected fig3-repro or gravity-hold)");
}

}  // namespace cesmpc
