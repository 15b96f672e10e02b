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

#include <cesmpc/cli.hpp>
#include <cesmpc/config.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.hpp"

namespace cesmpc {
namespace {

namespace fs = std::filesystem;
using testing::vec2;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("cesmpc_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name) << text;
    return path_ / name;
  }

 private:
  fs::path path_;
};

std::string fig3_text() { return serialize_config(fig3_repro_config()); }

std::string replace_line(std::string text, const std::string& key, const std::string& line) {
  const auto at = text.find("\n" + key + " = ");
  const auto end = text.find('\n', at + 1);
  return text.replace(at + 1, end - at - 1, line);
}

::testing::AssertionResult config_error_at(const std::string& text, int line,
                                           const std::string& fragment) {
  try {
    parse_config_string(text);
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (e.line() != line)
      return ::testing::AssertionFailure() << "line " << e.line() << ": " << what;
    if (what.find(fragment) == std::string::npos)
      return ::testing::AssertionFailure() << "message: " << what;
    return ::testing::AssertionSuccess();
  }
  return ::testing::AssertionFailure() << "no ConfigError";
}

TEST(Config, RoundTripPresets) {
  for (const auto& name : preset_names()) {
    const SimConfig c = preset(name);
    const std::string text = serialize_config(c);
    const SimConfig back = parse_config_string(text);
    EXPECT_TRUE(back == c) << name;
    EXPECT_EQ(serialize_config(back), text) << name;
  }
}

TEST(Config, RoundTripKeepsEveryBit) {
  testing::Rng rng;
  SimConfig c = fig3_repro_config();
  c.params.m1 = rng.uniform(0.5, 2);
  c.weights.Q2 = vec2(rng.uniform(0, 1), rng.uniform(0, 1)).asDiagonal();
  c.weights.R = vec2(rng.uniform(0, 1e-6), 1.0 / 3.0).asDiagonal();
  c.coupling.lambda = std::numbers::pi;
  c.initial.qd = vec2(0.1, -1.0 / 7.0);
  c.controller = ControllerKind::kMpc;
  c.spec.elbow = ElbowBranch::kUp;
  c.initial.q = inverse_kinematics(c.params, vec2(0.22, 0.15), ElbowBranch::kUp);
  EXPECT_TRUE(parse_config_string(serialize_config(c)) == c);
}

TEST(Config, CommentsAndBlankLinesAreIgnored) {
  const std::string text = "# header\n\n" + replace_line(fig3_text(), "m1", "m1 = 1.5   # heavier");
  EXPECT_DOUBLE_EQ(parse_config_string(text).params.m1, 1.5);
}

TEST(Config, MissingKeyIsNamed) {
  std::string text = fig3_text();
  text = replace_line(text, "radius", "");
  try {
    parse_config_string(text);
    FAIL() << "accepted a config without radius";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("radius"), std::string::npos) << e.what();
  }
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_TRUE(config_error_at("[manipulator]\nm1 = abc\n", 2, "m1"));
  EXPECT_TRUE(config_error_at("[manipulator]\nm1 = 1\nwidth = 2\n", 3, "width"));
  EXPECT_TRUE(config_error_at("[manipulator]\nm1 = 1\nm1 = 2\n", 3, "m1"));
  EXPECT_TRUE(config_error_at("\n[nowhere]\n", 2, "nowhere"));
  EXPECT_TRUE(config_error_at("m1 = 1\n", 1, "section"));
  EXPECT_TRUE(config_error_at("[manipulator]\nm1 =\n", 2, "m1"));
}

TEST(Config, RejectsInvalidValues) {
  EXPECT_THROW(parse_config_string(replace_line(fig3_text(), "m1", "m1 = -1")), ConfigError);
  EXPECT_THROW(parse_config_string(replace_line(fig3_text(), "horizon", "horizon = 0")),
               ConfigError);
  EXPECT_THROW(parse_config_string(replace_line(fig3_text(), "center", "center = 0.4, 0.4")),
               ConfigError);
  EXPECT_THROW(parse_config_string(replace_line(fig3_text(), "kind", "kind = pid")), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/cesmpc.cfg"), std::runtime_error);
}

TEST(Config, ControllerNames) {
  EXPECT_EQ(parse_controller_kind("ctc"), ControllerKind::kCtc);
  EXPECT_EQ(parse_controller_kind("mpc"), ControllerKind::kMpc);
  EXPECT_EQ(parse_controller_kind("ces-mpc"), ControllerKind::kCesMpc);
  EXPECT_THROW(parse_controller_kind("lqr"), std::exception);
  EXPECT_THROW(preset("nope"), InvalidArgument);
}

TEST(Cli, SimulateWritesOneRowPerPeriod) {
  TempDir dir;
  RunManifest m;
  m.out_dir = dir.path().string();
  m.name = "fig3";
  std::ostringstream out, err;
  EXPECT_EQ(cmd_simulate(m, out, err), kExitOk) << err.str();
  const auto rows = lines_of(slurp(dir.path() / "fig3_log.csv"));
  ASSERT_EQ(rows.size(), 4001u);
  EXPECT_EQ(rows.front(), kLogHeader);
  EXPECT_EQ(std::count(rows[1].begin(), rows[1].end(), ','), 16);
  EXPECT_TRUE(fs::exists(dir.path() / "fig3_metrics.txt"));
}

TEST(Cli, ZeroDurationWritesOnlyTheHeader) {
  TempDir dir;
  SimConfig c = gravity_hold_config();
  c.duration = 0;
  RunManifest m;
  m.config_path = dir.write("zero.cfg", serialize_config(c)).string();
  m.out_dir = (dir.path() / "out").string();
  std::ostringstream out, err;
  EXPECT_EQ(cmd_simulate(m, out, err), kExitOk) << err.str();
  EXPECT_EQ(slurp(dir.path() / "out" / "run_log.csv"), std::string(kLogHeader) + "\n");
}

TEST(Cli, GravityHoldKeepsTheArmStill) {
  TempDir dir;
  RunManifest m;
  m.preset = "gravity-hold";
  m.out_dir = dir.path().string();
  for (ControllerKind kind : kAllControllers) {
    m.controller = kind;
    m.name = std::string(to_string(kind));
    std::ostringstream out, err;
    ASSERT_EQ(cmd_simulate(m, out, err), kExitOk) << err.str();
    const auto rows = lines_of(slurp(dir.path() / (m.name + "_log.csv")));
    ASSERT_EQ(rows.size(), 501u);
    std::istringstream last(rows.back());
    std::vector<double> v;
    for (std::string cell; std::getline(last, cell, ',');) {
      v.push_back(cell == "local-law" || cell == "single" || cell == "horizon-qp"
                      ? 0.0 : std::stod(cell));
    }
    EXPECT_NEAR(v[1], v[5], 1e-9) << m.name;
    EXPECT_NEAR(v[2], v[6], 1e-9) << m.name;
  }
}

TEST(Cli, BadConfigIsAConfigError) {
  TempDir dir;
  RunManifest m;
  m.config_path = dir.write("bad.cfg", "[manipulator]\nm1 = x\n").string();
  m.out_dir = dir.path().string();
  std::ostringstream out, err;
  EXPECT_EQ(cmd_simulate(m, out, err), kExitConfig);
  EXPECT_NE(err.str().find("line 2"), std::string::npos) << err.str();
  m.config_path.clear();
  m.name.clear();
  EXPECT_EQ(cmd_simulate(m, out, err), kExitConfig);
}

TEST(Cli, CompareIsReproducibleAndFlagsTheBestController) {
  TempDir a, b;
  RunManifest m;
  std::ostringstream out, err;
  m.out_dir = a.path().string();
  ASSERT_EQ(cmd_compare(m, out, err), kExitOk) << err.str();
  m.out_dir = b.path().string();
  ASSERT_EQ(cmd_compare(m, out, err), kExitOk) << err.str();
  for (const char* f : {"compare_metrics.csv", "contour_series.csv", "run_ctc_log.csv",
                        "run_mpc_log.csv", "run_ces-mpc_log.csv"}) {
    const std::string x = slurp(a.path() / f);
    EXPECT_FALSE(x.empty()) << f;
    EXPECT_EQ(x, slurp(b.path() / f)) << f;
  }
  const auto rows = lines_of(slurp(a.path() / "compare_metrics.csv"));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[3].substr(0, 8), "ces-mpc,");
  EXPECT_EQ(rows[3].substr(rows[3].size() - 4), ",1,1");
  EXPECT_EQ(lines_of(slurp(a.path() / "contour_series.csv")).size(), 4001u);
}

TEST(Cli, DivergingSimulationKeepsThePartialLog) {
  TempDir dir;
  SimConfig c = gravity_hold_config();
  c.initial.q += vec2(0.01, 0);
  c.gains.Kp = vec2(1e300, 1e300).asDiagonal();
  c.limits.tau_max = vec2(1e300, 1e300);
  RunManifest m;
  m.config_path = dir.write("div.cfg", serialize_config(c)).string();
  m.out_dir = dir.path().string();
  std::ostringstream out, err;
  EXPECT_EQ(cmd_simulate(m, out, err), kExitFailed);
  EXPECT_NE(err.str().find("diverged"), std::string::npos);
  const auto rows = lines_of(slurp(dir.path() / "run_log.csv"));
  EXPECT_GE(rows.size(), 1u);
  EXPECT_LT(rows.size(), 501u);
}

TEST(Cli, DivergedRowIsFlaggedWithoutLosingTheOthers) {
  SimConfig c = fig3_repro_config();
  c.duration = 0.1;
  ComparisonReport rep = compare_controllers(c);
  ASSERT_TRUE(rep.all_ok());
  rep.runs[1].ok = false;
  rep.runs[1].log.diverged = true;
  std::ostringstream os;
  write_compare_metrics(os, rep);
  const auto rows = lines_of(os.str());
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[1].substr(0, 7), "ctc,ok,");
  EXPECT_EQ(rows[2].substr(0, 13), "mpc,diverged,");
  EXPECT_EQ(rows[2].substr(rows[2].size() - 4), ",0,0");
  EXPECT_EQ(rows[3].substr(0, 11), "ces-mpc,ok,");
  EXPECT_FALSE(rep.all_ok());
}

TEST(Cli, LmiCheck) {
  RunManifest m;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_lmi_check(m, out, err), kExitOk) << out.str() << err.str();
  EXPECT_NE(out.str().find("1000/1000"), std::string::npos);
  EXPECT_EQ(out.str().substr(out.str().size() - 5), "PASS\n");
  m.zero_input = true;
  std::ostringstream out2;
  EXPECT_EQ(cmd_lmi_check(m, out2, err), kExitFailed);
  EXPECT_EQ(out2.str().substr(0, 5), "FAIL:");
}

TEST(Cli, DiscretizeCheckVerdictIgnoresTheSeed) {
  for (std::uint64_t seed : {1u, 7u, 123456u}) {
    RunManifest m;
    m.seed = seed;
    std::ostringstream out, err;
    EXPECT_EQ(cmd_discretize_check(m, out, err), kExitOk) << out.str();
    EXPECT_EQ(out.str().substr(out.str().size() - 5), "PASS\n");
  }
}

}  // namespace
}  // namespace cesmpc
