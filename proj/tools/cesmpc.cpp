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

#include <CLI11.hpp>

#include <iostream>

namespace {

void add_common(CLI::App* cmd, cesmpc::RunManifest& m, std::string& controller) {
  cmd->add_option("--config", m.config_path, "Experiment file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--preset", m.preset, "Built-in experiment")
      ->check(CLI::IsMember(cesmpc::preset_names()));
  cmd->add_option("--out", m.out_dir, "Output directory");
  cmd->add_option("--name", m.name, "Experiment name (file prefix)");
  cmd->add_option("--controller", controller, "Override the controller")
      ->check(CLI::IsMember({"ctc", "mpc", "ces-mpc"}));
  cmd->add_option("--seed", m.seed, "Seed for randomized checks");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contour-coupled predictive control of a planar two-link arm"};
  app.require_subcommand(1);

  cesmpc::RunManifest manifest;
  std::string controller;

  auto* simulate = app.add_subcommand("simulate", "Run one closed-loop experiment");
  auto* compare = app.add_subcommand("compare", "Run CTC, MPC and CES-MPC side by side");
  auto* lmi = app.add_subcommand("lmi-check", "Certify the terminal ingredients");
  auto* disc = app.add_subcommand("discretize-check", "Order study of the one-step model");
  for (auto* cmd : {simulate, compare, lmi, disc}) add_common(cmd, manifest, controller);
  lmi->add_flag("--zero-input", manifest.zero_input,
                "Replace the input matrix by zeros");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cesmpc::kExitConfig;
  }
  if (!controller.empty())
    manifest.controller = cesmpc::parse_controller_kind(controller);

  std::ostream& out = std::cout;
  std::ostream& err = std::cerr;
  if (simulate->parsed()) return cesmpc::cmd_simulate(manifest, out, err);
  if (compare->parsed()) return cesmpc::cmd_compare(manifest, out, err);
  if (lmi->parsed()) return cesmpc::cmd_lmi_check(manifest, out, err);
  return cesmpc::cmd_discretize_check(manifest, out, err);
}
