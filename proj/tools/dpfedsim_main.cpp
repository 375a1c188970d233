// Copyright 2026 the dpfedsim authors
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

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpfed/experiment.hpp"
#include "dpfed/text.hpp"

namespace {

// Grid syntax: either an explicit comma list ("2,8,64") or a geometric spec
// "start:factor:count" ("2:4:10" -> 2, 8, 32, ...).
std::vector<std::uint64_t> parse_grid(const std::string& spec, std::string& error) {
  std::vector<std::uint64_t> grid;
  if (spec.find(':') != std::string::npos) {
    const auto parts = dpfed::text::split(spec, ':');
    std::uint64_t start = 0, count = 0;
    double factor = 0.0;
    if (parts.size() != 3 || !dpfed::text::parse_u64(parts[0], start) ||
        !dpfed::text::parse_double(parts[1], factor) || !dpfed::text::parse_u64(parts[2], count) ||
        start == 0 || factor <= 1.0 || count == 0) {
      error = "bad geometric grid '" + spec + "' (want start:factor:count)";
      return grid;
    }
    double t = static_cast<double>(start);
    for (std::uint64_t i = 0; i < count; ++i) {
      const auto v = static_cast<std::uint64_t>(t);
      if (grid.empty() || v > grid.back()) grid.push_back(v);
      t *= factor;
    }
    return grid;
  }
  for (auto part : dpfed::text::split(spec, ',')) {
    std::uint64_t v = 0;
    if (!dpfed::text::parse_u64(part, v) || v == 0) {
      error = "bad grid entry '" + std::string(part) + "'";
      return {};
    }
    grid.push_back(v);
  }
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dpfedsim: differentially private federated averaging simulator"};
  app.require_subcommand(1);

  // solve
  auto* solve = app.add_subcommand("solve", "solve the privacy-aware client selection problem");
  std::string solve_manifest, solve_output;
  double solve_eta = 1.0;
  std::uint64_t solve_dimension = 1;
  solve->add_option("manifest", solve_manifest, "client manifest path")->required();
  solve->add_option("--eta", solve_eta, "privacy-error weight (eta >= 0)")->required();
  solve->add_option("--dimension", solve_dimension, "model dimension D")->required();
  solve->add_option("--output", solve_output, "report JSON path");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "run DP-FedAvg under the configured policy");
  std::string simulate_config;
  simulate->add_option("config", simulate_config, "experiment config path")->required();

  // bounds
  auto* bounds_cmd = app.add_subcommand("bounds", "evaluate the convergence bounds on a T grid");
  std::string bounds_constants, bounds_terms, bounds_grid = "2:2:20", bounds_output = "bounds.csv";
  bounds_cmd->add_option("constants", bounds_constants, "constants file ([constants]/[terms])")
      ->required();
  bounds_cmd->add_option("--terms-from", bounds_terms, "read error terms from a summary JSON");
  bounds_cmd->add_option("--grid", bounds_grid, "T grid: comma list or start:factor:count");
  bounds_cmd->add_option("--output", bounds_output, "output CSV path");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run a parameter sweep across all policies");
  std::string sweep_config, sweep_parameter;
  std::vector<std::string> sweep_values;
  sweep->add_option("config", sweep_config, "experiment config path")->required();
  sweep->add_option("--parameter", sweep_parameter,
                    "one of: eta, batch_size, budget_spec, similarity")
      ->required();
  sweep->add_option("--values", sweep_values, "values to sweep")->expected(-1);

  // manifest-validate
  auto* validate = app.add_subcommand("manifest-validate", "check a client manifest");
  std::string validate_manifest;
  validate->add_option("manifest", validate_manifest, "client manifest path")->required();

  CLI11_PARSE(app, argc, argv);

  if (solve->parsed()) return dpfed::harness::cli_solve(solve_manifest, solve_eta, solve_dimension, solve_output);
  if (simulate->parsed()) return dpfed::harness::cli_simulate(simulate_config);
  if (bounds_cmd->parsed()) {
    std::string error;
    const auto grid = parse_grid(bounds_grid, error);
    if (!error.empty()) {
      std::cerr << "error: " << error << "\n";
      return 1;
    }
    return dpfed::harness::cli_bounds(bounds_constants, bounds_terms, grid, bounds_output);
  }
  if (sweep->parsed()) return dpfed::harness::cli_sweep(sweep_config, sweep_parameter, sweep_values);
  if (validate->parsed()) return dpfed::harness::cli_manifest_validate(validate_manifest);
  return 1;
}
