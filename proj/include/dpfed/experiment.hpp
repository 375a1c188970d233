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

#ifndef DPFED_EXPERIMENT_HPP
#define DPFED_EXPERIMENT_HPP

#include <optional>
#include <string>
#include <vector>

#include "dpfed/bounds.hpp"
#include "dpfed/config.hpp"
#include "dpfed/federation.hpp"
#include "dpfed/manifest.hpp"
#include "dpfed/selection.hpp"

namespace dpfed::harness {

// Everything assembled for one run at one seed: data, partition, profiles,
// and the selection probabilities chosen by the configured policy.
struct PreparedExperiment {
  data::Dataset train;
  data::Dataset holdout;
  std::vector<privacy::ClientProfile> profiles;
  std::vector<std::vector<std::size_t>> client_indices;
  selection::SelectionProbabilities unbiased{std::vector<double>{1.0}};
  selection::SelectionProbabilities probabilities{std::vector<double>{1.0}};
  double selection_objective = 0.0;
  bool solver_converged = true;
  selection::KktCertificate certificate;
  learning::RunConfig run;
};

struct BoundReport {
  double theorem1 = 0.0;
  bool theorem1_valid = false;  // stepsize precondition may rule it out
  double theorem2 = 0.0;
  double g_select_clip = 0.0;
  double g_dp = 0.0;
  double g_b_clip = 0.0;
  double clipping_gap_unbiased = 0.0;  // max over checkpoint rounds (lower estimate)
  double clipping_gap_biased = 0.0;
};

struct ExperimentResult {
  std::string config_digest;
  Policy policy = Policy::kUnbiased;
  std::uint64_t seed = 0;
  std::vector<learning::RoundRecord> records;
  std::vector<double> unbiased_probabilities;
  std::vector<double> probabilities;
  double selection_objective = 0.0;
  selection::KktCertificate certificate;
  std::vector<std::uint64_t> selection_counts;
  std::vector<double> sigma_squared;
  double final_train_loss = 0.0;
  double final_eval_loss = 0.0;
  double final_eval_accuracy = 0.0;
  std::optional<BoundReport> bound_report;
};

// Builds data, partition, profiles, and policy probabilities for one seed.
// Throws SolverFailure (below) when the privacy-aware solver does not
// converge; std::domain_error / data::ParseError on bad inputs.
PreparedExperiment prepare_experiment(const FederationConfig& config, std::uint64_t seed);

struct SolverFailure : std::runtime_error {
  SolverFailure(std::string what, selection::SolveResult result)
      : std::runtime_error(std::move(what)), result(std::move(result)) {}
  selection::SolveResult result;
};

// Runs one full experiment at one seed (including the biased-loss probe pass
// when that policy is configured).
ExperimentResult run_experiment(const FederationConfig& config, std::uint64_t seed);

// Rounds CSV (schema: round,train_loss,eval_loss,eval_accuracy,mean_noise_norm,selected_ids).
std::string render_rounds_csv(const std::vector<learning::RoundRecord>& records);

// Summary record for one or more seeds of the same config.
std::string render_summary_json(const FederationConfig& config,
                                const std::vector<ExperimentResult>& results);

// Atomic file write (temp + rename).
void write_file_atomic(const std::string& path, const std::string& content);

// CLI entry points; return process exit codes (0 ok, 1 validation/parse,
// 2 numerical non-convergence).
int cli_solve(const std::string& manifest_path, double eta, std::uint64_t dimension,
              const std::string& output_path);
int cli_simulate(const std::string& config_path);
int cli_bounds(const std::string& constants_path, const std::string& terms_summary_path,
               const std::vector<std::uint64_t>& T_grid, const std::string& output_path);
int cli_sweep(const std::string& config_path, const std::string& parameter,
              const std::vector<std::string>& values);
int cli_manifest_validate(const std::string& manifest_path);

}  // namespace dpfed::harness

#endif  // DPFED_EXPERIMENT_HPP
