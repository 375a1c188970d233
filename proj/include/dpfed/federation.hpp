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

#ifndef DPFED_FEDERATION_HPP
#define DPFED_FEDERATION_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dpfed/data.hpp"
#include "dpfed/model.hpp"
#include "dpfed/privacy_accounting.hpp"
#include "dpfed/rng.hpp"
#include "dpfed/selection.hpp"

namespace dpfed::learning {

// Stepsize schedules used by the analysis: beta/(gamma + t) for the strongly
// convex regime, (b1/clip)/sqrt(T) for the smooth regime, or a constant.
// t indexes the flattened local step t = t_g * T_l + t_l, from 0.
struct StepsizeSpec {
  enum class Kind { kConstant, kInverseTime, kInverseSqrtTotal };
  Kind kind = Kind::kConstant;
  double constant = 0.1;
  double beta = 1.0;
  double gamma = 1.0;
  double b1 = 1.0;

  double at(std::uint64_t step, std::uint64_t total_steps, double clip) const;
  void validate() const;
};

// One client's reported contribution for a round slot.
struct LocalUpdate {
  int client_id = 0;
  std::vector<double> delta;      // w_start - w_end across the local steps
  double noise_sigma_sq = 0.0;    // per-dimension variance applied
  double noise_norm = 0.0;        // L2 norm of the injected (stepsize-scaled) noise
  double max_clipped_norm = 0.0;  // largest post-clip per-example gradient norm seen
};

// T_l local DP-SGD steps: uniform subsample without replacement, per-example
// clip, average, isotropic Gaussian noise of per-dimension variance sigma_sq,
// SGD step. `stepsizes` supplies one stepsize per local step. Deterministic
// given the stream.
LocalUpdate client_update(const Model& snapshot, const data::Dataset& dataset,
                          std::span<const std::size_t> indices, double sigma_sq,
                          std::uint64_t local_rounds, std::size_t batch_size,
                          std::span<const double> stepsizes, double clip, RngStream& stream,
                          int client_id = 0);

// Uniform average of the slot updates; a client sampled m times in a round
// appears as m entries. Throws on an empty list or mixed dimensions.
std::vector<double> aggregate(const std::vector<LocalUpdate>& updates);

// Per-round telemetry.
struct RoundRecord {
  std::uint64_t round = 0;
  std::vector<int> selected;  // multiset, sorted
  double global_train_loss = 0.0;
  double eval_loss = 0.0;
  double eval_accuracy = 0.0;
  double mean_noise_norm = 0.0;
  double max_clipped_norm = 0.0;  // largest post-clip per-example norm this round
};

// Core run parameters (the harness assembles these from its config file).
struct RunConfig {
  ModelSpec model;
  std::uint64_t global_rounds = 1;
  std::uint64_t local_rounds = 1;
  std::uint64_t per_round = 1;
  double clip = 1.0;
  StepsizeSpec stepsize;
  bool apply_server_stepsize = false;
  std::uint64_t master_seed = 0;
  double init_stddev = 0.0;

  void validate() const;
};

struct FederationResult {
  std::vector<RoundRecord> records;
  Model final_model;
  selection::Schedule schedule;
  std::vector<double> sigma_squared;  // per client, from realized T_k
};

using RoundObserver = std::function<void(std::uint64_t round, const Model& model)>;

// The model as it stands before round 0 (seeded initialization included);
// exposed so schedule-building passes can start from the same point.
Model initial_model(const RunConfig& config);

// DP-FedAvg: pre-samples the participation schedule from `probabilities`,
// computes T_k and each sigma_k^2, then runs global_rounds of
// client_update + aggregate, evaluating on `holdout` every round. Client k
// trains on train.example(i) for i in client_indices[k], with per-step batch
// round(r_k * |M_k|). Fully deterministic given the master seed.
FederationResult run_federation(const RunConfig& config,
                                const std::vector<privacy::ClientProfile>& profiles,
                                const std::vector<std::vector<std::size_t>>& client_indices,
                                const data::Dataset& train, const data::Dataset& holdout,
                                const selection::SelectionProbabilities& probabilities,
                                const RoundObserver& observer = nullptr);

// Same, but replays an externally built schedule (adaptive policies).
FederationResult run_federation_with_schedule(
    const RunConfig& config, const std::vector<privacy::ClientProfile>& profiles,
    const std::vector<std::vector<std::size_t>>& client_indices, const data::Dataset& train,
    const data::Dataset& holdout, selection::Schedule schedule,
    const RoundObserver& observer = nullptr);

// Mean per-example loss of `model` over the whole dataset (the global
// objective under size-proportional weights) and top-1 accuracy.
double mean_loss(const Model& model, const data::Dataset& dataset);
double accuracy(const Model& model, const data::Dataset& dataset);

}  // namespace dpfed::learning

#endif  // DPFED_FEDERATION_HPP
