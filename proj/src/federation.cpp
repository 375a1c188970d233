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

#include "dpfed/federation.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace dpfed::learning {

namespace {
// Stream purpose tags; distinct constants keep derived streams independent.
constexpr std::uint64_t kTagSchedule = 0x5c4ed01eULL;
constexpr std::uint64_t kTagClientUpdate = 0xc11e47ULL;
constexpr std::uint64_t kTagModelInit = 0x10de1ULL;
}  // namespace

double StepsizeSpec::at(std::uint64_t step, std::uint64_t total_steps, double clip) const {
  switch (kind) {
    case Kind::kConstant:
      return constant;
    case Kind::kInverseTime:
      return beta / (gamma + static_cast<double>(step));
    case Kind::kInverseSqrtTotal:
      return (b1 / clip) / std::sqrt(static_cast<double>(total_steps));
  }
  throw std::domain_error("stepsize: invalid schedule kind");
}

void StepsizeSpec::validate() const {
  switch (kind) {
    case Kind::kConstant:
      if (!(constant > 0.0)) throw std::domain_error("stepsize: constant must be > 0");
      return;
    case Kind::kInverseTime:
      if (!(beta > 0.0)) throw std::domain_error("stepsize: beta must be > 0");
      if (!(gamma >= 1.0)) throw std::domain_error("stepsize: gamma must be >= 1");
      return;
    case Kind::kInverseSqrtTotal:
      if (!(b1 > 0.0)) throw std::domain_error("stepsize: b1 must be > 0");
      return;
  }
  throw std::domain_error("stepsize: invalid schedule kind");
}

void RunConfig::validate() const {
  model.validate();
  stepsize.validate();
  if (global_rounds == 0) throw std::domain_error("run config: global_rounds must be >= 1");
  if (local_rounds == 0) throw std::domain_error("run config: local_rounds must be >= 1");
  if (per_round == 0) throw std::domain_error("run config: per_round must be >= 1");
  if (!(clip > 0.0)) throw std::domain_error("run config: clip must be > 0");
  if (!(init_stddev >= 0.0)) throw std::domain_error("run config: init_stddev must be >= 0");
}

LocalUpdate client_update(const Model& snapshot, const data::Dataset& dataset,
                          std::span<const std::size_t> indices, double sigma_sq,
                          std::uint64_t local_rounds, std::size_t batch_size,
                          std::span<const double> stepsizes, double clip, RngStream& stream,
                          int client_id) {
  if (local_rounds == 0) throw std::domain_error("client update: local_rounds must be >= 1");
  if (batch_size == 0) throw std::domain_error("client update: batch size must be >= 1");
  if (batch_size > indices.size())
    throw std::domain_error("client update: batch size exceeds client dataset size");
  if (stepsizes.size() != local_rounds)
    throw std::domain_error("client update: need one stepsize per local step");
  if (!(sigma_sq >= 0.0)) throw std::domain_error("client update: sigma_sq must be >= 0");

  const std::size_t dim = snapshot.spec.parameter_count();
  Model local = snapshot;
  std::vector<double> example_gradient(dim);
  std::vector<double> batch_gradient(dim);
  std::vector<double> noise_accumulator(dim, 0.0);
  const double sigma = std::sqrt(sigma_sq);

  LocalUpdate update;
  update.client_id = client_id;
  update.noise_sigma_sq = sigma_sq;

  for (std::uint64_t step = 0; step < local_rounds; ++step) {
    const std::vector<std::size_t> batch =
        stream.sample_without_replacement(indices.size(), batch_size);
    std::fill(batch_gradient.begin(), batch_gradient.end(), 0.0);
    for (std::size_t pick : batch) {
      const std::size_t example = indices[pick];
      per_example_gradient(local, dataset.example(example), dataset.labels[example],
                           example_gradient);
      const double norm = clip_gradient(example_gradient, clip);
      assert(norm <= clip * (1.0 + 1e-12));
      update.max_clipped_norm = std::max(update.max_clipped_norm, norm);
      for (std::size_t j = 0; j < dim; ++j) batch_gradient[j] += example_gradient[j];
    }
    const double inv_batch = 1.0 / static_cast<double>(batch_size);
    const double alpha = stepsizes[step];
    if (sigma > 0.0) {
      for (std::size_t j = 0; j < dim; ++j) {
        const double noise = sigma * stream.next_normal();
        noise_accumulator[j] += alpha * noise;
        local.parameters[j] -= alpha * (batch_gradient[j] * inv_batch + noise);
      }
    } else {
      for (std::size_t j = 0; j < dim; ++j)
        local.parameters[j] -= alpha * batch_gradient[j] * inv_batch;
    }
  }

  update.delta.resize(dim);
  double noise_norm_sq = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    update.delta[j] = snapshot.parameters[j] - local.parameters[j];
    noise_norm_sq += noise_accumulator[j] * noise_accumulator[j];
  }
  update.noise_norm = std::sqrt(noise_norm_sq);
  return update;
}

std::vector<double> aggregate(const std::vector<LocalUpdate>& updates) {
  if (updates.empty()) throw std::domain_error("aggregate: no updates");
  const std::size_t dim = updates.front().delta.size();
  std::vector<double> mean(dim, 0.0);
  for (const LocalUpdate& update : updates) {
    if (update.delta.size() != dim) throw std::domain_error("aggregate: dimension mismatch");
    for (std::size_t j = 0; j < dim; ++j) mean[j] += update.delta[j];
  }
  const double inv = 1.0 / static_cast<double>(updates.size());
  for (double& m : mean) m *= inv;
  return mean;
}

Model initial_model(const RunConfig& config) {
  Model model = make_model(config.model);
  RngStream init_stream = derive_stream(config.master_seed, {kTagModelInit});
  init_model(model, config.init_stddev, init_stream);
  return model;
}

double mean_loss(const Model& model, const data::Dataset& dataset) {
  if (dataset.size() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    total += per_example_loss(model, dataset.example(i), dataset.labels[i]);
  return total / static_cast<double>(dataset.size());
}

double accuracy(const Model& model, const data::Dataset& dataset) {
  if (model.spec.architecture == Architecture::kQuadratic || dataset.size() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    if (predict(model, dataset.example(i)) == dataset.labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(dataset.size());
}

FederationResult run_federation_with_schedule(
    const RunConfig& config, const std::vector<privacy::ClientProfile>& profiles,
    const std::vector<std::vector<std::size_t>>& client_indices, const data::Dataset& train,
    const data::Dataset& holdout, selection::Schedule schedule, const RoundObserver& observer) {
  config.validate();
  if (profiles.size() != client_indices.size())
    throw std::domain_error("federation: profile and index list counts disagree");
  if (profiles.empty()) throw std::domain_error("federation: no clients");
  if (schedule.rounds.size() != config.global_rounds)
    throw std::domain_error("federation: schedule length mismatch");
  if (schedule.selection_counts.size() != profiles.size())
    throw std::domain_error("federation: schedule client count mismatch");
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    if (profiles[k].dataset_size != client_indices[k].size())
      throw std::domain_error("federation: profile dataset size disagrees with partition");
  }

  // Per-client batch from the profile's subsampling ratio; sigma from the
  // realized selection counts (never-selected clients stay at zero and are
  // never contacted).
  const std::size_t n = profiles.size();
  std::vector<std::size_t> batch_sizes(n);
  std::vector<double> sigma_squared(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto batch = static_cast<std::size_t>(std::llround(
        profiles[k].subsampling_ratio * static_cast<double>(profiles[k].dataset_size)));
    batch_sizes[k] = std::min<std::size_t>(std::max<std::size_t>(batch, 1), profiles[k].dataset_size);
    sigma_squared[k] = privacy::per_client_sigma_squared(
        profiles[k], schedule.selection_counts[k], config.local_rounds, config.clip);
  }

  Model model = initial_model(config);

  const std::uint64_t total_steps = config.global_rounds * config.local_rounds;
  std::vector<double> stepsizes(config.local_rounds);

  FederationResult result;
  result.records.reserve(config.global_rounds);
  std::vector<LocalUpdate> updates;
  for (std::uint64_t round = 0; round < config.global_rounds; ++round) {
    const auto& selected = schedule.rounds[round];
    if (selected.size() != config.per_round)
      throw std::domain_error("federation: round multiset size mismatch");
    for (std::uint64_t step = 0; step < config.local_rounds; ++step)
      stepsizes[step] =
          config.stepsize.at(round * config.local_rounds + step, total_steps, config.clip);

    updates.clear();
    updates.reserve(selected.size());
    std::uint64_t occurrence = 0;
    int previous = -1;
    for (std::size_t slot = 0; slot < selected.size(); ++slot) {
      const int client = selected[slot];
      occurrence = (client == previous) ? occurrence + 1 : 0;
      previous = client;
      RngStream stream = derive_stream(
          config.master_seed,
          {kTagClientUpdate, round, static_cast<std::uint64_t>(client), occurrence});
      updates.push_back(client_update(model, train, client_indices[client],
                                      sigma_squared[client], config.local_rounds,
                                      batch_sizes[client], stepsizes, config.clip, stream,
                                      client));
    }

    std::vector<double> mean_delta = aggregate(updates);
    const double server_alpha =
        config.apply_server_stepsize
            ? config.stepsize.at(round * config.local_rounds, total_steps, config.clip)
            : 1.0;
    for (std::size_t j = 0; j < mean_delta.size(); ++j)
      model.parameters[j] -= server_alpha * mean_delta[j];

    RoundRecord record;
    record.round = round;
    record.selected = selected;
    record.global_train_loss = mean_loss(model, train);
    record.eval_loss = mean_loss(model, holdout);
    record.eval_accuracy = accuracy(model, holdout);
    double noise_sum = 0.0;
    for (const LocalUpdate& update : updates) {
      noise_sum += update.noise_norm;
      record.max_clipped_norm = std::max(record.max_clipped_norm, update.max_clipped_norm);
    }
    record.mean_noise_norm = noise_sum / static_cast<double>(updates.size());
    result.records.push_back(std::move(record));

    if (observer) observer(round, model);
  }

  result.final_model = std::move(model);
  result.schedule = std::move(schedule);
  result.sigma_squared = std::move(sigma_squared);
  return result;
}

FederationResult run_federation(const RunConfig& config,
                                const std::vector<privacy::ClientProfile>& profiles,
                                const std::vector<std::vector<std::size_t>>& client_indices,
                                const data::Dataset& train, const data::Dataset& holdout,
                                const selection::SelectionProbabilities& probabilities,
                                const RoundObserver& observer) {
  config.validate();
  if (probabilities.size() != profiles.size())
    throw std::domain_error("federation: probability vector length mismatch");
  selection::Schedule schedule =
      selection::sample_schedule(probabilities, config.global_rounds, config.per_round,
                                 derive_seed(config.master_seed, {kTagSchedule}));
  return run_federation_with_schedule(config, profiles, client_indices, train, holdout,
                                      std::move(schedule), observer);
}

}  // namespace dpfed::learning
