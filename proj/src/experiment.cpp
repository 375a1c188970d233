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

#include "dpfed/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "dpfed/text.hpp"

namespace dpfed::harness {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kTagProbeLoss = 0x9c0be10ULL;
constexpr std::uint64_t kTagProbeUpdate = 0x9c0be11ULL;

std::size_t client_batch(const privacy::ClientProfile& profile) {
  const auto batch = static_cast<std::size_t>(
      std::llround(profile.subsampling_ratio * static_cast<double>(profile.dataset_size)));
  return std::min<std::size_t>(std::max<std::size_t>(batch, 1), profile.dataset_size);
}

double resolve_init_stddev(const FederationConfig& config) {
  if (config.init_stddev >= 0.0) return config.init_stddev;
  return config.model.architecture == learning::Architecture::kMlpOneHidden ? 0.1 : 0.0;
}

// Pre-builds the participation plan for the loss-based baseline: each round
// probes every client's loss on the current model with a fixed-size batch,
// picks the `per_round` largest, and advances the model noiselessly. The DP
// run then replays this schedule with noise calibrated from the realized T_k.
selection::Schedule build_biased_loss_schedule(const PreparedExperiment& prep) {
  const learning::RunConfig& run = prep.run;
  learning::Model model = learning::initial_model(run);
  const std::uint64_t total_steps = run.global_rounds * run.local_rounds;
  const std::size_t n = prep.profiles.size();

  selection::Schedule schedule;
  schedule.rounds.resize(run.global_rounds);
  schedule.selection_counts.assign(n, 0);

  std::vector<double> losses(n);
  std::vector<double> stepsizes(run.local_rounds);
  std::vector<learning::LocalUpdate> updates;
  for (std::uint64_t round = 0; round < run.global_rounds; ++round) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto& indices = prep.client_indices[k];
      const std::size_t probe = std::min(client_batch(prep.profiles[k]), indices.size());
      RngStream stream = derive_stream(run.master_seed, {kTagProbeLoss, round, k});
      const auto picks = stream.sample_without_replacement(indices.size(), probe);
      double loss = 0.0;
      for (std::size_t pick : picks) {
        const std::size_t example = indices[pick];
        loss += learning::per_example_loss(model, prep.train.example(example),
                                           prep.train.labels[example]);
      }
      losses[k] = loss / static_cast<double>(probe);
    }
    const auto top = selection::biased_loss_selection(losses, run.per_round);

    auto& chosen = schedule.rounds[round];
    chosen.reserve(top.size());
    for (std::size_t k : top) {
      chosen.push_back(static_cast<int>(k));
      ++schedule.selection_counts[k];
    }

    for (std::uint64_t step = 0; step < run.local_rounds; ++step)
      stepsizes[step] = run.stepsize.at(round * run.local_rounds + step, total_steps, run.clip);
    updates.clear();
    for (std::size_t k : top) {
      RngStream stream = derive_stream(run.master_seed, {kTagProbeUpdate, round, k});
      updates.push_back(learning::client_update(
          model, prep.train, prep.client_indices[k], 0.0, run.local_rounds,
          client_batch(prep.profiles[k]), stepsizes, run.clip, stream, static_cast<int>(k)));
    }
    const std::vector<double> mean_delta = learning::aggregate(updates);
    const double alpha = run.apply_server_stepsize
                             ? run.stepsize.at(round * run.local_rounds, total_steps, run.clip)
                             : 1.0;
    for (std::size_t j = 0; j < mean_delta.size(); ++j)
      model.parameters[j] -= alpha * mean_delta[j];
  }
  return schedule;
}

}  // namespace

PreparedExperiment prepare_experiment(const FederationConfig& config, std::uint64_t seed) {
  config.validate();
  PreparedExperiment prep;

  if (config.data.source == DataConfig::Source::kBlobs) {
    prep.train = data::synth_blobs(config.data.classes, config.data.dim, config.data.count,
                                   config.data.spread, derive_seed(seed, "data.train"));
    prep.holdout = data::synth_blobs(config.data.classes, config.data.dim,
                                     config.data.holdout_count, config.data.spread,
                                     derive_seed(seed, "data.holdout"));
  } else {
    prep.train = data::load_idx(config.data.train_images, config.data.train_labels);
    prep.holdout = data::load_idx(config.data.test_images, config.data.test_labels);
  }

  learning::ModelSpec spec = config.model;
  spec.feature_dim = prep.train.feature_dim;
  spec.num_classes = prep.train.num_classes;
  spec.validate();

  std::vector<std::uint64_t> sizes;
  if (!config.manifest_path.empty()) {
    prep.profiles = read_manifest(config.manifest_path);
    sizes.reserve(prep.profiles.size());
    std::uint64_t total = 0;
    for (const auto& profile : prep.profiles) {
      sizes.push_back(profile.dataset_size);
      total += profile.dataset_size;
    }
    if (total > prep.train.size())
      throw std::domain_error("federation.manifest: client sizes exceed available training data");
  } else {
    sizes = data::sample_sizes(prep.train.size(), config.num_clients, derive_seed(seed, "sizes"));
    const auto budgets = data::sample_budgets(config.num_clients, config.budgets,
                                              derive_seed(seed, "budgets"));
    prep.profiles.reserve(config.num_clients);
    for (std::size_t k = 0; k < config.num_clients; ++k) {
      if (config.batch_size > sizes[k])
        throw std::domain_error(
            "federation.batch_size: exceeds dataset size of client " + std::to_string(k) + " (" +
            std::to_string(sizes[k]) + ")");
      const double ratio = static_cast<double>(config.batch_size) / static_cast<double>(sizes[k]);
      prep.profiles.push_back(
          privacy::make_client_profile(static_cast<int>(k), sizes[k], budgets[k], ratio));
    }
  }

  prep.client_indices =
      data::partition_noniid(prep.train.labels, sizes, config.data.similarity,
                             derive_seed(seed, "partition"))
          .client_indices;

  prep.unbiased = selection::unbiased_probabilities(sizes);
  std::vector<double> coefficients;
  coefficients.reserve(prep.profiles.size());
  for (const auto& profile : prep.profiles) coefficients.push_back(profile.noise_coefficient);

  if (config.policy == Policy::kPrivacyAware) {
    selection::SelectionProblem problem(prep.unbiased, coefficients, spec.parameter_count(),
                                        config.eta);
    selection::SolveResult result = selection::solve(problem);
    if (!result.converged)
      throw SolverFailure("privacy-aware solver did not converge (best objective " +
                              text::format_double(result.objective) + ", residual " +
                              text::format_double(result.stationarity_residual) + ")",
                          std::move(result));
    prep.probabilities = result.probabilities;
    prep.selection_objective = result.objective;
    prep.solver_converged = result.converged;
    prep.certificate = selection::kkt_check(problem, prep.probabilities);
  } else {
    prep.probabilities = prep.unbiased;
  }

  prep.run.model = spec;
  prep.run.global_rounds = config.global_rounds;
  prep.run.local_rounds = config.local_rounds;
  prep.run.per_round = config.per_round;
  prep.run.clip = config.clip;
  prep.run.stepsize = config.stepsize;
  prep.run.apply_server_stepsize = config.apply_server_stepsize;
  prep.run.master_seed = seed;
  prep.run.init_stddev = resolve_init_stddev(config);
  return prep;
}

ExperimentResult run_experiment(const FederationConfig& config, std::uint64_t seed) {
  PreparedExperiment prep = prepare_experiment(config, seed);

  // Clipping-gap checkpoints feed the bound report; the max over checkpoints
  // is a lower estimate of max_t ||Delta_t||_1.
  bounds::ClippingGap max_gap;
  learning::RoundObserver observer;
  if (config.bound_constants) {
    const std::uint64_t stride = std::max<std::uint64_t>(1, config.global_rounds / 10);
    observer = [&, stride](std::uint64_t round, const learning::Model& model) {
      if (round % stride != 0 && round + 1 != config.global_rounds) return;
      const bounds::ClippingGap gap = bounds::empirical_clipping_gap(
          model, prep.train, prep.client_indices, config.clip, prep.probabilities);
      max_gap.unbiased_gap = std::max(max_gap.unbiased_gap, gap.unbiased_gap);
      max_gap.biased_gap = std::max(max_gap.biased_gap, gap.biased_gap);
    };
  }

  learning::FederationResult fed;
  if (config.policy == Policy::kBiasedLoss) {
    fed = learning::run_federation_with_schedule(prep.run, prep.profiles, prep.client_indices,
                                                 prep.train, prep.holdout,
                                                 build_biased_loss_schedule(prep), observer);
  } else {
    fed = learning::run_federation(prep.run, prep.profiles, prep.client_indices, prep.train,
                                   prep.holdout, prep.probabilities, observer);
  }

  ExperimentResult result;
  result.config_digest = config_hash(config);
  result.policy = config.policy;
  result.seed = seed;
  result.records = std::move(fed.records);
  result.unbiased_probabilities = prep.unbiased.values();
  result.probabilities = prep.probabilities.values();
  result.selection_objective = prep.selection_objective;
  result.certificate = prep.certificate;
  result.selection_counts = std::move(fed.schedule.selection_counts);
  result.sigma_squared = std::move(fed.sigma_squared);
  const auto& last = result.records.back();
  result.final_train_loss = last.global_train_loss;
  result.final_eval_loss = last.eval_loss;
  result.final_eval_accuracy = last.eval_accuracy;

  if (config.bound_constants) {
    BoundReport report;
    bounds::BoundInputs inputs = *config.bound_constants;
    inputs.clip_C = config.clip;
    inputs.model_dimension_D = prep.run.model.parameter_count();
    inputs.total_iterations_T = config.global_rounds * config.local_rounds;
    inputs.clipping_gap_estimate = max_gap.unbiased_gap;
    report.clipping_gap_unbiased = max_gap.unbiased_gap;
    report.clipping_gap_biased = max_gap.biased_gap;

    std::vector<double> coefficients;
    for (const auto& profile : prep.profiles) coefficients.push_back(profile.noise_coefficient);
    bounds::ErrorTerms terms;
    terms.g_select_clip =
        bounds::g_select_clip(prep.probabilities, prep.unbiased, max_gap.unbiased_gap,
                              inputs.dissimilarity_B2, inputs.clip_C);
    terms.g_dp = bounds::g_dp(prep.probabilities, coefficients, inputs.model_dimension_D);
    terms.g_b_clip = bounds::g_b_clip(max_gap.biased_gap, inputs.dissimilarity_B2, inputs.clip_C);
    report.g_select_clip = terms.g_select_clip;
    report.g_dp = terms.g_dp;
    report.g_b_clip = terms.g_b_clip;
    report.theorem2 = bounds::theorem2_bound(inputs, terms);
    try {
      report.theorem1 = bounds::theorem1_bound(inputs, terms);
      report.theorem1_valid = true;
    } catch (const std::domain_error&) {
      report.theorem1_valid = false;
    }
    result.bound_report = report;
  }
  return result;
}

std::string render_rounds_csv(const std::vector<learning::RoundRecord>& records) {
  std::string out = "round,train_loss,eval_loss,eval_accuracy,mean_noise_norm,selected_ids\n";
  for (const auto& record : records) {
    out += std::to_string(record.round);
    out += ',';
    out += text::format_double(record.global_train_loss);
    out += ',';
    out += text::format_double(record.eval_loss);
    out += ',';
    out += text::format_double(record.eval_accuracy);
    out += ',';
    out += text::format_double(record.mean_noise_norm);
    out += ',';
    for (std::size_t i = 0; i < record.selected.size(); ++i) {
      if (i > 0) out += ';';
      out += std::to_string(record.selected[i]);
    }
    out += '\n';
  }
  return out;
}

namespace {
ordered_json certificate_json(const selection::KktCertificate& certificate) {
  return ordered_json{{"stationarity_residual", certificate.stationarity_residual},
                      {"complementarity_residual", certificate.complementarity_residual},
                      {"primal_feasibility_residual", certificate.primal_feasibility_residual},
                      {"lambda", certificate.multiplier_lambda}};
}
}  // namespace

std::string render_summary_json(const FederationConfig& config,
                                const std::vector<ExperimentResult>& results) {
  ordered_json summary;
  summary["config_hash"] = config_hash(config);
  summary["policy"] = policy_to_string(config.policy);

  ordered_json seeds = ordered_json::array();
  double mean_acc = 0.0, mean_loss = 0.0;
  for (const auto& result : results) {
    ordered_json entry;
    entry["seed"] = result.seed;
    entry["final"] = ordered_json{{"train_loss", result.final_train_loss},
                                  {"eval_loss", result.final_eval_loss},
                                  {"eval_accuracy", result.final_eval_accuracy}};
    entry["selection"] = ordered_json{{"p_u", result.unbiased_probabilities},
                                      {"p_s", result.probabilities},
                                      {"objective", result.selection_objective},
                                      {"kkt", certificate_json(result.certificate)}};
    ordered_json clients = ordered_json::array();
    for (std::size_t k = 0; k < result.selection_counts.size(); ++k) {
      clients.push_back(ordered_json{{"id", k},
                                     {"selection_count", result.selection_counts[k]},
                                     {"sigma_squared", result.sigma_squared[k]}});
    }
    entry["clients"] = clients;
    if (result.bound_report) {
      const BoundReport& report = *result.bound_report;
      entry["bounds"] = ordered_json{{"g_select_clip", report.g_select_clip},
                                     {"g_dp", report.g_dp},
                                     {"g_b_clip", report.g_b_clip},
                                     {"clipping_gap_unbiased", report.clipping_gap_unbiased},
                                     {"clipping_gap_biased", report.clipping_gap_biased},
                                     {"theorem1_valid", report.theorem1_valid},
                                     {"theorem1", report.theorem1},
                                     {"theorem2", report.theorem2}};
    }
    seeds.push_back(entry);
    mean_acc += result.final_eval_accuracy;
    mean_loss += result.final_eval_loss;
  }
  summary["seeds"] = seeds;

  const double n = static_cast<double>(results.size());
  mean_acc /= n;
  mean_loss /= n;
  double var_acc = 0.0;
  for (const auto& result : results) {
    const double d = result.final_eval_accuracy - mean_acc;
    var_acc += d * d;
  }
  summary["aggregate"] = ordered_json{{"seeds", results.size()},
                                      {"mean_eval_accuracy", mean_acc},
                                      {"stddev_eval_accuracy", std::sqrt(var_acc / n)},
                                      {"mean_eval_loss", mean_loss}};
  return summary.dump(2) + "\n";
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path temp = target.string() + ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + temp.string() + "'");
    out << content;
  }
  fs::rename(temp, target);
}

int cli_solve(const std::string& manifest_path, double eta, std::uint64_t dimension,
              const std::string& output_path) {
  std::vector<privacy::ClientProfile> profiles;
  try {
    profiles = read_manifest(manifest_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    std::vector<std::uint64_t> sizes;
    std::vector<double> coefficients;
    for (const auto& profile : profiles) {
      sizes.push_back(profile.dataset_size);
      coefficients.push_back(profile.noise_coefficient);
    }
    const selection::SelectionProbabilities p_u = selection::unbiased_probabilities(sizes);
    const selection::SelectionProblem problem(p_u, coefficients, dimension, eta);
    const selection::SolveResult result = selection::solve(problem);
    const selection::KktCertificate certificate =
        selection::kkt_check(problem, result.probabilities);

    ordered_json report;
    report["eta"] = eta;
    report["dimension"] = dimension;
    report["converged"] = result.converged;
    report["iterations"] = result.iterations;
    report["objective"] = result.objective;
    report["p_u"] = p_u.values();
    report["p_s"] = result.probabilities.values();
    report["kkt"] = certificate_json(certificate);
    ordered_json clients = ordered_json::array();
    for (const auto& profile : profiles) {
      clients.push_back(ordered_json{{"id", profile.id},
                                     {"dataset_size", profile.dataset_size},
                                     {"epsilon", profile.budget.epsilon},
                                     {"delta", profile.budget.delta},
                                     {"subsampling_ratio", profile.subsampling_ratio},
                                     {"noise_coefficient", profile.noise_coefficient}});
    }
    report["clients"] = clients;
    if (!output_path.empty()) write_file_atomic(output_path, report.dump(2) + "\n");

    std::printf("%6s %12s %10s %14s %12s %12s\n", "id", "size", "epsilon", "V", "p_u", "p_s");
    for (std::size_t k = 0; k < profiles.size(); ++k) {
      std::printf("%6d %12llu %10.4g %14.6g %12.6g %12.6g\n", profiles[k].id,
                  static_cast<unsigned long long>(profiles[k].dataset_size),
                  profiles[k].budget.epsilon, profiles[k].noise_coefficient, p_u[k],
                  result.probabilities[k]);
    }
    std::printf("objective %.12g  stationarity residual %.3g  %s\n", result.objective,
                certificate.stationarity_residual, result.converged ? "converged" : "NOT CONVERGED");
    if (!result.converged) {
      std::cerr << "error: solver did not converge; best iterate written\n";
      return 2;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cli_simulate(const std::string& config_path) {
  FederationConfig config;
  try {
    config = load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  std::vector<ExperimentResult> results;
  try {
    for (std::uint64_t seed : config.seeds) {
      ExperimentResult result = run_experiment(config, seed);
      write_file_atomic(config.output_dir + "/rounds_seed" + std::to_string(seed) + ".csv",
                        render_rounds_csv(result.records));
      results.push_back(std::move(result));
    }
  } catch (const SolverFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  write_file_atomic(config.output_dir + "/summary.json", render_summary_json(config, results));
  for (const auto& result : results)
    std::printf("seed %llu: final eval_loss %.6g, accuracy %.4f\n",
                static_cast<unsigned long long>(result.seed), result.final_eval_loss,
                result.final_eval_accuracy);
  return 0;
}

int cli_bounds(const std::string& constants_path, const std::string& terms_summary_path,
               const std::vector<std::uint64_t>& T_grid, const std::string& output_path) {
  try {
    if (T_grid.empty()) {
      std::cerr << "error: bounds: empty T grid\n";
      return 1;
    }
    for (std::size_t i = 0; i + 1 < T_grid.size(); ++i)
      if (T_grid[i] >= T_grid[i + 1]) {
        std::cerr << "error: bounds: T grid must be strictly ascending\n";
        return 1;
      }

    const IniFile file = IniFile::load(constants_path);
    auto require = [&](const std::string& key) {
      const auto value = file.get("constants", key);
      if (!value) throw std::domain_error("constants." + key + ": required field missing");
      double out = 0.0;
      if (!text::parse_double(*value, out))
        throw std::domain_error("constants." + key + ": expected a number");
      return out;
    };
    auto optional = [&](const std::string& key, double fallback) {
      const auto value = file.get("constants", key);
      if (!value) return fallback;
      double out = 0.0;
      if (!text::parse_double(*value, out))
        throw std::domain_error("constants." + key + ": expected a number");
      return out;
    };

    bounds::BoundInputs inputs;
    inputs.smoothness_L = require("L");
    inputs.strong_convexity_mu = optional("mu", 1.0);
    inputs.gradient_bound_B1 = require("b1");
    inputs.dissimilarity_B2 = optional("b2", 0.0);
    inputs.clip_C = require("clip");
    inputs.model_dimension_D = static_cast<std::uint64_t>(optional("dimension", 1.0));
    inputs.stepsize_beta = optional("beta", 1.0);
    inputs.stepsize_gamma = optional("gamma", 1.0);
    inputs.gamma_tradeoff_Gamma = optional("big_gamma", 1.0);
    inputs.initial_gap = optional("initial_gap", 0.0);
    inputs.initial_distance = optional("initial_distance", 0.0);
    inputs.clipping_gap_estimate = optional("clipping_gap", 0.0);

    bounds::ErrorTerms terms;
    if (!terms_summary_path.empty()) {
      std::ifstream in(terms_summary_path, std::ios::binary);
      if (!in) throw data::ParseError("bounds: cannot open summary '" + terms_summary_path + "'");
      const auto summary = ordered_json::parse(in);
      const auto& report = summary.at("seeds").at(0).at("bounds");
      terms.g_select_clip = report.at("g_select_clip").get<double>();
      terms.g_dp = report.at("g_dp").get<double>();
      terms.g_b_clip = report.at("g_b_clip").get<double>();
    } else {
      auto term = [&](const std::string& key) {
        const auto value = file.get("terms", key);
        if (!value) throw std::domain_error("terms." + key + ": required field missing");
        double out = 0.0;
        if (!text::parse_double(*value, out))
          throw std::domain_error("terms." + key + ": expected a number");
        return out;
      };
      terms.g_select_clip = term("g_select_clip");
      terms.g_dp = term("g_dp");
      terms.g_b_clip = term("g_b_clip");
    }

    inputs.total_iterations_T = T_grid.front();
    inputs.validate();
    inputs.require_theorem1_stepsize();

    std::string csv = "T,theorem1_bound,theorem2_bound,f_T,f_prime_sign\n";
    for (std::uint64_t T : T_grid) {
      inputs.total_iterations_T = T;
      const double th1 = bounds::theorem1_bound(inputs, terms);
      const double th2 = bounds::theorem2_bound(inputs, terms);
      const double f = bounds::corollary2_value(inputs, terms, static_cast<double>(T));
      const double fp = bounds::corollary2_derivative(inputs, terms, static_cast<double>(T));
      csv += std::to_string(T) + ',' + text::format_double(th1) + ',' + text::format_double(th2) +
             ',' + text::format_double(f) + ',' + (fp > 0 ? "1" : (fp < 0 ? "-1" : "0")) + '\n';
    }
    write_file_atomic(output_path, csv);
    std::printf("wrote %zu grid points to %s\n", T_grid.size(), output_path.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cli_sweep(const std::string& config_path, const std::string& parameter,
              const std::vector<std::string>& values) {
  if (values.empty()) {
    std::cerr << "error: sweep: empty values list\n";
    return 1;
  }
  FederationConfig base;
  try {
    base = load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  const std::vector<Policy> policies = {Policy::kPrivacyAware, Policy::kUnbiased,
                                        Policy::kBiasedLoss};
  std::string runs_csv = "parameter,value,policy,seed,final_accuracy,final_eval_loss,status\n";
  std::string plot_csv = "x,policy,mean_accuracy,stddev_accuracy\n";
  std::size_t failures = 0;

  for (const std::string& value : values) {
    FederationConfig config = base;
    try {
      if (parameter == "eta") {
        if (!text::parse_double(value, config.eta)) throw std::domain_error("bad eta value");
      } else if (parameter == "batch_size") {
        std::uint64_t batch = 0;
        if (!text::parse_u64(value, batch) || batch == 0)
          throw std::domain_error("bad batch_size value");
        config.batch_size = batch;
      } else if (parameter == "similarity") {
        if (!text::parse_double(value, config.data.similarity))
          throw std::domain_error("bad similarity value");
      } else if (parameter == "budget_spec") {
        config.budgets = parse_budget_value(value);
      } else {
        std::cerr << "error: sweep: unknown parameter '" << parameter << "'\n";
        return 1;
      }
      config.validate();
    } catch (const std::exception& e) {
      std::cerr << "error: sweep value '" << value << "': " << e.what() << "\n";
      return 1;
    }

    for (Policy policy : policies) {
      config.policy = policy;
      double sum = 0.0, sum_sq = 0.0;
      std::size_t ok = 0;
      for (std::uint64_t seed : config.seeds) {
        try {
          const ExperimentResult result = run_experiment(config, seed);
          runs_csv += parameter + ',' + value + ',' + policy_to_string(policy) + ',' +
                      std::to_string(seed) + ',' + text::format_double(result.final_eval_accuracy) +
                      ',' + text::format_double(result.final_eval_loss) + ",ok\n";
          sum += result.final_eval_accuracy;
          sum_sq += result.final_eval_accuracy * result.final_eval_accuracy;
          ++ok;
        } catch (const std::exception& e) {
          runs_csv += parameter + ',' + value + ',' + policy_to_string(policy) + ',' +
                      std::to_string(seed) + ",,,failed\n";
          std::cerr << "run failed (" << policy_to_string(policy) << ", value " << value
                    << ", seed " << seed << "): " << e.what() << "\n";
          ++failures;
        }
      }
      if (ok > 0) {
        const double mean = sum / static_cast<double>(ok);
        const double variance = std::max(0.0, sum_sq / static_cast<double>(ok) - mean * mean);
        plot_csv += value + ',' + policy_to_string(policy) + ',' + text::format_double(mean) + ',' +
                    text::format_double(std::sqrt(variance)) + '\n';
      }
    }
  }

  write_file_atomic(base.output_dir + "/sweep_" + parameter + ".csv", runs_csv);
  write_file_atomic(base.output_dir + "/sweep_" + parameter + "_plot.csv", plot_csv);
  std::printf("sweep complete: %zu failed runs\n", failures);
  return failures == 0 ? 0 : 1;
}

int cli_manifest_validate(const std::string& manifest_path) {
  try {
    const auto profiles = read_manifest(manifest_path);
    std::printf("ok: %zu clients\n", profiles.size());
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace dpfed::harness
