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

#ifndef DPFED_CONFIG_HPP
#define DPFED_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dpfed/bounds.hpp"
#include "dpfed/data.hpp"
#include "dpfed/federation.hpp"

namespace dpfed::harness {

// Line-based key/value file with [section] headers and '#' comments.
struct IniFile {
  std::map<std::string, std::map<std::string, std::string>> sections;

  // Throws data::ParseError with a line number on malformed input.
  static IniFile parse(const std::string& content);
  static IniFile load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::optional<std::string> get(const std::string& section, const std::string& key) const;
};

enum class Policy { kPrivacyAware, kUnbiased, kBiasedLoss };

Policy policy_from_string(const std::string& name);
std::string policy_to_string(Policy policy);

struct DataConfig {
  enum class Source { kBlobs, kIdx };
  Source source = Source::kBlobs;
  // blobs
  std::size_t classes = 2;
  std::size_t dim = 2;
  std::size_t count = 0;
  double spread = 0.5;
  std::size_t holdout_count = 0;
  // idx
  std::string train_images, train_labels, test_images, test_labels;

  double similarity = 100.0;  // s in [0, 100]
};

// Full experiment description parsed from a config file. One canonical
// artifact per experiment; the environment may override only the seed
// (DPFEDSIM_SEED) and output directory (DPFEDSIM_OUTPUT_DIR).
struct FederationConfig {
  Policy policy = Policy::kUnbiased;
  std::string manifest_path;  // empty: clients are generated
  std::size_t num_clients = 0;

  learning::ModelSpec model;  // feature_dim/num_classes filled from data at load time
  double init_stddev = -1.0;  // < 0: pick a default per architecture
  std::uint64_t global_rounds = 1;
  std::uint64_t local_rounds = 1;
  std::uint64_t per_round = 1;
  std::size_t batch_size = 1;
  double clip = 1.0;
  double eta = 0.0;
  learning::StepsizeSpec stepsize;
  bool apply_server_stepsize = false;

  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> seeds;  // defaults to {master_seed}

  DataConfig data;
  data::BudgetSpec budgets;
  std::string output_dir = ".";

  // Optional [bounds] section: assumption constants for bound reporting.
  std::optional<bounds::BoundInputs> bound_constants;

  void validate() const;  // throws std::domain_error naming the field
};

// Parses, applies environment overrides, and validates.
FederationConfig load_config(const std::string& path);
FederationConfig parse_config(const std::string& content);

// Stable 64-bit digest of the canonicalized config (semantically meaningful
// fields only; the output directory does not participate).
std::string config_hash(const FederationConfig& config);

// Budget spec in sweep-value syntax: "case1", "case2", "uniform:lo,hi", or
// "mixture:w1,m1,v1,w2,m2,v2".
data::BudgetSpec parse_budget_value(const std::string& value);

}  // namespace dpfed::harness

#endif  // DPFED_CONFIG_HPP
