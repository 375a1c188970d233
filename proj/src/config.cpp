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

#include "dpfed/config.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "dpfed/text.hpp"

namespace dpfed::harness {

IniFile IniFile::parse(const std::string& content) {
  IniFile file;
  std::string section;
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start <= content.size()) {
    const std::size_t end = content.find('\n', start);
    std::string_view line(content.data() + start,
                          (end == std::string::npos ? content.size() : end) - start);
    start = (end == std::string::npos) ? content.size() + 1 : end + 1;
    ++line_number;
    const std::size_t comment = line.find('#');
    if (comment != std::string_view::npos) line = line.substr(0, comment);
    line = text::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw data::ParseError("config line " + std::to_string(line_number) +
                               ": unterminated section header");
      section = std::string(text::trim(line.substr(1, line.size() - 2)));
      if (section.empty())
        throw data::ParseError("config line " + std::to_string(line_number) + ": empty section name");
      file.sections[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw data::ParseError("config line " + std::to_string(line_number) + ": expected key = value");
    const std::string key(text::trim(line.substr(0, eq)));
    const std::string value(text::trim(line.substr(eq + 1)));
    if (key.empty())
      throw data::ParseError("config line " + std::to_string(line_number) + ": empty key");
    if (section.empty())
      throw data::ParseError("config line " + std::to_string(line_number) +
                             ": key outside any [section]");
    file.sections[section][key] = value;
  }
  return file;
}

IniFile IniFile::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data::ParseError("config: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

bool IniFile::has(const std::string& section, const std::string& key) const {
  const auto s = sections.find(section);
  return s != sections.end() && s->second.count(key) > 0;
}

std::optional<std::string> IniFile::get(const std::string& section, const std::string& key) const {
  const auto s = sections.find(section);
  if (s == sections.end()) return std::nullopt;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

Policy policy_from_string(const std::string& name) {
  if (name == "privacy_aware") return Policy::kPrivacyAware;
  if (name == "unbiased") return Policy::kUnbiased;
  if (name == "biased_loss") return Policy::kBiasedLoss;
  throw std::domain_error("federation.policy: unknown policy '" + name + "'");
}

std::string policy_to_string(Policy policy) {
  switch (policy) {
    case Policy::kPrivacyAware: return "privacy_aware";
    case Policy::kUnbiased: return "unbiased";
    case Policy::kBiasedLoss: return "biased_loss";
  }
  return "?";
}

namespace {

// Typed accessor over an IniFile that tracks key usage so unknown keys can be
// reported as config errors instead of being silently ignored.
class Reader {
 public:
  explicit Reader(const IniFile& file) : file_(file) {}

  bool has(const std::string& section, const std::string& key) {
    mark(section, key);
    return file_.has(section, key);
  }

  std::string require_string(const std::string& section, const std::string& key) {
    mark(section, key);
    const auto value = file_.get(section, key);
    if (!value) throw std::domain_error(section + "." + key + ": required field missing");
    return *value;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) {
    mark(section, key);
    return file_.get(section, key).value_or(fallback);
  }

  double require_double(const std::string& section, const std::string& key) {
    return to_double(section, key, require_string(section, key));
  }

  double get_double(const std::string& section, const std::string& key, double fallback) {
    mark(section, key);
    const auto value = file_.get(section, key);
    return value ? to_double(section, key, *value) : fallback;
  }

  std::uint64_t require_u64(const std::string& section, const std::string& key) {
    return to_u64(section, key, require_string(section, key));
  }

  std::uint64_t get_u64(const std::string& section, const std::string& key, std::uint64_t fallback) {
    mark(section, key);
    const auto value = file_.get(section, key);
    return value ? to_u64(section, key, *value) : fallback;
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) {
    mark(section, key);
    const auto value = file_.get(section, key);
    if (!value) return fallback;
    if (*value == "true" || *value == "1" || *value == "on") return true;
    if (*value == "false" || *value == "0" || *value == "off") return false;
    throw std::domain_error(section + "." + key + ": expected a boolean, got '" + *value + "'");
  }

  void reject_unknown_keys() const {
    for (const auto& [section, keys] : file_.sections)
      for (const auto& [key, value] : keys)
        if (!used_.count(section + "." + key))
          throw std::domain_error(section + "." + key + ": unknown configuration key");
  }

 private:
  static double to_double(const std::string& section, const std::string& key,
                          const std::string& value) {
    double out = 0.0;
    if (!text::parse_double(value, out))
      throw std::domain_error(section + "." + key + ": expected a number, got '" + value + "'");
    return out;
  }

  static std::uint64_t to_u64(const std::string& section, const std::string& key,
                              const std::string& value) {
    std::uint64_t out = 0;
    if (!text::parse_u64(value, out))
      throw std::domain_error(section + "." + key + ": expected a non-negative integer, got '" +
                              value + "'");
    return out;
  }

  void mark(const std::string& section, const std::string& key) { used_.insert(section + "." + key); }

  const IniFile& file_;
  std::set<std::string> used_;
};

}  // namespace

data::BudgetSpec parse_budget_value(const std::string& value) {
  if (value == "case1") return data::BudgetSpec::mixture(0.3, 0.5, 0.04, 0.7, 10.0, 1.0);
  if (value == "case2") return data::BudgetSpec::mixture(0.3, 2.0, 0.04, 0.7, 8.0, 1.0);
  const std::size_t colon = value.find(':');
  if (colon == std::string::npos)
    throw std::domain_error("budget spec '" + value +
                            "': expected case1, case2, uniform:lo,hi or mixture:w1,m1,v1,w2,m2,v2");
  const std::string kind = value.substr(0, colon);
  const auto parts = text::split(value.substr(colon + 1), ',');
  std::vector<double> numbers;
  for (auto part : parts) {
    double x = 0.0;
    if (!text::parse_double(part, x))
      throw std::domain_error("budget spec '" + value + "': bad number '" + std::string(part) + "'");
    numbers.push_back(x);
  }
  if (kind == "uniform" && numbers.size() == 2)
    return data::BudgetSpec::uniform(numbers[0], numbers[1]);
  if (kind == "mixture" && numbers.size() == 6)
    return data::BudgetSpec::mixture(numbers[0], numbers[1], numbers[2], numbers[3], numbers[4],
                                     numbers[5]);
  throw std::domain_error("budget spec '" + value + "': wrong argument count for '" + kind + "'");
}

FederationConfig parse_config(const std::string& content) {
  const IniFile file = IniFile::parse(content);
  Reader reader(file);
  FederationConfig config;

  config.policy = policy_from_string(reader.require_string("federation", "policy"));
  config.manifest_path = reader.get_string("federation", "manifest", "");
  config.num_clients = reader.get_u64("federation", "clients", 0);
  config.global_rounds = reader.require_u64("federation", "global_rounds");
  config.local_rounds = reader.require_u64("federation", "local_rounds");
  config.per_round = reader.require_u64("federation", "per_round");
  config.batch_size = reader.require_u64("federation", "batch_size");
  config.clip = reader.require_double("federation", "clip");
  config.eta = reader.get_double("federation", "eta", 0.0);
  config.apply_server_stepsize = reader.get_bool("federation", "apply_server_stepsize", false);
  config.master_seed = reader.require_u64("federation", "seed");
  config.output_dir = reader.get_string("federation", "output_dir", ".");
  if (reader.has("federation", "seeds")) {
    const std::string seeds = reader.require_string("federation", "seeds");
    for (auto part : text::split(seeds, ',')) {
      std::uint64_t s = 0;
      if (!text::parse_u64(part, s))
        throw std::domain_error("federation.seeds: bad seed '" + std::string(part) + "'");
      config.seeds.push_back(s);
    }
  }
  if (config.seeds.empty()) config.seeds.push_back(config.master_seed);

  config.model.architecture =
      learning::architecture_from_string(reader.require_string("model", "architecture"));
  config.model.hidden_dim = reader.get_u64("model", "hidden_dim", 0);
  config.init_stddev = reader.get_double("model", "init_stddev", -1.0);

  const std::string schedule = reader.get_string("stepsize", "schedule", "constant");
  if (schedule == "constant") {
    config.stepsize.kind = learning::StepsizeSpec::Kind::kConstant;
    config.stepsize.constant = reader.get_double("stepsize", "value", 0.1);
  } else if (schedule == "inverse_time") {
    config.stepsize.kind = learning::StepsizeSpec::Kind::kInverseTime;
    config.stepsize.beta = reader.require_double("stepsize", "beta");
    config.stepsize.gamma = reader.get_double("stepsize", "gamma", 1.0);
  } else if (schedule == "inverse_sqrt_total") {
    config.stepsize.kind = learning::StepsizeSpec::Kind::kInverseSqrtTotal;
    config.stepsize.b1 = reader.require_double("stepsize", "b1");
  } else {
    throw std::domain_error("stepsize.schedule: unknown schedule '" + schedule + "'");
  }

  const std::string source = reader.get_string("data", "source", "blobs");
  if (source == "blobs") {
    config.data.source = DataConfig::Source::kBlobs;
    config.data.classes = reader.require_u64("data", "classes");
    config.data.dim = reader.require_u64("data", "dim");
    config.data.count = reader.require_u64("data", "count");
    config.data.spread = reader.get_double("data", "spread", 0.5);
    config.data.holdout_count = reader.get_u64("data", "holdout_count", config.data.count / 5);
  } else if (source == "idx") {
    config.data.source = DataConfig::Source::kIdx;
    config.data.train_images = reader.require_string("data", "train_images");
    config.data.train_labels = reader.require_string("data", "train_labels");
    config.data.test_images = reader.require_string("data", "test_images");
    config.data.test_labels = reader.require_string("data", "test_labels");
  } else {
    throw std::domain_error("data.source: unknown source '" + source + "'");
  }
  config.data.similarity = reader.get_double("data", "similarity", 100.0);

  if (config.manifest_path.empty()) {
    const std::string kind = reader.get_string("budgets", "kind", "uniform");
    const double delta = reader.get_double("budgets", "delta", 1e-5);
    if (kind == "uniform") {
      config.budgets = data::BudgetSpec::uniform(reader.get_double("budgets", "lo", 0.0),
                                                 reader.get_double("budgets", "hi", 1.0), delta);
    } else if (kind == "mixture") {
      config.budgets = data::BudgetSpec::mixture(
          reader.require_double("budgets", "w1"), reader.require_double("budgets", "m1"),
          reader.require_double("budgets", "v1"), reader.require_double("budgets", "w2"),
          reader.require_double("budgets", "m2"), reader.require_double("budgets", "v2"), delta);
    } else {
      throw std::domain_error("budgets.kind: unknown kind '" + kind + "'");
    }
  }

  if (file.sections.count("bounds")) {
    bounds::BoundInputs inputs;
    inputs.smoothness_L = reader.require_double("bounds", "L");
    inputs.strong_convexity_mu = reader.get_double("bounds", "mu", 1.0);
    inputs.gradient_bound_B1 = reader.require_double("bounds", "b1");
    inputs.dissimilarity_B2 = reader.get_double("bounds", "b2", 0.0);
    inputs.stepsize_beta = reader.get_double("bounds", "beta", 1.0);
    inputs.stepsize_gamma = reader.get_double("bounds", "gamma", 1.0);
    inputs.gamma_tradeoff_Gamma = reader.get_double("bounds", "big_gamma", 1.0);
    inputs.initial_gap = reader.get_double("bounds", "initial_gap", 0.0);
    inputs.initial_distance = reader.get_double("bounds", "initial_distance", 0.0);
    config.bound_constants = inputs;
  }

  reader.reject_unknown_keys();
  config.validate();
  return config;
}

FederationConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data::ParseError("config: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  FederationConfig config = parse_config(buffer.str());

  if (const char* seed = std::getenv("DPFEDSIM_SEED")) {
    std::uint64_t value = 0;
    if (!text::parse_u64(seed, value))
      throw std::domain_error("DPFEDSIM_SEED: expected a non-negative integer");
    config.master_seed = value;
    config.seeds = {value};
  }
  if (const char* dir = std::getenv("DPFEDSIM_OUTPUT_DIR")) config.output_dir = dir;
  return config;
}

void FederationConfig::validate() const {
  if (manifest_path.empty() && num_clients == 0)
    throw std::domain_error("federation.clients: need a client count or a manifest");
  if (global_rounds == 0) throw std::domain_error("federation.global_rounds: must be >= 1");
  if (local_rounds == 0) throw std::domain_error("federation.local_rounds: must be >= 1");
  if (per_round == 0) throw std::domain_error("federation.per_round: must be >= 1");
  if (batch_size == 0) throw std::domain_error("federation.batch_size: must be >= 1");
  if (!(clip > 0.0)) throw std::domain_error("federation.clip: must be > 0");
  if (!(eta >= 0.0)) throw std::domain_error("federation.eta: must be >= 0");
  stepsize.validate();
  if (!(data.similarity >= 0.0 && data.similarity <= 100.0))
    throw std::domain_error("data.similarity: must be in [0, 100]");
  if (data.source == DataConfig::Source::kBlobs) {
    if (data.classes < 1) throw std::domain_error("data.classes: must be >= 1");
    if (data.dim < 1) throw std::domain_error("data.dim: must be >= 1");
    if (data.count < 1) throw std::domain_error("data.count: must be >= 1");
    if (!(data.spread > 0.0)) throw std::domain_error("data.spread: must be > 0");
    if (data.holdout_count < 1) throw std::domain_error("data.holdout_count: must be >= 1");
  }
  if (model.architecture != learning::Architecture::kQuadratic && data.source == DataConfig::Source::kBlobs &&
      data.classes < 2)
    throw std::domain_error("data.classes: classifiers need >= 2 classes");
  if (model.architecture == learning::Architecture::kMlpOneHidden && model.hidden_dim == 0)
    throw std::domain_error("model.hidden_dim: mlp_1hidden needs hidden_dim >= 1");
  if (manifest_path.empty()) budgets.validate();
}

namespace {
std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

void field(std::string& out, const std::string& key, const std::string& value) {
  out += key;
  out += '=';
  out += value;
  out += '\n';
}
}  // namespace

std::string config_hash(const FederationConfig& config) {
  // Canonical render of the semantically meaningful fields; formatting of the
  // source file (comments, ordering, number spelling) does not matter, and
  // the output directory does not participate.
  std::string canon;
  field(canon, "policy", policy_to_string(config.policy));
  field(canon, "manifest", config.manifest_path);
  field(canon, "clients", std::to_string(config.num_clients));
  field(canon, "global_rounds", std::to_string(config.global_rounds));
  field(canon, "local_rounds", std::to_string(config.local_rounds));
  field(canon, "per_round", std::to_string(config.per_round));
  field(canon, "batch_size", std::to_string(config.batch_size));
  field(canon, "clip", text::format_double(config.clip));
  field(canon, "eta", text::format_double(config.eta));
  field(canon, "server_stepsize", config.apply_server_stepsize ? "on" : "off");
  field(canon, "seed", std::to_string(config.master_seed));
  std::string seeds;
  for (std::uint64_t s : config.seeds) {
    seeds += std::to_string(s);
    seeds += ';';
  }
  field(canon, "seeds", seeds);
  field(canon, "architecture", learning::architecture_to_string(config.model.architecture));
  field(canon, "hidden_dim", std::to_string(config.model.hidden_dim));
  field(canon, "init_stddev", text::format_double(config.init_stddev));
  field(canon, "stepsize_kind", std::to_string(static_cast<int>(config.stepsize.kind)));
  field(canon, "stepsize_constant", text::format_double(config.stepsize.constant));
  field(canon, "stepsize_beta", text::format_double(config.stepsize.beta));
  field(canon, "stepsize_gamma", text::format_double(config.stepsize.gamma));
  field(canon, "stepsize_b1", text::format_double(config.stepsize.b1));
  field(canon, "data_source", std::to_string(static_cast<int>(config.data.source)));
  field(canon, "data_classes", std::to_string(config.data.classes));
  field(canon, "data_dim", std::to_string(config.data.dim));
  field(canon, "data_count", std::to_string(config.data.count));
  field(canon, "data_spread", text::format_double(config.data.spread));
  field(canon, "data_holdout", std::to_string(config.data.holdout_count));
  field(canon, "data_idx", config.data.train_images + ";" + config.data.train_labels + ";" +
                               config.data.test_images + ";" + config.data.test_labels);
  field(canon, "similarity", text::format_double(config.data.similarity));
  field(canon, "budget_kind", std::to_string(static_cast<int>(config.budgets.kind)));
  field(canon, "budget_uniform",
        text::format_double(config.budgets.uniform_lo) + ";" + text::format_double(config.budgets.uniform_hi));
  field(canon, "budget_mixture",
        text::format_double(config.budgets.weight1) + ";" + text::format_double(config.budgets.mean1) + ";" +
            text::format_double(config.budgets.variance1) + ";" + text::format_double(config.budgets.weight2) +
            ";" + text::format_double(config.budgets.mean2) + ";" + text::format_double(config.budgets.variance2));
  field(canon, "budget_delta", text::format_double(config.budgets.delta));

  char digest[17];
  std::snprintf(digest, sizeof digest, "%016llx",
                static_cast<unsigned long long>(fnv1a(canon)));
  return std::string(digest, 16);
}

}  // namespace dpfed::harness
