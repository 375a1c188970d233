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

#ifndef DPFED_DATA_HPP
#define DPFED_DATA_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpfed/privacy_accounting.hpp"

namespace dpfed::data {

// Malformed external input (manifest, config, IDX file). Carries a location.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Row-major labeled dataset. The quadratic model ignores labels.
struct Dataset {
  std::size_t feature_dim = 0;
  std::size_t num_classes = 0;
  std::vector<double> features;  // size() * feature_dim
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> example(std::size_t i) const {
    return {features.data() + i * feature_dim, feature_dim};
  }
};

// Heterogeneous client sizes: |M_k| = total * v_k / sum(v), v_k ~ U(0.5, 1.5),
// largest-remainder rounding; sizes sum to `total` exactly, each >= 1.
std::vector<std::uint64_t> sample_sizes(std::uint64_t total, std::size_t num_clients,
                                        std::uint64_t seed);

// Disjoint per-client index lists into a global dataset.
struct Partition {
  std::vector<std::vector<std::size_t>> client_indices;
  double similarity = 100.0;          // s in [0, 100]
  std::vector<double> size_weights;   // v_k when sizes were generated (optional)
};

// Splits `labels.size()` examples across clients: for each client in index
// order, round(s% * size) indices drawn uniformly from the unassigned pool,
// the remainder taken contiguously from the label-sorted pool (within-class
// original order preserved).
Partition partition_noniid(const std::vector<int>& labels,
                           const std::vector<std::uint64_t>& sizes, double similarity_s,
                           std::uint64_t seed);

// Gaussian class clusters with unit-separated means; x = mean(class) + spread * N(0, I).
Dataset synth_blobs(std::size_t num_classes, std::size_t dim, std::size_t count, double spread,
                    std::uint64_t seed);

// IDX-format ingestion (big-endian; magic 0x00000803 images / 0x00000801
// labels). Pixels scaled to [0, 1]. Throws ParseError on malformed input.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Privacy budget distribution over clients. Gaussian components are given as
// (weight, mean, variance); epsilon draws <= 0 are rejected and resampled.
struct BudgetSpec {
  enum class Kind { kUniform, kMixture };
  Kind kind = Kind::kUniform;
  double uniform_lo = 0.0;
  double uniform_hi = 1.0;
  double weight1 = 0.0, mean1 = 0.0, variance1 = 0.0;
  double weight2 = 0.0, mean2 = 0.0, variance2 = 0.0;
  double delta = 1e-5;

  static BudgetSpec uniform(double lo, double hi, double delta = 1e-5);
  static BudgetSpec mixture(double w1, double m1, double v1, double w2, double m2, double v2,
                            double delta = 1e-5);
  void validate() const;
};

std::vector<privacy::PrivacyBudget> sample_budgets(std::size_t num_clients, const BudgetSpec& spec,
                                                   std::uint64_t seed);

}  // namespace dpfed::data

#endif  // DPFED_DATA_HPP
