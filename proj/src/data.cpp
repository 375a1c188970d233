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

#include "dpfed/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "dpfed/rng.hpp"

namespace dpfed::data {

namespace {

// Unassigned-index pool with O(1) uniform draw and O(1) removal by value.
class IndexPool {
 public:
  explicit IndexPool(std::size_t n) : items_(n), position_(n) {
    std::iota(items_.begin(), items_.end(), std::size_t{0});
    std::iota(position_.begin(), position_.end(), std::size_t{0});
  }

  std::size_t size() const { return items_.size(); }
  bool contains(std::size_t value) const { return position_[value] != kGone; }

  std::size_t draw(RngStream& stream) {
    const std::size_t at = static_cast<std::size_t>(stream.next_below(items_.size()));
    const std::size_t value = items_[at];
    remove_at(at);
    return value;
  }

  void remove(std::size_t value) { remove_at(position_[value]); }

 private:
  static constexpr std::size_t kGone = static_cast<std::size_t>(-1);

  void remove_at(std::size_t at) {
    const std::size_t value = items_[at];
    const std::size_t last = items_.back();
    items_[at] = last;
    position_[last] = at;
    items_.pop_back();
    position_[value] = kGone;
  }

  std::vector<std::size_t> items_;
  std::vector<std::size_t> position_;
};

std::uint32_t read_be32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("idx: cannot open '" + path + "'");
  return std::vector<unsigned char>((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
}

}  // namespace

std::vector<std::uint64_t> sample_sizes(std::uint64_t total, std::size_t num_clients,
                                        std::uint64_t seed) {
  if (num_clients == 0) throw std::domain_error("sample sizes: need at least one client");
  if (total < num_clients)
    throw std::domain_error("sample sizes: total must be >= number of clients");

  RngStream stream(derive_seed(seed, "data.sizes"));
  std::vector<double> weights(num_clients);
  double weight_sum = 0.0;
  for (double& v : weights) {
    v = stream.next_uniform(0.5, 1.5);
    weight_sum += v;
  }

  // Largest-remainder rounding keeps the exact total.
  std::vector<std::uint64_t> sizes(num_clients);
  std::vector<std::pair<double, std::size_t>> remainders(num_clients);
  std::uint64_t assigned = 0;
  for (std::size_t k = 0; k < num_clients; ++k) {
    const double target = static_cast<double>(total) * weights[k] / weight_sum;
    sizes[k] = static_cast<std::uint64_t>(std::floor(target));
    remainders[k] = {target - std::floor(target), k};
    assigned += sizes[k];
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++sizes[remainders[i % num_clients].second];

  // Lift any zero-size client from the largest one.
  for (std::size_t k = 0; k < num_clients; ++k) {
    while (sizes[k] == 0) {
      const auto largest = std::max_element(sizes.begin(), sizes.end());
      --*largest;
      ++sizes[k];
    }
  }
  return sizes;
}

Partition partition_noniid(const std::vector<int>& labels,
                           const std::vector<std::uint64_t>& sizes, double similarity_s,
                           std::uint64_t seed) {
  if (!(similarity_s >= 0.0 && similarity_s <= 100.0))
    throw std::domain_error("partition: similarity must be in [0, 100]");
  std::uint64_t requested = 0;
  for (std::uint64_t size : sizes) {
    if (size == 0) throw std::domain_error("partition: client sizes must be >= 1");
    requested += size;
  }
  if (requested > labels.size())
    throw std::domain_error("partition: requested sizes exceed available examples");

  // Global pool sorted by class label, original order within a class.
  std::vector<std::size_t> sorted(labels.size());
  std::iota(sorted.begin(), sorted.end(), std::size_t{0});
  std::stable_sort(sorted.begin(), sorted.end(),
                   [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });

  IndexPool pool(labels.size());
  RngStream stream(derive_seed(seed, "data.partition"));
  std::size_t sorted_cursor = 0;

  Partition partition;
  partition.similarity = similarity_s;
  partition.client_indices.resize(sizes.size());
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    auto& mine = partition.client_indices[k];
    mine.reserve(sizes[k]);
    // Round-half-up share of IID draws.
    const std::uint64_t iid_count = std::min<std::uint64_t>(
        sizes[k], static_cast<std::uint64_t>(std::floor(similarity_s * static_cast<double>(sizes[k]) / 100.0 + 0.5)));
    for (std::uint64_t i = 0; i < iid_count; ++i) mine.push_back(pool.draw(stream));
    for (std::uint64_t i = iid_count; i < sizes[k]; ++i) {
      while (!pool.contains(sorted[sorted_cursor])) ++sorted_cursor;
      mine.push_back(sorted[sorted_cursor]);
      pool.remove(sorted[sorted_cursor]);
    }
  }
  return partition;
}

Dataset synth_blobs(std::size_t num_classes, std::size_t dim, std::size_t count, double spread,
                    std::uint64_t seed) {
  if (num_classes == 0) throw std::domain_error("blobs: need at least one class");
  if (dim == 0) throw std::domain_error("blobs: dimension must be >= 1");
  if (count == 0) throw std::domain_error("blobs: count must be >= 1");
  if (!(spread > 0.0)) throw std::domain_error("blobs: spread must be > 0");

  // Class c mean: (1 + floor(c/dim)) * e_{c mod dim}; pairwise distance >= 1.
  RngStream stream(derive_seed(seed, "data.blobs"));
  Dataset dataset;
  dataset.feature_dim = dim;
  dataset.num_classes = num_classes;
  dataset.features.resize(count * dim);
  dataset.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t label = static_cast<std::size_t>(stream.next_below(num_classes));
    dataset.labels[i] = static_cast<int>(label);
    double* row = dataset.features.data() + i * dim;
    for (std::size_t j = 0; j < dim; ++j) row[j] = spread * stream.next_normal();
    row[label % dim] += 1.0 + static_cast<double>(label / dim);
  }
  return dataset;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const std::vector<unsigned char> images = read_file(images_path);
  const std::vector<unsigned char> label_bytes = read_file(labels_path);

  if (images.size() < 16) throw ParseError("idx: image file truncated before header (offset 0)");
  if (label_bytes.size() < 8) throw ParseError("idx: label file truncated before header (offset 0)");

  const std::uint32_t image_magic = read_be32(images.data());
  if (image_magic != 0x00000803u) {
    char msg[96];
    std::snprintf(msg, sizeof msg, "idx: bad image magic 0x%08x at offset 0 (want 0x00000803)",
                  image_magic);
    throw ParseError(msg);
  }
  const std::uint32_t label_magic = read_be32(label_bytes.data());
  if (label_magic != 0x00000801u) {
    char msg[96];
    std::snprintf(msg, sizeof msg, "idx: bad label magic 0x%08x at offset 0 (want 0x00000801)",
                  label_magic);
    throw ParseError(msg);
  }

  const std::uint32_t image_count = read_be32(images.data() + 4);
  const std::uint32_t rows = read_be32(images.data() + 8);
  const std::uint32_t cols = read_be32(images.data() + 12);
  const std::uint32_t label_count = read_be32(label_bytes.data() + 4);
  if (image_count != label_count)
    throw ParseError("idx: image count " + std::to_string(image_count) +
                     " does not match label count " + std::to_string(label_count));

  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  const std::size_t need_images = 16 + static_cast<std::size_t>(image_count) * pixels;
  if (images.size() < need_images)
    throw ParseError("idx: image file truncated at offset " + std::to_string(images.size()) +
                     " (need " + std::to_string(need_images) + " bytes)");
  const std::size_t need_labels = 8 + label_count;
  if (label_bytes.size() < need_labels)
    throw ParseError("idx: label file truncated at offset " + std::to_string(label_bytes.size()) +
                     " (need " + std::to_string(need_labels) + " bytes)");

  Dataset dataset;
  dataset.feature_dim = pixels;
  dataset.features.resize(static_cast<std::size_t>(image_count) * pixels);
  dataset.labels.resize(image_count);
  int max_label = 0;
  for (std::uint32_t i = 0; i < image_count; ++i) {
    const unsigned char* src = images.data() + 16 + static_cast<std::size_t>(i) * pixels;
    double* dst = dataset.features.data() + static_cast<std::size_t>(i) * pixels;
    for (std::size_t j = 0; j < pixels; ++j) dst[j] = static_cast<double>(src[j]) / 255.0;
    dataset.labels[i] = static_cast<int>(label_bytes[8 + i]);
    max_label = std::max(max_label, dataset.labels[i]);
  }
  dataset.num_classes = static_cast<std::size_t>(max_label) + 1;
  return dataset;
}

BudgetSpec BudgetSpec::uniform(double lo, double hi, double delta) {
  BudgetSpec spec;
  spec.kind = Kind::kUniform;
  spec.uniform_lo = lo;
  spec.uniform_hi = hi;
  spec.delta = delta;
  spec.validate();
  return spec;
}

BudgetSpec BudgetSpec::mixture(double w1, double m1, double v1, double w2, double m2, double v2,
                               double delta) {
  BudgetSpec spec;
  spec.kind = Kind::kMixture;
  spec.weight1 = w1;
  spec.mean1 = m1;
  spec.variance1 = v1;
  spec.weight2 = w2;
  spec.mean2 = m2;
  spec.variance2 = v2;
  spec.delta = delta;
  spec.validate();
  return spec;
}

void BudgetSpec::validate() const {
  if (!(delta > 0.0 && delta <= 1.0)) throw std::domain_error("budget spec: delta must be in (0, 1]");
  if (kind == Kind::kUniform) {
    if (!(uniform_lo >= 0.0 && uniform_hi > uniform_lo))
      throw std::domain_error("budget spec: uniform needs 0 <= lo < hi");
  } else {
    if (!(weight1 > 0.0 && weight2 > 0.0 && std::abs(weight1 + weight2 - 1.0) <= 1e-9))
      throw std::domain_error("budget spec: mixture weights must be positive and sum to 1");
    if (!(variance1 > 0.0 && variance2 > 0.0))
      throw std::domain_error("budget spec: mixture variances must be > 0");
  }
}

std::vector<privacy::PrivacyBudget> sample_budgets(std::size_t num_clients, const BudgetSpec& spec,
                                                   std::uint64_t seed) {
  spec.validate();
  if (num_clients == 0) throw std::domain_error("budgets: need at least one client");

  RngStream stream(derive_seed(seed, "data.budgets"));
  std::vector<privacy::PrivacyBudget> budgets(num_clients);
  for (auto& budget : budgets) {
    double epsilon = 0.0;
    do {
      if (spec.kind == BudgetSpec::Kind::kUniform) {
        epsilon = stream.next_uniform(spec.uniform_lo, spec.uniform_hi);
      } else {
        const bool first = stream.next_unit() < spec.weight1;
        const double mean = first ? spec.mean1 : spec.mean2;
        const double stddev = std::sqrt(first ? spec.variance1 : spec.variance2);
        epsilon = mean + stddev * stream.next_normal();
      }
    } while (!(epsilon > 0.0));
    budget.epsilon = epsilon;
    budget.delta = spec.delta;
  }
  return budgets;
}

}  // namespace dpfed::data
