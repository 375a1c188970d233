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

#include "dpfed/privacy_accounting.hpp"

#include <cmath>
#include <stdexcept>

namespace dpfed::privacy {

void validate_budget(const PrivacyBudget& budget) {
  if (!(budget.epsilon > 0.0)) throw std::domain_error("privacy budget: epsilon must be > 0");
  if (!(budget.delta > 0.0 && budget.delta <= 1.0))
    throw std::domain_error("privacy budget: delta must be in (0, 1]");
}

double gaussian_mechanism_variance(double sensitivity, const PrivacyBudget& budget) {
  if (!(sensitivity > 0.0)) throw std::domain_error("gaussian mechanism: sensitivity must be > 0");
  validate_budget(budget);
  return 2.0 * sensitivity * sensitivity * std::log(1.25 / budget.delta) /
         (budget.epsilon * budget.epsilon);
}

double strong_composition_variance(double sensitivity, const PrivacyBudget& budget,
                                   std::uint64_t iterations) {
  if (!(sensitivity > 0.0))
    throw std::domain_error("strong composition: sensitivity must be > 0");
  if (iterations == 0) throw std::domain_error("strong composition: iterations must be >= 1");
  validate_budget(budget);
  const double eps = budget.epsilon;
  return 8.0 * static_cast<double>(iterations) * sensitivity * sensitivity *
         std::log(std::exp(1.0) + eps / budget.delta) / (eps * eps);
}

double amplified_epsilon(double epsilon, double ratio) {
  if (!(epsilon > 0.0)) throw std::domain_error("amplified epsilon: epsilon must be > 0");
  if (!(ratio > 0.0 && ratio <= 1.0))
    throw std::domain_error("amplified epsilon: ratio must be in (0, 1]");
  // log(1 + (e^eps - 1)/r) without cancellation at small eps. Past the
  // expm1 overflow range, switch to the algebraically identical
  // eps - log(r) + log1p((r - 1) e^-eps).
  if (epsilon > 700.0) return epsilon - std::log(ratio) + std::log1p((ratio - 1.0) * std::exp(-epsilon));
  return std::log1p(std::expm1(epsilon) / ratio);
}

double compute_noise_coefficient(std::uint64_t dataset_size, const PrivacyBudget& budget,
                                 double subsampling_ratio) {
  if (dataset_size < 1) throw std::domain_error("noise coefficient: dataset size must be >= 1");
  validate_budget(budget);
  const double eps_prime = amplified_epsilon(budget.epsilon, subsampling_ratio);
  const double m = static_cast<double>(dataset_size);
  const double r = subsampling_ratio;
  // Strong composition of the amplified budget at sensitivity 1/(r m) and
  // failure probability delta/r. The inflated delta/r may exceed 1; the
  // composition formula stays well defined (log(e + x), x > 0), so no clamp.
  return 8.0 * std::log(std::exp(1.0) + r * eps_prime / budget.delta) /
         (m * m * r * r * eps_prime * eps_prime);
}

ClientProfile make_client_profile(int id, std::uint64_t dataset_size, PrivacyBudget budget,
                                  double subsampling_ratio) {
  ClientProfile profile;
  profile.id = id;
  profile.dataset_size = dataset_size;
  profile.budget = budget;
  profile.subsampling_ratio = subsampling_ratio;
  profile.noise_coefficient = compute_noise_coefficient(dataset_size, budget, subsampling_ratio);
  return profile;
}

double per_client_sigma_squared(const ClientProfile& profile, std::uint64_t selected_count,
                                std::uint64_t local_rounds, double clip) {
  if (!(clip > 0.0)) throw std::domain_error("sigma squared: clip threshold must be > 0");
  if (local_rounds == 0) throw std::domain_error("sigma squared: local rounds must be >= 1");
  if (selected_count == 0) return 0.0;
  return profile.noise_coefficient * static_cast<double>(selected_count) *
         static_cast<double>(local_rounds) * clip * clip;
}

}  // namespace dpfed::privacy
