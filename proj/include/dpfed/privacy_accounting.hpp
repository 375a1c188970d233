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

#ifndef DPFED_PRIVACY_ACCOUNTING_HPP
#define DPFED_PRIVACY_ACCOUNTING_HPP

#include <cstdint>

namespace dpfed::privacy {

// An (epsilon, delta) differential-privacy guarantee. Smaller values mean
// stronger privacy and more injected noise.
struct PrivacyBudget {
  double epsilon = 0.0;  // > 0
  double delta = 0.0;    // in (0, 1]

  bool valid() const { return epsilon > 0.0 && delta > 0.0 && delta <= 1.0; }
};

// Throws std::domain_error if the budget is outside its domain.
void validate_budget(const PrivacyBudget& budget);

// Per-dimension variance of the Gaussian mechanism calibrated to (eps, delta)
// at the given L2 sensitivity: sigma^2 = 2 (Df)^2 log(1.25/delta) / eps^2.
double gaussian_mechanism_variance(double sensitivity, const PrivacyBudget& budget);

// Variance required so that `iterations` adaptive uses of the Gaussian
// mechanism jointly satisfy (eps, delta)-DP under strong composition:
// 8 T S^2 log(e + eps/delta) / eps^2.
double strong_composition_variance(double sensitivity, const PrivacyBudget& budget,
                                   std::uint64_t iterations);

// Pre-subsampling budget whose ratio-r subsampled execution satisfies
// (epsilon, .)-DP: log(1 + (e^eps - 1) / r). Evaluated with expm1/log1p so
// small epsilon does not cancel.
double amplified_epsilon(double epsilon, double ratio);

// Per-dimension noise coefficient V for a client with dataset size m,
// budget (eps, delta), and subsampling ratio r:
//   V = 8 log(e + r eps'/delta) / (m^2 r^2 eps'^2),  eps' = amplified_epsilon(eps, r).
// Equivalently: amplify the budget through the subsampling lemma, then apply
// strong composition at sensitivity 1/(r m) and budget (eps', delta/r).
double compute_noise_coefficient(std::uint64_t dataset_size, const PrivacyBudget& budget,
                                 double subsampling_ratio);

// One federated client as the accountant sees it. `noise_coefficient` is
// derived; use make_client_profile to keep the invariant.
struct ClientProfile {
  int id = 0;
  std::uint64_t dataset_size = 0;  // >= 1
  PrivacyBudget budget;
  double subsampling_ratio = 0.0;  // in (0, 1]
  double noise_coefficient = 0.0;  // V, derived from the fields above
};

// Validates the fields and fills in the derived noise coefficient.
ClientProfile make_client_profile(int id, std::uint64_t dataset_size, PrivacyBudget budget,
                                  double subsampling_ratio);

// Applied per-dimension noise variance for one client over the whole run:
// sigma^2 = V * T_k * T_l * C^2, where T_k is the realized selection count.
// A never-selected client (T_k = 0) gets zero.
double per_client_sigma_squared(const ClientProfile& profile, std::uint64_t selected_count,
                                std::uint64_t local_rounds, double clip);

}  // namespace dpfed::privacy

#endif  // DPFED_PRIVACY_ACCOUNTING_HPP
