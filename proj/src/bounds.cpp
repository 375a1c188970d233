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

#include "dpfed/bounds.hpp"

#include <cmath>
#include <stdexcept>

namespace dpfed::bounds {

void BoundInputs::validate() const {
  if (!(smoothness_L > 0.0)) throw std::domain_error("bounds: L must be > 0");
  if (!(strong_convexity_mu > 0.0)) throw std::domain_error("bounds: mu must be > 0");
  if (!(gradient_bound_B1 > 0.0)) throw std::domain_error("bounds: B1 must be > 0");
  if (!(dissimilarity_B2 >= 0.0)) throw std::domain_error("bounds: B2 must be >= 0");
  if (!(clip_C > 0.0)) throw std::domain_error("bounds: C must be > 0");
  if (model_dimension_D == 0) throw std::domain_error("bounds: D must be >= 1");
  if (total_iterations_T == 0) throw std::domain_error("bounds: T must be >= 1");
  if (!(stepsize_beta > 0.0)) throw std::domain_error("bounds: beta must be > 0");
  if (!(stepsize_gamma >= 1.0)) throw std::domain_error("bounds: gamma must be >= 1");
  if (!(gamma_tradeoff_Gamma > 0.0)) throw std::domain_error("bounds: Gamma must be > 0");
  if (!(initial_gap >= 0.0)) throw std::domain_error("bounds: initial gap must be >= 0");
  if (!(initial_distance >= 0.0)) throw std::domain_error("bounds: initial distance must be >= 0");
  if (!(clipping_gap_estimate >= 0.0))
    throw std::domain_error("bounds: clipping gap must be >= 0");
}

void BoundInputs::require_theorem1_stepsize() const {
  const double threshold = gradient_bound_B1 / (clip_C * strong_convexity_mu);
  if (!(stepsize_beta > threshold))
    throw std::domain_error("bounds: stepsize precondition violated: beta <= B1/(C*mu)");
}

namespace {
void check_terms(const ErrorTerms& terms) {
  if (!(terms.g_select_clip >= 0.0 && terms.g_dp >= 0.0 && terms.g_b_clip >= 0.0))
    throw std::domain_error("bounds: error terms must be >= 0");
}
}  // namespace

double g_select_clip(const selection::SelectionProbabilities& p_s,
                     const selection::SelectionProbabilities& p_u, double clipping_gap, double B2,
                     double C) {
  if (p_s.size() != p_u.size()) throw std::domain_error("g_select_clip: dimension mismatch");
  if (!(clipping_gap >= 0.0)) throw std::domain_error("g_select_clip: clipping gap must be >= 0");
  if (!(B2 >= 0.0)) throw std::domain_error("g_select_clip: B2 must be >= 0");
  if (!(C > 0.0)) throw std::domain_error("g_select_clip: C must be > 0");
  double l1 = 0.0;
  for (std::size_t k = 0; k < p_s.size(); ++k) l1 += std::abs(p_s[k] - p_u[k]);
  return l1 + clipping_gap + B2 / C;
}

double g_dp(const selection::SelectionProbabilities& p_s,
            const std::vector<double>& noise_coefficients, std::uint64_t D) {
  if (p_s.size() != noise_coefficients.size()) throw std::domain_error("g_dp: dimension mismatch");
  if (D == 0) throw std::domain_error("g_dp: D must be >= 1");
  double total = 0.0;
  for (std::size_t k = 0; k < p_s.size(); ++k)
    total += p_s[k] * p_s[k] * static_cast<double>(D) * noise_coefficients[k];
  return total;
}

double g_b_clip(double biased_clipping_gap, double B2, double C) {
  if (!(biased_clipping_gap >= 0.0)) throw std::domain_error("g_b_clip: gap must be >= 0");
  if (!(B2 >= 0.0)) throw std::domain_error("g_b_clip: B2 must be >= 0");
  if (!(C > 0.0)) throw std::domain_error("g_b_clip: C must be > 0");
  return biased_clipping_gap + B2 / C;
}

double theorem1_bound(const BoundInputs& inputs, const ErrorTerms& terms) {
  inputs.validate();
  check_terms(terms);
  inputs.require_theorem1_stepsize();

  const double L = inputs.smoothness_L;
  const double mu = inputs.strong_convexity_mu;
  const double B1 = inputs.gradient_bound_B1;
  const double C = inputs.clip_C;
  const double T = static_cast<double>(inputs.total_iterations_T);
  const double beta = inputs.stepsize_beta;
  const double gamma = inputs.stepsize_gamma;
  const double Gamma = inputs.gamma_tradeoff_Gamma;

  const double Z = std::sqrt(4.5 * L * Gamma * gamma * inputs.initial_distance * inputs.initial_distance +
                             0.5 * (1.0 + 9.0 * Gamma) * beta * beta * T * L / (gamma + T) * C * C +
                             gamma * inputs.initial_gap);
  const double vanishing = Z / std::sqrt(gamma + T);
  const double biased_clip_term =
      std::sqrt(18.0 * Gamma * beta * T * L / (gamma + T) * (B1 * C / mu) * terms.g_b_clip);
  const double selection_term =
      std::sqrt(2.0 * L) * beta * T * C / (2.0 * (gamma + T)) *
      (terms.g_select_clip +
       std::sqrt((1.0 + 1.0 / Gamma) * terms.g_select_clip * terms.g_select_clip +
                 (1.0 + 9.0 * Gamma) * terms.g_dp));
  return vanishing + biased_clip_term + selection_term;
}

double theorem2_bound(const BoundInputs& inputs, const ErrorTerms& terms) {
  inputs.validate();
  check_terms(terms);

  const double L = inputs.smoothness_L;
  const double B1 = inputs.gradient_bound_B1;
  const double T = static_cast<double>(inputs.total_iterations_T);
  const double sqrt_T = std::sqrt(T);

  const double non_vanishing =
      B1 / 2.0 *
      (terms.g_select_clip + std::sqrt(terms.g_select_clip * terms.g_select_clip +
                                       2.0 * sqrt_T * L * terms.g_dp));
  const double vanishing = std::sqrt(inputs.initial_gap / sqrt_T + 0.5 * L * B1 * B1 / sqrt_T);
  return non_vanishing + vanishing;
}

namespace {
struct Corollary2Constants {
  double A = 0.0;  // (g_select_clip)^2
  double Q = 0.0;  // 2 L g_dp
  double R = 0.0;  // initial_gap + L B1^2 / 2
  double B1 = 0.0;
};

Corollary2Constants corollary2_constants(const BoundInputs& inputs, const ErrorTerms& terms) {
  inputs.validate();
  check_terms(terms);
  Corollary2Constants c;
  c.A = terms.g_select_clip * terms.g_select_clip;
  c.Q = 2.0 * inputs.smoothness_L * terms.g_dp;
  c.R = inputs.initial_gap + 0.5 * inputs.smoothness_L * inputs.gradient_bound_B1 *
                                  inputs.gradient_bound_B1;
  c.B1 = inputs.gradient_bound_B1;
  return c;
}
}  // namespace

double corollary2_value(const BoundInputs& inputs, const ErrorTerms& terms, double T) {
  const Corollary2Constants c = corollary2_constants(inputs, terms);
  const double sqrt_T = std::sqrt(T);
  return c.B1 / 2.0 * std::sqrt(c.A + c.Q * sqrt_T) + std::sqrt(c.R / sqrt_T);
}

double corollary2_derivative(const BoundInputs& inputs, const ErrorTerms& terms, double T) {
  const Corollary2Constants c = corollary2_constants(inputs, terms);
  const double sqrt_T = std::sqrt(T);
  double grow = 0.0;
  if (c.Q > 0.0) grow = c.B1 / 8.0 * c.Q / (std::sqrt(c.A + c.Q * sqrt_T) * sqrt_T);
  double shrink = 0.0;
  if (c.R > 0.0) shrink = std::sqrt(c.R) / 4.0 / std::pow(T, 1.25);
  return grow - shrink;
}

std::vector<ProfilePoint> corollary2_profile(const BoundInputs& inputs, const ErrorTerms& terms,
                                             const std::vector<std::uint64_t>& T_grid) {
  for (std::size_t i = 0; i + 1 < T_grid.size(); ++i)
    if (T_grid[i] >= T_grid[i + 1])
      throw std::domain_error("corollary2: T grid must be sorted strictly ascending");
  std::vector<ProfilePoint> profile;
  profile.reserve(T_grid.size());
  for (std::uint64_t T : T_grid) {
    if (T == 0) throw std::domain_error("corollary2: grid entries must be >= 1");
    ProfilePoint point;
    point.T = T;
    const double t = static_cast<double>(T);
    point.bound = corollary2_value(inputs, terms, t);
    const double derivative = corollary2_derivative(inputs, terms, t);
    point.derivative_sign = derivative > 0.0 ? 1 : (derivative < 0.0 ? -1 : 0);
    profile.push_back(point);
  }
  return profile;
}

std::size_t count_sign_changes(const std::vector<ProfilePoint>& profile) {
  std::size_t changes = 0;
  int previous = 0;
  for (const ProfilePoint& point : profile) {
    if (point.derivative_sign == 0) continue;
    if (previous != 0 && point.derivative_sign != previous) ++changes;
    previous = point.derivative_sign;
  }
  return changes;
}

ClippingGap empirical_clipping_gap(const learning::Model& model, const data::Dataset& dataset,
                                   const std::vector<std::vector<std::size_t>>& client_indices,
                                   double clip, const selection::SelectionProbabilities& p_s) {
  if (!(clip > 0.0)) throw std::domain_error("clipping gap: C must be > 0");
  if (p_s.size() != client_indices.size())
    throw std::domain_error("clipping gap: probability vector length mismatch");

  const std::size_t dim = model.spec.parameter_count();
  std::vector<double> gradient(dim);
  std::vector<double> global_gradient(dim, 0.0);

  // grad F(w): size-weighted mean of per-example gradients = plain mean over
  // the union of client data.
  std::size_t total_examples = 0;
  for (const auto& indices : client_indices) total_examples += indices.size();
  if (total_examples == 0) throw std::domain_error("clipping gap: no data");
  for (const auto& indices : client_indices) {
    for (std::size_t example : indices) {
      learning::per_example_gradient(model, dataset.example(example), dataset.labels[example],
                                     gradient);
      for (std::size_t j = 0; j < dim; ++j) global_gradient[j] += gradient[j];
    }
  }
  double global_norm = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    global_gradient[j] /= static_cast<double>(total_examples);
    global_norm += global_gradient[j] * global_gradient[j];
  }
  global_norm = std::sqrt(global_norm);
  const double denominator = std::max(1.0, global_norm / clip);

  ClippingGap gap;
  for (std::size_t k = 0; k < client_indices.size(); ++k) {
    const auto& indices = client_indices[k];
    if (indices.empty()) continue;
    double deviation = 0.0;  // sum_d |q_k(d) - 1|
    for (std::size_t example : indices) {
      learning::per_example_gradient(model, dataset.example(example), dataset.labels[example],
                                     gradient);
      double norm = 0.0;
      for (double g : gradient) norm += g * g;
      norm = std::sqrt(norm);
      const double q = std::max(1.0, norm / clip) / denominator;
      deviation += std::abs(q - 1.0);
    }
    const double mean_deviation = deviation / static_cast<double>(indices.size());
    const double unbiased_weight =
        static_cast<double>(indices.size()) / static_cast<double>(total_examples);
    gap.unbiased_gap += unbiased_weight * mean_deviation;
    gap.biased_gap += p_s[k] * mean_deviation;
  }
  return gap;
}

}  // namespace dpfed::bounds
