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

#ifndef DPFED_BOUNDS_HPP
#define DPFED_BOUNDS_HPP

#include <cstdint>
#include <vector>

#include "dpfed/data.hpp"
#include "dpfed/model.hpp"
#include "dpfed/selection.hpp"

namespace dpfed::bounds {

// Assumption constants and run shape feeding the convergence-bound
// evaluators. All are user-supplied; for the quadratic test model they are
// available analytically (L = mu = 1, optima in closed form).
struct BoundInputs {
  double smoothness_L = 1.0;
  double strong_convexity_mu = 1.0;  // Theorem 1 only
  double gradient_bound_B1 = 1.0;
  double dissimilarity_B2 = 0.0;
  double clip_C = 1.0;
  std::uint64_t model_dimension_D = 1;
  std::uint64_t total_iterations_T = 1;
  double stepsize_beta = 1.0;
  double stepsize_gamma = 1.0;
  double gamma_tradeoff_Gamma = 1.0;
  double initial_gap = 0.0;              // F(w_1) - F*
  double initial_distance = 0.0;         // ||w_1 - w^{b,*}||_2
  double clipping_gap_estimate = 0.0;    // max_t ||Delta_t||_1, supplied externally

  void validate() const;                 // throws std::domain_error
  void require_theorem1_stepsize() const;  // beta > B1 / (C mu), named on failure
};

// The three non-vanishing error terms of the analysis.
struct ErrorTerms {
  double g_select_clip = 0.0;
  double g_dp = 0.0;
  double g_b_clip = 0.0;
};

// Selection + clipping error: ||p_s - p_u||_1 + clipping_gap + B2 / C.
double g_select_clip(const selection::SelectionProbabilities& p_s,
                     const selection::SelectionProbabilities& p_u, double clipping_gap, double B2,
                     double C);

// Privacy error: sum_k (p_s_k)^2 * D * V_k.
double g_dp(const selection::SelectionProbabilities& p_s,
            const std::vector<double>& noise_coefficients, std::uint64_t D);

// Clipping error under biased weights: biased_clipping_gap + B2 / C.
double g_b_clip(double biased_clipping_gap, double B2, double C);

// Right-hand side of the strongly convex bound (diminishing stepsize
// beta/(gamma+t), any Gamma > 0). Requires beta > B1/(C mu).
double theorem1_bound(const BoundInputs& inputs, const ErrorTerms& terms);

// Right-hand side of the smooth (non-convex) bound at stepsize (B1/C)/sqrt(T).
double theorem2_bound(const BoundInputs& inputs, const ErrorTerms& terms);

struct ProfilePoint {
  std::uint64_t T = 0;
  double bound = 0.0;       // f(T)
  int derivative_sign = 0;  // sign of f'(T) at this grid point
};

// The T-dependent part of the smooth bound, f(T) = (B1/2) sqrt(A + Q sqrt(T))
// + sqrt(R / sqrt(T)) with A = g_select_clip^2, Q = 2 L g_dp,
// R = initial_gap + L B1^2 / 2, and its analytic derivative
//   f'(T) = (B1/8) Q / (sqrt(A + Q sqrt(T)) sqrt(T)) - (sqrt(R)/4) T^{-5/4}.
// T is treated as continuous for the derivative, integer for evaluation.
std::vector<ProfilePoint> corollary2_profile(const BoundInputs& inputs, const ErrorTerms& terms,
                                             const std::vector<std::uint64_t>& T_grid);

// f(T) and f'(T) on the continuous relaxation (exposed for verification).
double corollary2_value(const BoundInputs& inputs, const ErrorTerms& terms, double T);
double corollary2_derivative(const BoundInputs& inputs, const ErrorTerms& terms, double T);

// Number of sign changes of f' along the grid (ignoring exact zeros).
std::size_t count_sign_changes(const std::vector<ProfilePoint>& profile);

// Clipping-gap vectors measured at a model snapshot: entry k of the unbiased
// gap is (|M_k| / sum|M_i|) * mean_d |q_k(d) - 1|, the biased gap weights by
// p_s_k, with q_k(d) = max{1, ||g_k(w,d)||/C} / max{1, ||grad F(w)||/C}.
struct ClippingGap {
  double unbiased_gap = 0.0;  // ||Delta||_1
  double biased_gap = 0.0;    // ||Delta^b||_1
};

ClippingGap empirical_clipping_gap(const learning::Model& model, const data::Dataset& dataset,
                                   const std::vector<std::vector<std::size_t>>& client_indices,
                                   double clip, const selection::SelectionProbabilities& p_s);

}  // namespace dpfed::bounds

#endif  // DPFED_BOUNDS_HPP
