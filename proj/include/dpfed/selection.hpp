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

#ifndef DPFED_SELECTION_HPP
#define DPFED_SELECTION_HPP

#include <cstdint>
#include <vector>

namespace dpfed::selection {

// A point on the N-simplex: entries non-negative, summing to 1 within 1e-9.
class SelectionProbabilities {
 public:
  // Validates the simplex invariants; throws std::domain_error on violation.
  explicit SelectionProbabilities(std::vector<double> probabilities);

  const std::vector<double>& values() const { return probabilities_; }
  std::size_t size() const { return probabilities_.size(); }
  double operator[](std::size_t k) const { return probabilities_[k]; }
  double min_entry() const;

 private:
  std::vector<double> probabilities_;
};

// One instance of the privacy-aware selection problem:
//   min over the simplex of  ||p - pu||_1 + sqrt(||p - pu||_1^2 + eta * sum_k p_k^2 D V_k)
struct SelectionProblem {
  SelectionProblem(SelectionProbabilities unbiased, std::vector<double> noise_coefficients,
                   std::uint64_t model_dimension, double eta);

  SelectionProbabilities unbiased;
  std::vector<double> noise_coefficients;  // V_k >= 0
  std::uint64_t model_dimension;           // D >= 1
  double eta;                              // >= 0

  std::size_t size() const { return unbiased.size(); }
};

// Size-proportional simplex point: p_k = |M_k| / sum_i |M_i|.
SelectionProbabilities unbiased_probabilities(const std::vector<std::uint64_t>& dataset_sizes);

// Exact objective of the selection problem at `candidate`.
double objective_value(const SelectionProblem& problem, const SelectionProbabilities& candidate);

struct SolveResult {
  SelectionProbabilities probabilities;  // best iterate found
  double objective = 0.0;
  bool converged = false;
  std::uint64_t iterations = 0;
  double stationarity_residual = 0.0;  // certificate of the returned iterate
};

// Minimizes the selection objective over the simplex. Projected subgradient
// descent (Euclidean simplex projection, diminishing step a/sqrt(t),
// best-iterate tracking) followed by an exact scalarized refinement that
// polishes the iterate to the KKT system. On non-convergence the result still
// carries the best iterate and its certificate, with converged = false.
SolveResult solve(const SelectionProblem& problem, double tolerance = 1e-8,
                  std::uint64_t max_iterations = 200000);

// Brute-force lattice minimizer for verification. Enumerates the simplex
// lattice with the given step; refuses N > 4 (enumeration is exponential).
SelectionProbabilities oracle_solve(const SelectionProblem& problem, double grid_step);

struct KktCertificate {
  double stationarity_residual = 0.0;
  double complementarity_residual = 0.0;
  double primal_feasibility_residual = 0.0;
  double multiplier_lambda = 0.0;
  std::vector<double> multipliers_mu;
};

// Evaluates the first-order optimality system at `candidate`. The subgradient
// of |p_k - pu_k| is chosen within [-1, 1] at kinks to minimize the
// stationarity residual; coordinates at the positivity boundary are handled
// with active-set multipliers. Degenerate candidates yield large residuals,
// never exceptions.
KktCertificate kkt_check(const SelectionProblem& problem, const SelectionProbabilities& candidate);

// True iff every entry exceeds `floor`.
bool full_participation_check(const SelectionProbabilities& candidate, double floor);

// Indices of the `count` largest losses, ties broken by lowest index.
std::vector<std::size_t> biased_loss_selection(const std::vector<double>& local_losses,
                                               std::size_t count);

// Pre-sampled participation plan: one multiset of client indices per round
// plus the realized per-client selection counts T_k.
struct Schedule {
  std::vector<std::vector<int>> rounds;          // sorted within each round
  std::vector<std::uint64_t> selection_counts;   // T_k, sum = rounds * per_round
};

// Draws `rounds` multisets of size `per_round` with replacement from the
// categorical distribution `probabilities`. Deterministic given the seed.
Schedule sample_schedule(const SelectionProbabilities& probabilities, std::uint64_t rounds,
                         std::uint64_t per_round, std::uint64_t seed);

// Euclidean projection onto the simplex (sort-and-threshold).
std::vector<double> project_to_simplex(std::vector<double> v);

}  // namespace dpfed::selection

#endif  // DPFED_SELECTION_HPP
