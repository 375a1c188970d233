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

#include "dpfed/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "dpfed/rng.hpp"

namespace dpfed::selection {

namespace {

constexpr double kSimplexSumTolerance = 1e-9;

// Shared pieces of the objective at a point p:
//   deviation = ||p - pu||_1
//   quadratic = eta * D * sum_k V_k p_k^2
//   root      = sqrt(deviation^2 + quadratic)
struct ObjectiveParts {
  double deviation = 0.0;
  double quadratic = 0.0;
  double root = 0.0;
};

ObjectiveParts evaluate_parts(const SelectionProblem& problem, const std::vector<double>& p) {
  ObjectiveParts parts;
  const auto& u = problem.unbiased.values();
  const double scale = problem.eta * static_cast<double>(problem.model_dimension);
  for (std::size_t k = 0; k < p.size(); ++k) {
    parts.deviation += std::abs(p[k] - u[k]);
    parts.quadratic += scale * problem.noise_coefficients[k] * p[k] * p[k];
  }
  parts.root = std::sqrt(parts.deviation * parts.deviation + parts.quadratic);
  return parts;
}

double objective_from_parts(const ObjectiveParts& parts) { return parts.deviation + parts.root; }

// Coordinate-wise minimizer of |p - u| + theta * w * p^2 + lambda * p over
// p >= 0. Piecewise closed form; non-increasing and continuous in lambda for
// w > 0. For w == 0 the minimizer is set-valued at |lambda| == 1; the
// convention below keeps the bisection monotone.
double scalarized_coordinate(double u, double w, double theta, double lambda) {
  const double c = 2.0 * theta * w;
  if (c > 0.0) {
    if (lambda < -1.0 - c * u) return -(1.0 + lambda) / c;
    if (lambda > 1.0 - c * u) return std::max(0.0, (1.0 - lambda) / c);
    return u;
  }
  if (lambda < -1.0) return 2.0;  // any value > 1 forces the bisection upward
  if (lambda > 1.0) return 0.0;
  return u;
}

// Solves min_p ||p - pu||_1 + theta * eta * D * sum V_k p_k^2 over the simplex
// by bisection on the simplex multiplier. Exact up to bisection tolerance;
// kink coordinates land exactly on pu_k.
std::vector<double> scalarized_solve(const SelectionProblem& problem, double theta) {
  const auto& u = problem.unbiased.values();
  const double scale = problem.eta * static_cast<double>(problem.model_dimension);
  const std::size_t n = u.size();

  double lambda_lo = -2.0;
  for (std::size_t k = 0; k < n; ++k)
    lambda_lo = std::min(lambda_lo, -2.0 - 2.0 * theta * scale * problem.noise_coefficients[k] * u[k]);
  double lambda_hi = 2.0;

  std::vector<double> p(n);
  auto fill = [&](double lambda) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      p[k] = scalarized_coordinate(u[k], scale * problem.noise_coefficients[k], theta, lambda);
      sum += p[k];
    }
    return sum;
  };

  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lambda_lo + lambda_hi);
    if (fill(mid) >= 1.0)
      lambda_lo = mid;
    else
      lambda_hi = mid;
    if (lambda_hi - lambda_lo < 1e-18 * std::max(1.0, std::abs(lambda_lo))) break;
  }
  double sum = fill(lambda_lo);
  // Absorb the residual rounding error into the largest coordinate.
  const auto largest = std::max_element(p.begin(), p.end());
  *largest += 1.0 - sum;
  if (*largest < 0.0) *largest = 0.0;
  return p;
}

// The optimum of the full objective is the scalarized optimum at
// theta* = 1 / (2 (deviation + root)); iterate that fixed point and keep the
// best objective seen.
std::vector<double> refine_by_scalarization(const SelectionProblem& problem,
                                            const std::vector<double>& warm_start) {
  ObjectiveParts warm = evaluate_parts(problem, warm_start);
  if (warm.root <= 0.0) return warm_start;  // objective is 0, global minimum

  std::vector<double> best = warm_start;
  double best_objective = objective_from_parts(warm);

  double theta = 1.0 / (2.0 * (warm.deviation + warm.root));
  for (int it = 0; it < 80; ++it) {
    std::vector<double> candidate = scalarized_solve(problem, theta);
    ObjectiveParts parts = evaluate_parts(problem, candidate);
    const double objective = objective_from_parts(parts);
    if (std::isfinite(objective) && objective < best_objective) {
      best_objective = objective;
      best = std::move(candidate);
    }
    const double denom = parts.deviation + parts.root;
    if (!(denom > 0.0)) break;
    const double next_theta = 1.0 / (2.0 * denom);
    if (std::abs(next_theta - theta) <= 1e-16 * theta) break;
    theta = next_theta;
  }

  // Golden-section sweep around the fixed point guards against a stalled
  // iteration on ill-conditioned instances.
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = std::log(theta) - std::log(50.0);
  double hi = std::log(theta) + std::log(50.0);
  auto eval = [&](double log_theta) {
    std::vector<double> candidate = scalarized_solve(problem, std::exp(log_theta));
    ObjectiveParts parts = evaluate_parts(problem, candidate);
    const double objective = objective_from_parts(parts);
    if (std::isfinite(objective) && objective < best_objective) {
      best_objective = objective;
      best = std::move(candidate);
    }
    return objective;
  };
  double x1 = hi - phi * (hi - lo);
  double x2 = lo + phi * (hi - lo);
  double f1 = eval(x1);
  double f2 = eval(x2);
  for (int it = 0; it < 90; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = eval(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = eval(x2);
    }
  }
  return best;
}

}  // namespace

SelectionProbabilities::SelectionProbabilities(std::vector<double> probabilities)
    : probabilities_(std::move(probabilities)) {
  if (probabilities_.empty())
    throw std::domain_error("selection probabilities: vector must be non-empty");
  double sum = 0.0;
  for (double p : probabilities_) {
    if (!(p >= 0.0)) throw std::domain_error("selection probabilities: entries must be >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSimplexSumTolerance)
    throw std::domain_error("selection probabilities: entries must sum to 1");
}

double SelectionProbabilities::min_entry() const {
  return *std::min_element(probabilities_.begin(), probabilities_.end());
}

SelectionProblem::SelectionProblem(SelectionProbabilities unbiased_in,
                                   std::vector<double> noise_coefficients_in,
                                   std::uint64_t model_dimension_in, double eta_in)
    : unbiased(std::move(unbiased_in)),
      noise_coefficients(std::move(noise_coefficients_in)),
      model_dimension(model_dimension_in),
      eta(eta_in) {
  if (noise_coefficients.size() != unbiased.size())
    throw std::domain_error("selection problem: probability and coefficient lengths disagree");
  for (double v : noise_coefficients)
    if (!(v >= 0.0)) throw std::domain_error("selection problem: noise coefficients must be >= 0");
  if (model_dimension == 0) throw std::domain_error("selection problem: model dimension must be >= 1");
  if (!(eta >= 0.0)) throw std::domain_error("selection problem: eta must be >= 0");
}

SelectionProbabilities unbiased_probabilities(const std::vector<std::uint64_t>& dataset_sizes) {
  if (dataset_sizes.empty()) throw std::domain_error("unbiased probabilities: no clients");
  double total = 0.0;
  for (std::uint64_t size : dataset_sizes) {
    if (size < 1) throw std::domain_error("unbiased probabilities: dataset sizes must be >= 1");
    total += static_cast<double>(size);
  }
  std::vector<double> p(dataset_sizes.size());
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = static_cast<double>(dataset_sizes[k]) / total;
  return SelectionProbabilities(std::move(p));
}

double objective_value(const SelectionProblem& problem, const SelectionProbabilities& candidate) {
  if (candidate.size() != problem.size())
    throw std::domain_error("objective: candidate dimension mismatch");
  return objective_from_parts(evaluate_parts(problem, candidate.values()));
}

std::vector<double> project_to_simplex(std::vector<double> v) {
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumulative = 0.0;
  double tau = 0.0;
  std::size_t rho = 0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    const double candidate_tau = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate_tau > 0.0) {
      rho = j + 1;
      tau = candidate_tau;
    }
  }
  (void)rho;
  for (double& x : v) x = std::max(x - tau, 0.0);
  return v;
}

SolveResult solve(const SelectionProblem& problem, double tolerance,
                  std::uint64_t max_iterations) {
  if (!(tolerance > 0.0)) throw std::domain_error("solve: tolerance must be > 0");
  if (max_iterations == 0) throw std::domain_error("solve: max iterations must be >= 1");

  const auto& u = problem.unbiased.values();
  const std::size_t n = u.size();
  const double scale = problem.eta * static_cast<double>(problem.model_dimension);

  // eta = 0 (or all-zero coefficients): zero deviation is the exact optimum.
  ObjectiveParts at_unbiased = evaluate_parts(problem, u);
  if (problem.eta == 0.0 || at_unbiased.quadratic == 0.0) {
    SolveResult result{problem.unbiased, objective_from_parts(at_unbiased), true, 0, 0.0};
    result.stationarity_residual = kkt_check(problem, result.probabilities).stationarity_residual;
    return result;
  }

  std::vector<double> iterate(u);
  std::vector<double> best = iterate;
  double best_objective = objective_from_parts(at_unbiased);

  // Step scale: the subgradient norm is bounded by ~2 sqrt(N) plus the
  // quadratic slope; normalize so the first step moves O(0.1) in L2.
  double slope = 2.0 * std::sqrt(static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k)
    slope += scale * problem.noise_coefficients[k] / std::max(at_unbiased.root, 1e-300);
  const double base_step = 0.1 / std::max(slope, 1.0);

  std::uint64_t iterations = 0;
  bool converged = false;
  double window_best = best_objective;
  std::vector<double> gradient(n);

  for (std::uint64_t t = 1; t <= max_iterations; ++t) {
    ObjectiveParts parts = evaluate_parts(problem, iterate);
    const double objective = objective_from_parts(parts);
    if (objective < best_objective) {
      best_objective = objective;
      best = iterate;
    }

    const double root = std::max(parts.root, 1e-300);
    for (std::size_t k = 0; k < n; ++k) {
      const double d = iterate[k] - u[k];
      const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      gradient[k] =
          sign * (1.0 + parts.deviation / root) + scale * problem.noise_coefficients[k] * iterate[k] / root;
    }

    const double step = base_step / std::sqrt(static_cast<double>(t));
    for (std::size_t k = 0; k < n; ++k) iterate[k] -= step * gradient[k];
    iterate = project_to_simplex(std::move(iterate));
    iterations = t;

    if (t % 100 == 0) {
      if (window_best - best_objective < tolerance) {
        converged = true;
        break;
      }
      window_best = best_objective;
    }
  }

  std::vector<double> refined = refine_by_scalarization(problem, best);
  ObjectiveParts refined_parts = evaluate_parts(problem, refined);
  if (objective_from_parts(refined_parts) <= best_objective) {
    best = std::move(refined);
    best_objective = objective_from_parts(refined_parts);
    converged = true;
  }

  SolveResult result{SelectionProbabilities(best), best_objective, converged, iterations, 0.0};
  result.stationarity_residual = kkt_check(problem, result.probabilities).stationarity_residual;
  return result;
}

SelectionProbabilities oracle_solve(const SelectionProblem& problem, double grid_step) {
  if (!(grid_step > 0.0 && grid_step <= 1.0))
    throw std::domain_error("oracle: grid step must be in (0, 1]");
  const std::size_t n = problem.size();
  if (n > 4) throw std::domain_error("oracle: refuses N > 4 (exponential enumeration)");

  const std::uint64_t m = static_cast<std::uint64_t>(std::llround(std::ceil(1.0 / grid_step)));
  std::vector<double> point(n, 0.0);
  std::vector<double> best(n, 0.0);
  double best_objective = std::numeric_limits<double>::infinity();

  // Depth-first enumeration of compositions of m into n parts.
  std::vector<std::uint64_t> counts(n, 0);
  auto evaluate = [&]() {
    for (std::size_t k = 0; k < n; ++k)
      point[k] = static_cast<double>(counts[k]) / static_cast<double>(m);
    const double objective = objective_from_parts(evaluate_parts(problem, point));
    if (objective < best_objective) {
      best_objective = objective;
      best = point;
    }
  };
  // Iterative enumeration to avoid recursion on hot paths.
  std::vector<std::uint64_t> remaining(n, 0);
  std::size_t depth = 0;
  remaining[0] = m;
  counts[0] = 0;
  for (;;) {
    if (depth + 1 == n) {
      counts[depth] = remaining[depth];
      evaluate();
      if (depth == 0) break;
      --depth;
      ++counts[depth];
      continue;
    }
    if (counts[depth] > remaining[depth]) {
      if (depth == 0) break;
      --depth;
      ++counts[depth];
      continue;
    }
    remaining[depth + 1] = remaining[depth] - counts[depth];
    ++depth;
    counts[depth] = 0;
  }
  return SelectionProbabilities(best);
}

KktCertificate kkt_check(const SelectionProblem& problem, const SelectionProbabilities& candidate) {
  const auto& u = problem.unbiased.values();
  const auto& p = candidate.values();
  const std::size_t n = p.size();
  const double scale = problem.eta * static_cast<double>(problem.model_dimension);

  KktCertificate certificate;
  certificate.multipliers_mu.assign(n, 0.0);

  if (p.size() != u.size()) {
    certificate.stationarity_residual = std::numeric_limits<double>::infinity();
    return certificate;
  }

  ObjectiveParts parts = evaluate_parts(problem, p);

  double sum = 0.0;
  double negativity = 0.0;
  for (double x : p) {
    sum += x;
    negativity += std::max(0.0, -x);
  }
  certificate.primal_feasibility_residual = std::abs(sum - 1.0) + negativity;

  constexpr double kKinkTolerance = 1e-9;
  constexpr double kBoundaryTolerance = 1e-12;

  // Attainable range [lo_k, hi_k] of dF/dp_k given the subgradient freedom of
  // the L1 term at kinks. When the root vanishes the objective locally equals
  // 2 ||p - pu||_1 and the quadratic contribution drops out.
  const bool root_positive = parts.root > 0.0;
  std::vector<double> lo(n), hi(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double l1_factor = root_positive ? 1.0 + parts.deviation / parts.root : 2.0;
    const double quad_term =
        root_positive ? scale * problem.noise_coefficients[k] * p[k] / parts.root : 0.0;
    const double d = p[k] - u[k];
    if (std::abs(d) <= kKinkTolerance) {
      lo[k] = -l1_factor + quad_term;
      hi[k] = l1_factor + quad_term;
    } else {
      const double sign = d > 0.0 ? 1.0 : -1.0;
      lo[k] = hi[k] = sign * l1_factor + quad_term;
    }
  }

  // Stationarity needs grad_k + lambda = mu_k with mu_k = 0 on interior
  // coordinates and mu_k >= 0 on boundary ones. The best lambda minimizes a
  // V-shaped piecewise-linear max, available in closed form.
  double max_interior_lo = -std::numeric_limits<double>::infinity();
  double min_all_hi = std::numeric_limits<double>::infinity();
  bool any_interior = false;
  for (std::size_t k = 0; k < n; ++k) {
    min_all_hi = std::min(min_all_hi, hi[k]);
    if (p[k] > kBoundaryTolerance) {
      any_interior = true;
      max_interior_lo = std::max(max_interior_lo, lo[k]);
    }
  }
  double lambda;
  if (any_interior) {
    lambda = -(max_interior_lo + min_all_hi) / 2.0;
    certificate.stationarity_residual = std::max(0.0, (max_interior_lo - min_all_hi) / 2.0);
  } else {
    lambda = -min_all_hi;
    certificate.stationarity_residual = 0.0;
  }
  certificate.multiplier_lambda = lambda;

  double complementarity = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (p[k] > kBoundaryTolerance) continue;
    const double chosen = std::clamp(-lambda, lo[k], hi[k]);
    certificate.multipliers_mu[k] = std::max(0.0, chosen + lambda);
    complementarity = std::max(complementarity, std::abs(certificate.multipliers_mu[k] * p[k]));
  }
  certificate.complementarity_residual = complementarity;
  return certificate;
}

bool full_participation_check(const SelectionProbabilities& candidate, double floor) {
  return candidate.min_entry() > floor;
}

std::vector<std::size_t> biased_loss_selection(const std::vector<double>& local_losses,
                                               std::size_t count) {
  if (count == 0) throw std::domain_error("biased loss selection: count must be >= 1");
  if (count > local_losses.size())
    throw std::domain_error("biased loss selection: count exceeds number of clients");
  std::vector<std::size_t> order(local_losses.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return local_losses[a] > local_losses[b];
  });
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

Schedule sample_schedule(const SelectionProbabilities& probabilities, std::uint64_t rounds,
                         std::uint64_t per_round, std::uint64_t seed) {
  const auto& p = probabilities.values();
  std::vector<double> cumulative(p.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    acc += p[k];
    cumulative[k] = acc;
  }
  cumulative.back() = std::numeric_limits<double>::infinity();  // guard against rounding

  RngStream stream(derive_seed(seed, "selection.schedule"));
  Schedule schedule;
  schedule.rounds.resize(rounds);
  schedule.selection_counts.assign(p.size(), 0);
  for (std::uint64_t t = 0; t < rounds; ++t) {
    auto& chosen = schedule.rounds[t];
    chosen.reserve(per_round);
    for (std::uint64_t s = 0; s < per_round; ++s) {
      const double x = stream.next_unit();
      const std::size_t k = static_cast<std::size_t>(
          std::upper_bound(cumulative.begin(), cumulative.end(), x) - cumulative.begin());
      chosen.push_back(static_cast<int>(k));
      ++schedule.selection_counts[k];
    }
    std::sort(chosen.begin(), chosen.end());
  }
  return schedule;
}

}  // namespace dpfed::selection
