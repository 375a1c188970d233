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
#include <numeric>

#include <doctest.h>

#include "dpfed/rng.hpp"

using namespace dpfed;
using selection::SelectionProbabilities;
using selection::SelectionProblem;

namespace {

double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) out += std::abs(a[i] - b[i]);
  return out;
}

SelectionProblem random_problem(RngStream& stream, std::size_t n) {
  std::vector<std::uint64_t> sizes(n);
  for (auto& s : sizes) s = 10 + stream.next_below(990);
  std::vector<double> coefficients(n);
  for (auto& v : coefficients) v = std::exp(stream.next_uniform(std::log(0.01), std::log(100.0)));
  const auto dimension = 1 + stream.next_below(50);
  const double eta = std::exp(stream.next_uniform(std::log(0.01), std::log(10.0)));
  return SelectionProblem(selection::unbiased_probabilities(sizes), std::move(coefficients),
                          dimension, eta);
}

std::vector<double> random_simplex_point(RngStream& stream, std::size_t n) {
  // Exponential spacings give a uniform Dirichlet(1) draw.
  std::vector<double> p(n);
  double sum = 0.0;
  for (auto& x : p) {
    x = -std::log(1.0 - stream.next_unit() + 1e-300);
    sum += x;
  }
  for (auto& x : p) x /= sum;
  return p;
}

}  // namespace

TEST_CASE("simplex invariants are enforced") {
  CHECK_THROWS_AS(SelectionProbabilities({0.5, 0.6}), std::domain_error);
  CHECK_THROWS_AS(SelectionProbabilities({1.5, -0.5}), std::domain_error);
  CHECK_THROWS_AS(SelectionProbabilities(std::vector<double>{}), std::domain_error);
  CHECK_NOTHROW(SelectionProbabilities({0.25, 0.75}));
}

TEST_CASE("unbiased probabilities") {
  const auto p = selection::unbiased_probabilities({10, 30, 60});
  CHECK(p[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(p[2] == doctest::Approx(0.6).epsilon(1e-15));
  const auto even = selection::unbiased_probabilities({5, 5});
  CHECK(even[0] == 0.5);
  CHECK(even[1] == 0.5);
  const auto single = selection::unbiased_probabilities({1});
  CHECK(single[0] == 1.0);
  CHECK_THROWS_AS(selection::unbiased_probabilities({}), std::domain_error);
  CHECK_THROWS_AS(selection::unbiased_probabilities({0, 5}), std::domain_error);
}

TEST_CASE("objective value") {
  SUBCASE("L1 term vanishes at the unbiased point") {
    const auto p_u = selection::unbiased_probabilities({10, 30, 60});
    SelectionProblem problem(p_u, {1.0, 2.0, 3.0}, 4, 0.7);
    double quadratic = 0.0;
    for (std::size_t k = 0; k < 3; ++k)
      quadratic += 0.7 * 4.0 * problem.noise_coefficients[k] * p_u[k] * p_u[k];
    CHECK(selection::objective_value(problem, p_u) ==
          doctest::Approx(std::sqrt(quadratic)).epsilon(1e-14));
  }
  SUBCASE("eta zero makes the unbiased point a global zero") {
    const auto p_u = selection::unbiased_probabilities({1, 2, 3});
    SelectionProblem problem(p_u, {5.0, 5.0, 5.0}, 10, 0.0);
    CHECK(selection::objective_value(problem, p_u) == 0.0);
  }
  SUBCASE("hand-computed two-client value") {
    const SelectionProbabilities p_u({0.5, 0.5});
    SelectionProblem problem(p_u, {1.0, 1.0}, 1, 4.0);
    CHECK(selection::objective_value(problem, p_u) ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  }
  SUBCASE("dimension mismatch") {
    SelectionProblem problem(SelectionProbabilities({0.5, 0.5}), {1.0, 1.0}, 1, 1.0);
    CHECK_THROWS_AS(selection::objective_value(problem, SelectionProbabilities({1.0})),
                    std::domain_error);
  }
}

TEST_CASE("simplex projection") {
  const auto identity = selection::project_to_simplex({0.2, 0.3, 0.5});
  CHECK(identity[0] == doctest::Approx(0.2));
  CHECK(identity[2] == doctest::Approx(0.5));
  const auto clipped = selection::project_to_simplex({2.0, 0.0});
  CHECK(clipped[0] == doctest::Approx(1.0));
  CHECK(clipped[1] == doctest::Approx(0.0));
  RngStream stream(11);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> v(3);
    for (auto& x : v) x = stream.next_uniform(-2.0, 2.0);
    const auto p = selection::project_to_simplex(v);
    double sum = 0.0;
    for (double x : p) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("solve: eta zero returns the unbiased point") {
  const auto p_u = selection::unbiased_probabilities({7, 11, 23, 59});
  SelectionProblem problem(p_u, {1.0, 4.0, 9.0, 16.0}, 12, 0.0);
  const auto result = selection::solve(problem);
  CHECK(result.converged);
  CHECK(l1_distance(result.probabilities.values(), p_u.values()) < 1e-9);
}

TEST_CASE("solve: large eta approaches the quadratic-term minimizer") {
  // min p1^2 V1 + p2^2 V2 on the simplex with V = [1, 4] sits at [0.8, 0.2].
  const SelectionProbabilities p_u({0.5, 0.5});
  SelectionProblem problem(p_u, {1.0, 4.0}, 1, 1e6);
  const auto result = selection::solve(problem);
  CHECK(result.converged);
  CHECK(std::abs(result.probabilities[0] - 0.8) < 1e-3);
  CHECK(std::abs(result.probabilities[1] - 0.2) < 1e-3);
}

TEST_CASE("solve matches the lattice oracle on a fixed three-client instance") {
  const SelectionProbabilities p_u({0.2, 0.3, 0.5});
  SelectionProblem problem(p_u, {1.0, 10.0, 100.0}, 10, 1.0);
  const auto result = selection::solve(problem);
  const auto oracle = selection::oracle_solve(problem, 5e-3);
  CHECK(result.converged);
  CHECK(selection::objective_value(problem, result.probabilities) <=
        selection::objective_value(problem, oracle) + 1e-6);
}

TEST_CASE("oracle refuses large instances and honors symmetry") {
  const SelectionProbabilities p_u({0.5, 0.5});
  SelectionProblem symmetric(p_u, {3.0, 3.0}, 2, 1.0);
  const auto best = selection::oracle_solve(symmetric, 1e-3);
  CHECK(best[0] == doctest::Approx(0.5).epsilon(1e-9));

  SelectionProblem zero_eta(p_u, {1.0, 9.0}, 2, 0.0);
  const auto at_pu = selection::oracle_solve(zero_eta, 1e-3);
  CHECK(l1_distance(at_pu.values(), p_u.values()) < 1e-9);

  SelectionProblem big(SelectionProbabilities({0.2, 0.2, 0.2, 0.2, 0.2}),
                       {1.0, 1.0, 1.0, 1.0, 1.0}, 1, 1.0);
  CHECK_THROWS_AS(selection::oracle_solve(big, 0.1), std::domain_error);
}

TEST_CASE("solve vs oracle on random small instances") {
  RngStream stream(101);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 2 + stream.next_below(2);
    const auto problem = random_problem(stream, n);
    const auto result = selection::solve(problem);
    const auto oracle = selection::oracle_solve(problem, n == 2 ? 1e-3 : 5e-3);
    CHECK(result.converged);
    CHECK(selection::objective_value(problem, result.probabilities) <=
          selection::objective_value(problem, oracle) + 1e-4);
  }
}

TEST_CASE("kkt certificate") {
  SUBCASE("solver output on a random five-client problem is stationary") {
    RngStream stream(321);
    const auto problem = random_problem(stream, 5);
    const auto result = selection::solve(problem);
    const auto certificate = selection::kkt_check(problem, result.probabilities);
    CHECK(certificate.stationarity_residual < 1e-6);
    CHECK(certificate.primal_feasibility_residual < 1e-9);
    CHECK(certificate.complementarity_residual < 1e-9);
  }
  SUBCASE("a vertex is never optimal under heterogeneous noise") {
    const SelectionProbabilities p_u({0.25, 0.25, 0.25, 0.25});
    SelectionProblem problem(p_u, {1.0, 2.0, 4.0, 8.0}, 3, 2.0);
    const auto certificate =
        selection::kkt_check(problem, SelectionProbabilities({1.0, 0.0, 0.0, 0.0}));
    CHECK(certificate.stationarity_residual > 1e-3);
  }
  SUBCASE("eta zero at the unbiased point is exactly stationary") {
    const auto p_u = selection::unbiased_probabilities({2, 3, 5});
    SelectionProblem problem(p_u, {1.0, 1.0, 1.0}, 1, 0.0);
    const auto certificate = selection::kkt_check(problem, p_u);
    CHECK(certificate.stationarity_residual == 0.0);
    CHECK(certificate.multiplier_lambda == 0.0);
    for (double mu : certificate.multipliers_mu) CHECK(mu == 0.0);
  }
}

TEST_CASE("full participation check") {
  CHECK(selection::full_participation_check(SelectionProbabilities({0.5, 0.5}), 1e-9));
  CHECK_FALSE(selection::full_participation_check(SelectionProbabilities({1.0, 0.0}), 1e-9));
  RngStream stream(55);
  for (int i = 0; i < 50; ++i) {
    const auto problem = random_problem(stream, 2 + stream.next_below(30));
    const auto result = selection::solve(problem);
    CHECK(selection::full_participation_check(result.probabilities, 1e-9));
  }
}

TEST_CASE("biased loss selection") {
  CHECK(selection::biased_loss_selection({3.0, 1.0, 2.0}, 2) == std::vector<std::size_t>{0, 2});
  CHECK(selection::biased_loss_selection({1.0, 1.0, 1.0}, 1) == std::vector<std::size_t>{0});
  CHECK(selection::biased_loss_selection({0.5, 0.9, 0.9, 0.1}, 2) ==
        std::vector<std::size_t>{1, 2});
  CHECK_THROWS_AS(selection::biased_loss_selection({1.0}, 2), std::domain_error);
  CHECK_THROWS_AS(selection::biased_loss_selection({1.0}, 0), std::domain_error);
}

TEST_CASE("sample schedule") {
  SUBCASE("degenerate distribution selects one client everywhere") {
    const auto schedule = selection::sample_schedule(SelectionProbabilities({1.0}), 7, 3, 42);
    CHECK(schedule.selection_counts[0] == 21);
    for (const auto& round : schedule.rounds)
      for (int k : round) CHECK(k == 0);
  }
  SUBCASE("law of large numbers at a fixed seed") {
    const auto schedule =
        selection::sample_schedule(SelectionProbabilities({0.5, 0.5}), 1000, 100, 9);
    const double share = static_cast<double>(schedule.selection_counts[0]) / 1e5;
    CHECK(std::abs(share - 0.5) < 0.01);
  }
  SUBCASE("determinism and count conservation") {
    const SelectionProbabilities p({0.1, 0.2, 0.3, 0.4});
    const auto a = selection::sample_schedule(p, 50, 7, 1234);
    const auto b = selection::sample_schedule(p, 50, 7, 1234);
    CHECK(a.rounds == b.rounds);
    CHECK(a.selection_counts == b.selection_counts);
    const std::uint64_t total =
        std::accumulate(a.selection_counts.begin(), a.selection_counts.end(), std::uint64_t{0});
    CHECK(total == 50 * 7);
  }
  SUBCASE("zero-probability clients are never drawn") {
    const auto schedule =
        selection::sample_schedule(SelectionProbabilities({0.0, 1.0, 0.0}), 20, 5, 3);
    CHECK(schedule.selection_counts[0] == 0);
    CHECK(schedule.selection_counts[1] == 100);
    CHECK(schedule.selection_counts[2] == 0);
  }
}

TEST_CASE("objective is convex along random chords") {
  // Executable convexity: 1e4 random (problem, x, y, alpha) triples.
  RngStream stream(2024);
  std::size_t checked = 0;
  while (checked < 10000) {
    const std::size_t n = 2 + stream.next_below(5);
    const auto problem = random_problem(stream, n);
    for (int rep = 0; rep < 10 && checked < 10000; ++rep, ++checked) {
      const auto x = random_simplex_point(stream, n);
      const auto y = random_simplex_point(stream, n);
      const double alpha = stream.next_unit();
      std::vector<double> mix(n);
      for (std::size_t k = 0; k < n; ++k) mix[k] = alpha * x[k] + (1.0 - alpha) * y[k];
      // Normalize away the last-ulp drift so the simplex check passes.
      double sum = 0.0;
      for (double v : mix) sum += v;
      for (double& v : mix) v /= sum;
      const double fx = selection::objective_value(problem, SelectionProbabilities(x));
      const double fy = selection::objective_value(problem, SelectionProbabilities(y));
      const double fmix = selection::objective_value(problem, SelectionProbabilities(mix));
      CHECK(fmix <= alpha * fx + (1.0 - alpha) * fy + 1e-10);
    }
  }
}

TEST_CASE("deviation from the unbiased point grows with eta") {
  RngStream stream(77);
  std::vector<std::uint64_t> sizes(8);
  for (auto& s : sizes) s = 50 + stream.next_below(200);
  std::vector<double> coefficients(8);
  for (auto& v : coefficients) v = std::exp(stream.next_uniform(std::log(0.1), std::log(10.0)));
  const auto p_u = selection::unbiased_probabilities(sizes);

  double previous = -1.0;
  for (double eta : {0.0, 0.1, 1.0, 10.0, 100.0}) {
    SelectionProblem problem(p_u, coefficients, 16, eta);
    const auto result = selection::solve(problem);
    const double deviation = l1_distance(result.probabilities.values(), p_u.values());
    CHECK(previous <= deviation + 1e-6);
    previous = deviation;
  }
}

TEST_CASE("optimal probability is non-increasing in the noise coefficient at equal sizes") {
  // All clients share the dataset size; V strictly increases with the index.
  const std::size_t n = 12;
  const auto p_u = selection::unbiased_probabilities(std::vector<std::uint64_t>(n, 100));
  std::vector<double> coefficients(n);
  for (std::size_t k = 0; k < n; ++k) coefficients[k] = 0.5 * std::pow(1.8, static_cast<double>(k));
  SelectionProblem problem(p_u, coefficients, 8, 5.0);
  const auto result = selection::solve(problem);
  for (std::size_t k = 0; k + 1 < n; ++k)
    CHECK(result.probabilities[k] >= result.probabilities[k + 1] - 1e-9);
}
