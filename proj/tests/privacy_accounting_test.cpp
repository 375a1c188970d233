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

#include <chrono>
#include <cmath>

#include <doctest.h>

#include "dpfed/rng.hpp"
#include "oracles.hpp"

using namespace dpfed;
using privacy::PrivacyBudget;

namespace {
// Golden value for V(|M|=100, eps=1, delta=1e-5, r=0.1), frozen from a
// high-precision evaluation of the noise-coefficient formula.
constexpr double kGoldenV100 = 0.097711574259279163;
}  // namespace

TEST_CASE("gaussian mechanism variance") {
  const PrivacyBudget budget{1.0, 1e-5};
  // 2 log(1.25/1e-5) = 2 log(125000), high-precision value frozen.
  CHECK(gaussian_mechanism_variance(1.0, budget) ==
        doctest::Approx(23.472138032568876).epsilon(1e-14));
  // Quadratic sensitivity scaling and inverse-quadratic epsilon scaling are
  // exact (power-of-two factors).
  CHECK(gaussian_mechanism_variance(0.5, budget) == 0.25 * gaussian_mechanism_variance(1.0, budget));
  CHECK(gaussian_mechanism_variance(1.0, PrivacyBudget{2.0, 1e-5}) ==
        0.25 * gaussian_mechanism_variance(1.0, budget));

  CHECK_THROWS_AS(gaussian_mechanism_variance(0.0, budget), std::domain_error);
  CHECK_THROWS_AS(gaussian_mechanism_variance(-1.0, budget), std::domain_error);
  CHECK_THROWS_AS(gaussian_mechanism_variance(1.0, PrivacyBudget{0.0, 1e-5}), std::domain_error);
  CHECK_THROWS_AS(gaussian_mechanism_variance(1.0, PrivacyBudget{1.0, 0.0}), std::domain_error);
  CHECK_THROWS_AS(gaussian_mechanism_variance(1.0, PrivacyBudget{1.0, 1.5}), std::domain_error);
}

TEST_CASE("strong composition variance") {
  const PrivacyBudget unit{1.0, 1.0};
  // 8 log(e + 1), frozen from a high-precision evaluation.
  const double base = strong_composition_variance(1.0, unit, 1);
  CHECK(base == doctest::Approx(10.506093500145783).epsilon(1e-14));
  CHECK(strong_composition_variance(1.0, unit, 10) == doctest::Approx(10.0 * base).epsilon(1e-15));
  CHECK(strong_composition_variance(2.0, unit, 1) == 4.0 * base);
  CHECK_THROWS_AS(strong_composition_variance(1.0, unit, 0), std::domain_error);
}

TEST_CASE("amplified epsilon") {
  CHECK(privacy::amplified_epsilon(1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  // log(1 + 10 (e^0.5 - 1)), frozen from a high-precision evaluation.
  CHECK(privacy::amplified_epsilon(0.5, 0.1) ==
        doctest::Approx(2.0131965930227991).epsilon(1e-14));
  // First-order regime: result -> eps / r without cancellation.
  CHECK(std::abs(privacy::amplified_epsilon(1e-8, 0.1) - 1e-7) < 1e-12);
  // Large-epsilon branch stays finite and matches eps - log(r) asymptotics.
  const double big = privacy::amplified_epsilon(1e6, 0.1);
  CHECK(std::isfinite(big));
  CHECK(big == doctest::Approx(1e6 - std::log(0.1)).epsilon(1e-12));
  CHECK_THROWS_AS(privacy::amplified_epsilon(1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(privacy::amplified_epsilon(1.0, 1.5), std::domain_error);
  CHECK_THROWS_AS(privacy::amplified_epsilon(0.0, 0.5), std::domain_error);
}

TEST_CASE("noise coefficient golden and scalings") {
  const PrivacyBudget budget{1.0, 1e-5};
  const double x1 = privacy::compute_noise_coefficient(100, budget, 0.1);
  CHECK(x1 == doctest::Approx(kGoldenV100).epsilon(1e-13));
  // |M|^-2 scaling is exact.
  CHECK(privacy::compute_noise_coefficient(200, budget, 0.1) == x1 / 4.0);
  // Smaller budget -> strictly more noise.
  CHECK(privacy::compute_noise_coefficient(100, PrivacyBudget{0.5, 1e-5}, 0.1) >
        privacy::compute_noise_coefficient(100, PrivacyBudget{2.0, 1e-5}, 0.1));
  CHECK_THROWS_AS(privacy::compute_noise_coefficient(0, budget, 0.1), std::domain_error);
}

TEST_CASE("noise coefficient equals the two-lemma composition oracle on a random grid") {
  // 1000 points over eps in [1e-3, 20], delta in [1e-8, 1e-2], r in [0.01, 1],
  // |M| in [10, 1e6]; relative tolerance 1e-12, no NaN/Inf, and the whole
  // sweep stays under a second.
  RngStream stream(20260810);
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double eps = std::exp(stream.next_uniform(std::log(1e-3), std::log(20.0)));
    const double delta = std::exp(stream.next_uniform(std::log(1e-8), std::log(1e-2)));
    const double r = std::exp(stream.next_uniform(std::log(0.01), std::log(1.0)));
    const auto m = static_cast<std::uint64_t>(
        std::exp(stream.next_uniform(std::log(10.0), std::log(1e6))));
    const double got = privacy::compute_noise_coefficient(m, PrivacyBudget{eps, delta}, r);
    REQUIRE(std::isfinite(got));
    REQUIRE(got > 0.0);
    worst = std::max(worst, oracles::relative_error(got, oracles::noise_coefficient(m, eps, delta, r)));
  }
  const auto elapsed = std::chrono::steady_clock::now() - start;
  CHECK(worst < 1e-12);
  CHECK(std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count() < 1000);
}

TEST_CASE("noise coefficient monotonicity properties") {
  RngStream stream(7);
  for (int i = 0; i < 200; ++i) {
    const double eps = std::exp(stream.next_uniform(std::log(1e-2), std::log(10.0)));
    const double delta = std::exp(stream.next_uniform(std::log(1e-7), std::log(1e-3)));
    const double r = stream.next_uniform(0.05, 1.0);
    const auto m = static_cast<std::uint64_t>(stream.next_uniform(10, 10000));
    const double v = privacy::compute_noise_coefficient(m, PrivacyBudget{eps, delta}, r);
    CHECK(v > 0.0);
    CHECK(privacy::compute_noise_coefficient(m, PrivacyBudget{eps * 1.1, delta}, r) < v);
    CHECK(privacy::compute_noise_coefficient(m * 2, PrivacyBudget{eps, delta}, r) < v);
  }
}

TEST_CASE("per-client sigma squared") {
  const auto profile = privacy::make_client_profile(0, 100, PrivacyBudget{1.0, 1e-5}, 0.1);
  CHECK(profile.noise_coefficient == doctest::Approx(kGoldenV100).epsilon(1e-13));

  SUBCASE("unselected client adds no noise") {
    CHECK(privacy::per_client_sigma_squared(profile, 0, 2, 1.0) == 0.0);
  }
  SUBCASE("product form V * T_k * T_l * C^2") {
    CHECK(privacy::per_client_sigma_squared(profile, 5, 2, 1.0) ==
          doctest::Approx(10.0 * profile.noise_coefficient).epsilon(1e-15));
  }
  SUBCASE("doubling the clip threshold quadruples the variance") {
    const double at1 = privacy::per_client_sigma_squared(profile, 3, 4, 1.0);
    CHECK(privacy::per_client_sigma_squared(profile, 3, 4, 2.0) == 4.0 * at1);
  }
  SUBCASE("linearity in T_k and T_l") {
    const double base = privacy::per_client_sigma_squared(profile, 1, 1, 1.0);
    CHECK(privacy::per_client_sigma_squared(profile, 7, 1, 1.0) == doctest::Approx(7.0 * base));
    CHECK(privacy::per_client_sigma_squared(profile, 1, 6, 1.0) == doctest::Approx(6.0 * base));
  }
  SUBCASE("invalid clip") {
    CHECK_THROWS_AS(privacy::per_client_sigma_squared(profile, 1, 1, 0.0), std::domain_error);
  }
}

TEST_CASE("client profile derives its coefficient") {
  const auto profile = privacy::make_client_profile(3, 512, PrivacyBudget{0.7, 1e-6}, 0.25);
  CHECK(profile.noise_coefficient ==
        privacy::compute_noise_coefficient(512, profile.budget, 0.25));
  CHECK_THROWS_AS(privacy::make_client_profile(0, 0, PrivacyBudget{1.0, 1e-5}, 0.1),
                  std::domain_error);
  CHECK_THROWS_AS(privacy::make_client_profile(0, 10, PrivacyBudget{-1.0, 1e-5}, 0.1),
                  std::domain_error);
  CHECK_THROWS_AS(privacy::make_client_profile(0, 10, PrivacyBudget{1.0, 1e-5}, 0.0),
                  std::domain_error);
}
