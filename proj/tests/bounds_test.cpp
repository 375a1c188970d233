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

#include <doctest.h>

#include "dpfed/privacy_accounting.hpp"
#include "dpfed/rng.hpp"
#include "oracles.hpp"

using namespace dpfed;
using bounds::BoundInputs;
using bounds::ErrorTerms;
using selection::SelectionProbabilities;

namespace {

// The fixed instance used for the frozen golden values: L=1, mu=0.5, B1=1,
// B2=0, C=1, D=1, T=1000, beta=3, gamma=1, Gamma=1, initial gap 0.1, initial
// distance 0.2, clipping gap 0.05, biased clipping gap 0.03, and G_DP from a
// two-client profile (|M|={100,200}, eps={0.5,2}, delta=1e-5, r=0.1,
// p_s=[0.6,0.4], p_u=[1/3,2/3]).
struct GoldenFixture {
  BoundInputs inputs;
  ErrorTerms terms;
};

GoldenFixture golden_fixture() {
  GoldenFixture fixture;
  fixture.inputs.smoothness_L = 1.0;
  fixture.inputs.strong_convexity_mu = 0.5;
  fixture.inputs.gradient_bound_B1 = 1.0;
  fixture.inputs.dissimilarity_B2 = 0.0;
  fixture.inputs.clip_C = 1.0;
  fixture.inputs.model_dimension_D = 1;
  fixture.inputs.total_iterations_T = 1000;
  fixture.inputs.stepsize_beta = 3.0;
  fixture.inputs.stepsize_gamma = 1.0;
  fixture.inputs.gamma_tradeoff_Gamma = 1.0;
  fixture.inputs.initial_gap = 0.1;
  fixture.inputs.initial_distance = 0.2;
  fixture.inputs.clipping_gap_estimate = 0.05;

  const SelectionProbabilities p_s({0.6, 0.4});
  const SelectionProbabilities p_u({100.0 / 300.0, 200.0 / 300.0});
  const std::vector<double> coefficients = {
      privacy::compute_noise_coefficient(100, privacy::PrivacyBudget{0.5, 1e-5}, 0.1),
      privacy::compute_noise_coefficient(200, privacy::PrivacyBudget{2.0, 1e-5}, 0.1)};
  fixture.terms.g_select_clip = bounds::g_select_clip(p_s, p_u, 0.05, 0.0, 1.0);
  fixture.terms.g_dp = bounds::g_dp(p_s, coefficients, 1);
  fixture.terms.g_b_clip = bounds::g_b_clip(0.03, 0.0, 1.0);
  return fixture;
}

BoundInputs random_inputs(RngStream& stream) {
  BoundInputs inputs;
  inputs.smoothness_L = stream.next_uniform(0.1, 10.0);
  inputs.strong_convexity_mu = stream.next_uniform(0.05, 2.0);
  inputs.gradient_bound_B1 = stream.next_uniform(0.1, 5.0);
  inputs.dissimilarity_B2 = stream.next_uniform(0.0, 2.0);
  inputs.clip_C = stream.next_uniform(0.1, 4.0);
  inputs.model_dimension_D = 1 + stream.next_below(500);
  inputs.total_iterations_T = 1 + stream.next_below(100000);
  inputs.strong_convexity_mu = stream.next_uniform(0.05, 2.0);
  // Keep the Theorem 1 stepsize precondition satisfied.
  inputs.stepsize_beta = inputs.gradient_bound_B1 / (inputs.clip_C * inputs.strong_convexity_mu) *
                         stream.next_uniform(1.01, 3.0);
  inputs.stepsize_gamma = stream.next_uniform(1.0, 10.0);
  inputs.gamma_tradeoff_Gamma = stream.next_uniform(0.1, 5.0);
  inputs.initial_gap = stream.next_uniform(0.0, 10.0);
  inputs.initial_distance = stream.next_uniform(0.0, 10.0);
  inputs.clipping_gap_estimate = stream.next_uniform(0.0, 1.0);
  return inputs;
}

ErrorTerms random_terms(RngStream& stream) {
  ErrorTerms terms;
  terms.g_select_clip = stream.next_uniform(0.0, 3.0);
  terms.g_dp = std::exp(stream.next_uniform(std::log(1e-6), std::log(10.0)));
  terms.g_b_clip = stream.next_uniform(0.0, 2.0);
  return terms;
}

}  // namespace

TEST_CASE("error term helpers") {
  SUBCASE("g_select_clip") {
    const SelectionProbabilities half({0.5, 0.5});
    CHECK(bounds::g_select_clip(half, half, 0.0, 0.0, 1.0) == 0.0);
    CHECK(bounds::g_select_clip(SelectionProbabilities({1.0, 0.0}), half, 0.0, 0.0, 1.0) ==
          doctest::Approx(1.0));
    CHECK(bounds::g_select_clip(SelectionProbabilities({0.6, 0.4}), half, 0.1, 1.0, 2.0) ==
          doctest::Approx(0.8).epsilon(1e-14));
    CHECK_THROWS_AS(
        bounds::g_select_clip(SelectionProbabilities({1.0}), half, 0.0, 0.0, 1.0),
        std::domain_error);
  }
  SUBCASE("g_dp") {
    const SelectionProbabilities half({0.5, 0.5});
    CHECK(bounds::g_dp(half, {0.0, 0.0}, 5) == 0.0);
    CHECK(bounds::g_dp(half, {1.0, 1.0}, 2) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(bounds::g_dp(SelectionProbabilities({0.8, 0.2}), {1.0, 4.0}, 1) ==
          doctest::Approx(0.8).epsilon(1e-14));
    CHECK_THROWS_AS(bounds::g_dp(half, {1.0}, 1), std::domain_error);
  }
  SUBCASE("g_b_clip") {
    CHECK(bounds::g_b_clip(0.03, 0.0, 1.0) == 0.03);
    CHECK(bounds::g_b_clip(0.0, 2.0, 4.0) == 0.5);
  }
}

TEST_CASE("theorem 1 golden value and reductions") {
  const GoldenFixture fixture = golden_fixture();
  // Frozen from an independent high-precision evaluation of the bound.
  CHECK(oracles::relative_error(bounds::theorem1_bound(fixture.inputs, fixture.terms),
                                5.759217908811619315L) < 1e-10);

  SUBCASE("zero-error degenerate case reduces to the Z middle term") {
    BoundInputs inputs = fixture.inputs;
    inputs.initial_gap = 0.0;
    inputs.initial_distance = 0.0;
    inputs.clipping_gap_estimate = 0.0;
    const ErrorTerms zero;
    const double T = static_cast<double>(inputs.total_iterations_T);
    const double expected =
        std::sqrt(0.5 * (1.0 + 9.0 * inputs.gamma_tradeoff_Gamma) * inputs.stepsize_beta *
                  inputs.stepsize_beta * T * inputs.smoothness_L / (inputs.stepsize_gamma + T)) /
        std::sqrt(inputs.stepsize_gamma + T);
    CHECK(bounds::theorem1_bound(inputs, zero) == doctest::Approx(expected).epsilon(1e-14));
  }
  SUBCASE("monotone in the DP error") {
    ErrorTerms bumped = fixture.terms;
    bumped.g_dp *= 2.0;
    CHECK(bounds::theorem1_bound(fixture.inputs, bumped) >=
          bounds::theorem1_bound(fixture.inputs, fixture.terms));
  }
  SUBCASE("stepsize precondition is named") {
    BoundInputs bad = fixture.inputs;
    bad.stepsize_beta = 0.5;  // B1/(C mu) = 2 here
    CHECK_THROWS_WITH_AS(bounds::theorem1_bound(bad, fixture.terms),
                         doctest::Contains("beta <= B1/(C*mu)"), std::domain_error);
  }
}

TEST_CASE("theorem 2 golden value and reductions") {
  const GoldenFixture fixture = golden_fixture();
  CHECK(oracles::relative_error(bounds::theorem2_bound(fixture.inputs, fixture.terms),
                                1.5382128055645218L) < 1e-10);

  SUBCASE("zero-error reduction") {
    BoundInputs inputs = fixture.inputs;
    inputs.initial_gap = 0.0;
    const ErrorTerms zero;
    const double T = static_cast<double>(inputs.total_iterations_T);
    CHECK(bounds::theorem2_bound(inputs, zero) ==
          doctest::Approx(std::sqrt(inputs.smoothness_L * inputs.gradient_bound_B1 *
                                    inputs.gradient_bound_B1 / (2.0 * std::sqrt(T))))
              .epsilon(1e-14));
  }
  SUBCASE("vanishing part scales as T^(-1/4)") {
    BoundInputs inputs = fixture.inputs;
    inputs.initial_gap = 0.0;
    const ErrorTerms zero;  // no noise: the non-vanishing part is absent
    inputs.total_iterations_T = 1000;
    const double at_T = bounds::theorem2_bound(inputs, zero);
    inputs.total_iterations_T = 16000;
    CHECK(bounds::theorem2_bound(inputs, zero) == doctest::Approx(0.5 * at_T).epsilon(1e-12));
  }
}

TEST_CASE("bound evaluators match an independent re-evaluation on random inputs") {
  RngStream stream(90210);
  for (int i = 0; i < 100; ++i) {
    const BoundInputs inputs = random_inputs(stream);
    const ErrorTerms terms = random_terms(stream);
    CHECK(oracles::relative_error(bounds::theorem1_bound(inputs, terms),
                                  oracles::theorem1(inputs, terms)) < 1e-10);
    CHECK(oracles::relative_error(bounds::theorem2_bound(inputs, terms),
                                  oracles::theorem2(inputs, terms)) < 1e-10);
  }
}

TEST_CASE("both bounds are monotone in the error terms") {
  RngStream stream(4242);
  for (int i = 0; i < 50; ++i) {
    const BoundInputs inputs = random_inputs(stream);
    const ErrorTerms terms = random_terms(stream);
    ErrorTerms more_select = terms;
    more_select.g_select_clip += 0.1;
    ErrorTerms more_dp = terms;
    more_dp.g_dp += 0.1;
    CHECK(bounds::theorem1_bound(inputs, more_select) >= bounds::theorem1_bound(inputs, terms));
    CHECK(bounds::theorem1_bound(inputs, more_dp) >= bounds::theorem1_bound(inputs, terms));
    CHECK(bounds::theorem2_bound(inputs, more_select) >= bounds::theorem2_bound(inputs, terms));
    CHECK(bounds::theorem2_bound(inputs, more_dp) >= bounds::theorem2_bound(inputs, terms));
  }
}

TEST_CASE("corollary 2 profile") {
  BoundInputs inputs;
  inputs.smoothness_L = 1.0;
  inputs.gradient_bound_B1 = 1.0;
  inputs.initial_gap = 9.5;  // R = 9.5 + 0.5 = 10

  SUBCASE("no noise: the bound decreases monotonically") {
    ErrorTerms terms;
    terms.g_select_clip = 0.1;
    terms.g_dp = 0.0;
    const auto profile = bounds::corollary2_profile(inputs, terms, {2, 4, 8, 64, 1024, 65536});
    for (const auto& point : profile) CHECK(point.derivative_sign < 0);
    for (std::size_t i = 0; i + 1 < profile.size(); ++i)
      CHECK(profile[i + 1].bound < profile[i].bound);
  }
  SUBCASE("growing term dominating from T = 1 keeps the derivative positive") {
    // R cannot be exactly zero through valid inputs (R >= L B1^2 / 2 > 0);
    // with initial_gap = 0 and g_dp > 1 the growing term already wins at
    // T = 1, and it decays strictly slower, so the sign never flips back.
    BoundInputs dominated = inputs;
    dominated.initial_gap = 0.0;
    ErrorTerms terms;
    terms.g_select_clip = 0.0;
    terms.g_dp = 4.0;
    const auto profile = bounds::corollary2_profile(dominated, terms, {1, 2, 4, 1024, 1 << 20});
    for (const auto& point : profile) CHECK(point.derivative_sign > 0);
  }
  SUBCASE("constructed fixture dips then rises with exactly one sign change") {
    ErrorTerms terms;
    terms.g_select_clip = 0.1;  // A = 0.01
    terms.g_dp = 1e-4;          // Q = 2e-4
    std::vector<std::uint64_t> grid;
    for (std::uint64_t T = 2; T <= (1ULL << 30); T *= 2) grid.push_back(T);
    CHECK(bounds::corollary2_derivative(inputs, terms, 2.0) < 0.0);
    const auto profile = bounds::corollary2_profile(inputs, terms, grid);
    CHECK(bounds::count_sign_changes(profile) == 1);
  }
  SUBCASE("analytic derivative matches central differences away from small T") {
    RngStream stream(606);
    for (int i = 0; i < 50; ++i) {
      ErrorTerms terms;
      terms.g_select_clip = stream.next_uniform(0.0, 2.0);
      terms.g_dp = std::exp(stream.next_uniform(std::log(1e-5), std::log(1.0)));
      BoundInputs in = inputs;
      in.smoothness_L = stream.next_uniform(0.2, 5.0);
      in.gradient_bound_B1 = stream.next_uniform(0.2, 5.0);
      in.initial_gap = stream.next_uniform(0.0, 20.0);
      const double T = stream.next_uniform(4.0, 1e6);
      const double h = 1e-4 * T;
      const double numeric = (bounds::corollary2_value(in, terms, T + h) -
                              bounds::corollary2_value(in, terms, T - h)) /
                             (2.0 * h);
      const double analytic = bounds::corollary2_derivative(in, terms, T);
      CHECK(oracles::relative_error(numeric, analytic) < 1e-6);
    }
  }
  SUBCASE("grid must be ascending") {
    ErrorTerms terms;
    CHECK_THROWS_AS(bounds::corollary2_profile(inputs, terms, {4, 2}), std::domain_error);
  }
}

TEST_CASE("empirical clipping gap") {
  using learning::Architecture;
  using learning::Model;
  using learning::ModelSpec;

  ModelSpec spec;
  spec.architecture = Architecture::kQuadratic;
  spec.feature_dim = 2;
  Model model = learning::make_model(spec);  // w = 0, gradient = -x

  data::Dataset dataset;
  dataset.feature_dim = 2;
  dataset.num_classes = 1;

  SUBCASE("no clipping active anywhere gives a zero gap") {
    dataset.features = {0.1, 0.0, 0.0, 0.2, -0.3, 0.1};
    dataset.labels = {0, 0, 0};
    const std::vector<std::vector<std::size_t>> clients = {{0, 1}, {2}};
    const auto gap = bounds::empirical_clipping_gap(model, dataset, clients, 1.0,
                                                    SelectionProbabilities({0.5, 0.5}));
    CHECK(gap.unbiased_gap == 0.0);
    CHECK(gap.biased_gap == 0.0);
  }
  SUBCASE("uniform clipping ratio cancels") {
    // Single client, single example with gradient norm 2C and ||grad F|| = 2C.
    dataset.features = {-2.0, 0.0};
    dataset.labels = {0};
    const std::vector<std::vector<std::size_t>> clients = {{0}};
    const auto gap = bounds::empirical_clipping_gap(model, dataset, clients, 1.0,
                                                    SelectionProbabilities({1.0}));
    CHECK(gap.unbiased_gap == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("hand-computed two-example fixture") {
    // Gradient norms {C/2, 2C} with ||grad F|| = C: q = {1, 2}, so the
    // client's entry is mean(|q - 1|) = 0.5.
    const double b = std::sqrt(3.9375);
    dataset.features = {-0.5, 0.0, 0.25, -b};
    dataset.labels = {0, 0};
    const std::vector<std::vector<std::size_t>> clients = {{0, 1}};
    const auto gap = bounds::empirical_clipping_gap(model, dataset, clients, 1.0,
                                                    SelectionProbabilities({1.0}));
    CHECK(gap.unbiased_gap == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(gap.biased_gap == doctest::Approx(0.5).epsilon(1e-9));
  }
  SUBCASE("invalid clip threshold") {
    dataset.features = {0.1, 0.0};
    dataset.labels = {0};
    const std::vector<std::vector<std::size_t>> clients = {{0}};
    CHECK_THROWS_AS(bounds::empirical_clipping_gap(model, dataset, clients, 0.0,
                                                   SelectionProbabilities({1.0})),
                    std::domain_error);
  }
}
