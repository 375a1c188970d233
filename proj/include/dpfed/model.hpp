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

#ifndef DPFED_MODEL_HPP
#define DPFED_MODEL_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpfed/rng.hpp"

namespace dpfed::learning {

enum class Architecture { kQuadratic, kLogisticRegression, kMlpOneHidden };

Architecture architecture_from_string(const std::string& name);
std::string architecture_to_string(Architecture architecture);

// Shape of a model. The flat parameter layouts are:
//   quadratic            w[feature_dim]; loss 0.5 * ||w - x||^2, label ignored
//   logistic_regression  W[classes x features] row-major, then bias[classes]
//   mlp_1hidden          W1[hidden x features], b1[hidden], W2[classes x hidden],
//                        b2[classes]; tanh hidden activation
struct ModelSpec {
  Architecture architecture = Architecture::kQuadratic;
  std::size_t feature_dim = 0;
  std::size_t num_classes = 0;  // classifiers only
  std::size_t hidden_dim = 0;   // mlp only

  std::size_t parameter_count() const;
  void validate() const;  // throws std::domain_error
};

struct Model {
  ModelSpec spec;
  std::vector<double> parameters;
};

// Zero-initialized model of the given shape.
Model make_model(const ModelSpec& spec);

// Gaussian initialization with the given standard deviation (0 keeps zeros).
void init_model(Model& model, double stddev, RngStream& stream);

// Loss of one example at the current parameters.
double per_example_loss(const Model& model, std::span<const double> features, int label);

// Exact gradient of the per-example loss; `out` must have parameter_count()
// entries. Closed form for the quadratic loss, analytic cross-entropy gradient
// for logistic regression, manual backpropagation for the MLP.
void per_example_gradient(const Model& model, std::span<const double> features, int label,
                          std::span<double> out);

// Predicted class (argmax of the class scores); 0 for the quadratic model.
int predict(const Model& model, std::span<const double> features);

// In-place L2 clipping: g <- g / max{1, ||g||_2 / clip}. Returns the post-clip norm.
double clip_gradient(std::span<double> gradient, double clip);

}  // namespace dpfed::learning

#endif  // DPFED_MODEL_HPP
