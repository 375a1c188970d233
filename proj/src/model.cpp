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

#include "dpfed/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dpfed::learning {

namespace {

void check_features(const ModelSpec& spec, std::span<const double> features) {
  if (features.size() != spec.feature_dim)
    throw std::domain_error("model: feature dimension mismatch");
}

void check_label(const ModelSpec& spec, int label) {
  if (spec.architecture == Architecture::kQuadratic) return;
  if (label < 0 || static_cast<std::size_t>(label) >= spec.num_classes)
    throw std::domain_error("model: label out of range");
}

// Stable softmax of `scores` in place; returns log(sum(exp(scores - max))).
double softmax_inplace(std::vector<double>& scores) {
  const double peak = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double& s : scores) {
    s = std::exp(s - peak);
    sum += s;
  }
  for (double& s : scores) s /= sum;
  return std::log(sum) + peak;
}

// scores = W x + b for a row-major [rows x cols] weight block at `weights`.
void affine(std::span<const double> weights, std::span<const double> bias,
            std::span<const double> x, std::vector<double>& scores) {
  const std::size_t rows = bias.size();
  const std::size_t cols = x.size();
  scores.assign(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = bias[i];
    const double* row = weights.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    scores[i] = acc;
  }
}

}  // namespace

Architecture architecture_from_string(const std::string& name) {
  if (name == "quadratic") return Architecture::kQuadratic;
  if (name == "logistic_regression") return Architecture::kLogisticRegression;
  if (name == "mlp_1hidden") return Architecture::kMlpOneHidden;
  throw std::domain_error("model: unknown architecture '" + name + "'");
}

std::string architecture_to_string(Architecture architecture) {
  switch (architecture) {
    case Architecture::kQuadratic: return "quadratic";
    case Architecture::kLogisticRegression: return "logistic_regression";
    case Architecture::kMlpOneHidden: return "mlp_1hidden";
  }
  throw std::domain_error("model: invalid architecture tag");
}

std::size_t ModelSpec::parameter_count() const {
  switch (architecture) {
    case Architecture::kQuadratic: return feature_dim;
    case Architecture::kLogisticRegression: return num_classes * feature_dim + num_classes;
    case Architecture::kMlpOneHidden:
      return hidden_dim * feature_dim + hidden_dim + num_classes * hidden_dim + num_classes;
  }
  return 0;
}

void ModelSpec::validate() const {
  if (feature_dim == 0) throw std::domain_error("model spec: feature_dim must be >= 1");
  if (architecture != Architecture::kQuadratic && num_classes < 2)
    throw std::domain_error("model spec: classifiers need num_classes >= 2");
  if (architecture == Architecture::kMlpOneHidden && hidden_dim == 0)
    throw std::domain_error("model spec: mlp_1hidden needs hidden_dim >= 1");
}

Model make_model(const ModelSpec& spec) {
  spec.validate();
  return Model{spec, std::vector<double>(spec.parameter_count(), 0.0)};
}

void init_model(Model& model, double stddev, RngStream& stream) {
  if (stddev == 0.0) return;
  for (double& w : model.parameters) w = stddev * stream.next_normal();
}

double per_example_loss(const Model& model, std::span<const double> features, int label) {
  const ModelSpec& spec = model.spec;
  check_features(spec, features);
  check_label(spec, label);
  const auto& w = model.parameters;

  switch (spec.architecture) {
    case Architecture::kQuadratic: {
      double acc = 0.0;
      for (std::size_t j = 0; j < spec.feature_dim; ++j) {
        const double d = w[j] - features[j];
        acc += d * d;
      }
      return 0.5 * acc;
    }
    case Architecture::kLogisticRegression: {
      std::vector<double> scores;
      affine(std::span(w).subspan(0, spec.num_classes * spec.feature_dim),
             std::span(w).subspan(spec.num_classes * spec.feature_dim, spec.num_classes), features,
             scores);
      const double raw = scores[static_cast<std::size_t>(label)];
      const double log_norm = softmax_inplace(scores);
      return log_norm - raw;
    }
    case Architecture::kMlpOneHidden: {
      const std::size_t w1 = spec.hidden_dim * spec.feature_dim;
      std::vector<double> hidden;
      affine(std::span(w).subspan(0, w1), std::span(w).subspan(w1, spec.hidden_dim), features,
             hidden);
      for (double& h : hidden) h = std::tanh(h);
      const std::size_t w2 = w1 + spec.hidden_dim;
      std::vector<double> scores;
      affine(std::span(w).subspan(w2, spec.num_classes * spec.hidden_dim),
             std::span(w).subspan(w2 + spec.num_classes * spec.hidden_dim, spec.num_classes),
             hidden, scores);
      const double raw = scores[static_cast<std::size_t>(label)];
      const double log_norm = softmax_inplace(scores);
      return log_norm - raw;
    }
  }
  throw std::domain_error("model: invalid architecture tag");
}

void per_example_gradient(const Model& model, std::span<const double> features, int label,
                          std::span<double> out) {
  const ModelSpec& spec = model.spec;
  check_features(spec, features);
  check_label(spec, label);
  if (out.size() != spec.parameter_count())
    throw std::domain_error("model: gradient span size mismatch");
  const auto& w = model.parameters;

  switch (spec.architecture) {
    case Architecture::kQuadratic: {
      for (std::size_t j = 0; j < spec.feature_dim; ++j) out[j] = w[j] - features[j];
      return;
    }
    case Architecture::kLogisticRegression: {
      std::vector<double> probs;
      affine(std::span(w).subspan(0, spec.num_classes * spec.feature_dim),
             std::span(w).subspan(spec.num_classes * spec.feature_dim, spec.num_classes), features,
             probs);
      softmax_inplace(probs);
      probs[static_cast<std::size_t>(label)] -= 1.0;
      for (std::size_t c = 0; c < spec.num_classes; ++c) {
        double* row = out.data() + c * spec.feature_dim;
        for (std::size_t j = 0; j < spec.feature_dim; ++j) row[j] = probs[c] * features[j];
      }
      std::copy(probs.begin(), probs.end(), out.data() + spec.num_classes * spec.feature_dim);
      return;
    }
    case Architecture::kMlpOneHidden: {
      const std::size_t w1 = spec.hidden_dim * spec.feature_dim;
      const std::size_t b1 = w1;
      const std::size_t w2 = w1 + spec.hidden_dim;
      const std::size_t b2 = w2 + spec.num_classes * spec.hidden_dim;

      std::vector<double> hidden;
      affine(std::span(w).subspan(0, w1), std::span(w).subspan(b1, spec.hidden_dim), features,
             hidden);
      for (double& h : hidden) h = std::tanh(h);
      std::vector<double> probs;
      affine(std::span(w).subspan(w2, spec.num_classes * spec.hidden_dim),
             std::span(w).subspan(b2, spec.num_classes), hidden, probs);
      softmax_inplace(probs);
      probs[static_cast<std::size_t>(label)] -= 1.0;  // dL/dscores

      // Output layer.
      for (std::size_t c = 0; c < spec.num_classes; ++c) {
        double* row = out.data() + w2 + c * spec.hidden_dim;
        for (std::size_t h = 0; h < spec.hidden_dim; ++h) row[h] = probs[c] * hidden[h];
        out[b2 + c] = probs[c];
      }
      // Hidden layer: delta1 = (W2^T dL/dscores) * (1 - h^2).
      for (std::size_t h = 0; h < spec.hidden_dim; ++h) {
        double back = 0.0;
        for (std::size_t c = 0; c < spec.num_classes; ++c)
          back += w[w2 + c * spec.hidden_dim + h] * probs[c];
        const double delta1 = back * (1.0 - hidden[h] * hidden[h]);
        double* row = out.data() + h * spec.feature_dim;
        for (std::size_t j = 0; j < spec.feature_dim; ++j) row[j] = delta1 * features[j];
        out[b1 + h] = delta1;
      }
      return;
    }
  }
  throw std::domain_error("model: invalid architecture tag");
}

int predict(const Model& model, std::span<const double> features) {
  const ModelSpec& spec = model.spec;
  check_features(spec, features);
  if (spec.architecture == Architecture::kQuadratic) return 0;
  const auto& w = model.parameters;
  std::vector<double> scores;
  if (spec.architecture == Architecture::kLogisticRegression) {
    affine(std::span(w).subspan(0, spec.num_classes * spec.feature_dim),
           std::span(w).subspan(spec.num_classes * spec.feature_dim, spec.num_classes), features,
           scores);
  } else {
    const std::size_t w1 = spec.hidden_dim * spec.feature_dim;
    std::vector<double> hidden;
    affine(std::span(w).subspan(0, w1), std::span(w).subspan(w1, spec.hidden_dim), features,
           hidden);
    for (double& h : hidden) h = std::tanh(h);
    const std::size_t w2 = w1 + spec.hidden_dim;
    affine(std::span(w).subspan(w2, spec.num_classes * spec.hidden_dim),
           std::span(w).subspan(w2 + spec.num_classes * spec.hidden_dim, spec.num_classes), hidden,
           scores);
  }
  return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

double clip_gradient(std::span<double> gradient, double clip) {
  if (!(clip > 0.0)) throw std::domain_error("clip: threshold must be > 0");
  double norm_sq = 0.0;
  for (double g : gradient) norm_sq += g * g;
  const double norm = std::sqrt(norm_sq);
  if (norm > clip) {
    const double factor = clip / norm;
    for (double& g : gradient) g *= factor;
    return clip;
  }
  return norm;
}

}  // namespace dpfed::learning
