// Copyright 2026 The OGRS Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Softmax classifiers with hand-derived gradients. Both gradients are needed:
// with respect to the weights for training, and with respect to the input
// features for sample selection.

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ogrs/common.hpp"
#include "ogrs/datastream.hpp"

namespace ogrs::model {

enum class ArchKind { kLogisticRegression, kMlp };

struct Architecture {
  ArchKind kind = ArchKind::kLogisticRegression;
  int input_dim = 0;
  /// Zero for logistic regression.
  int hidden_width = 0;
  int num_classes = 0;

  static Architecture logistic_regression(int input_dim, int num_classes) {
    return {ArchKind::kLogisticRegression, input_dim, 0, num_classes};
  }
  /// Two layers, tanh hidden activation.
  static Architecture mlp(int input_dim, int hidden_width, int num_classes) {
    return {ArchKind::kMlp, input_dim, hidden_width, num_classes};
  }

  std::size_t parameter_count() const;
  std::string describe() const;
  void validate() const;

  bool operator==(const Architecture&) const = default;
};

/// Flat weight vector plus the architecture that gives it shape.
/// Layout: logistic regression [W (C x d, row-major), b (C)];
/// MLP [W1 (H x d), b1 (H), W2 (C x H), b2 (C)].
class ModelParams {
 public:
  ModelParams(Architecture arch, Vector weights);

  const Architecture& architecture() const { return arch_; }
  const Vector& weights() const { return weights_; }

  bool operator==(const ModelParams& other) const {
    return arch_ == other.arch_ && weights_.size() == other.weights_.size() && weights_ == other.weights_;
  }

 private:
  Architecture arch_;
  Vector weights_;
};

using SampleRef = const data::LabeledSample*;
using Batch = std::span<const SampleRef>;

/// Glorot-uniform weights in [-s, s], s = sqrt(6 / (fan_in + fan_out)) per
/// layer; zero biases.
ModelParams init_params(const Architecture& arch, std::uint64_t seed);

ModelParams zero_params(const Architecture& arch);

/// Pre-softmax scores.
Vector logits(const ModelParams& params, const Vector& features);

/// Max-shifted softmax of the logits.
Vector predict(const ModelParams& params, const Vector& features);

/// Cross-entropy in nats, -log p[observed_label], evaluated as
/// logsumexp(z) - z_y so it stays finite when p underflows.
double loss(const ModelParams& params, const data::LabeledSample& sample);

/// Per-row losses for a block of samples (one GEMM per layer).
Vector batch_losses(const ModelParams& params, Eigen::Ref<const Matrix> features, std::span<const int> labels);

/// Argmax class per row, ties to the smallest index.
std::vector<int> predict_classes(const ModelParams& params, Eigen::Ref<const Matrix> features);

/// Gradient of the mean cross-entropy over the batch with respect to theta.
Vector grad_theta(const ModelParams& params, Batch batch);

/// Gradient of the loss with respect to the input features, theta fixed.
Vector grad_features(const ModelParams& params, const data::LabeledSample& sample);

/// Loss and feature gradient from one forward/backward pass.
double loss_and_grad_features(const ModelParams& params, const data::LabeledSample& sample, Vector& grad);

/// theta - lr * grad_theta(theta, batch); lr must be positive.
ModelParams sgd_step(const ModelParams& params, Batch batch, double lr);

/// Mean batch loss.
double mean_loss(const ModelParams& params, Batch batch);

/// max |analytic - central difference| / max(1, |analytic|) over every
/// coordinate of both gradients.
double finite_diff_check(const ModelParams& params, const data::LabeledSample& sample, double h);

/// Little-endian float64 blob plus JSON sidecar describing the architecture.
void save_params(const ModelParams& params, const std::filesystem::path& blob_path,
                 const std::filesystem::path& sidecar_path);
ModelParams load_params(const std::filesystem::path& blob_path, const std::filesystem::path& sidecar_path);

}  // namespace ogrs::model
