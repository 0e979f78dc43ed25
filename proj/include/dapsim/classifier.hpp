/*
 * Copyright 2026 The dapsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

namespace dapsim {

inline constexpr double kSeluAlpha = 1.6732632423543772;
inline constexpr double kSeluLambda = 1.0507009873554805;

double selu(double z) noexcept;
double sigmoid(double z) noexcept;
double logit(double p);

/// Dense feed-forward binary classifier: SELU hidden layers and a single
/// logistic output unit. All parameters live in one contiguous vector,
/// laid out layer by layer as (weights column-major, biases).
class RatioClassifier {
 public:
  static std::vector<int> default_widths() { return {6, 128, 128, 128, 128, 1}; }

  /// Zero biases and N(0, 1/fan_in) weights drawn from `seed`.
  explicit RatioClassifier(std::uint64_t seed = 0, std::vector<int> widths = default_widths());

  const std::vector<int>& widths() const noexcept { return widths_; }
  int input_dim() const noexcept { return widths_.front(); }
  std::size_t parameter_count() const noexcept { return static_cast<std::size_t>(params_.size()); }
  Eigen::VectorXd& parameters() noexcept { return params_; }
  const Eigen::VectorXd& parameters() const noexcept { return params_; }

  /// Pre-sigmoid output for each column of `inputs` (input_dim x batch).
  Eigen::RowVectorXd logits(const Eigen::MatrixXd& inputs) const;
  double logit_of(const Eigen::VectorXd& input) const;
  double predict(const Eigen::VectorXd& input) const { return sigmoid(logit_of(input)); }

  /// Mean binary cross-entropy over the batch; fills `gradient` (same layout
  /// as parameters()) when non-null.
  double loss(const Eigen::MatrixXd& inputs, const Eigen::RowVectorXd& labels,
              Eigen::VectorXd* gradient = nullptr) const;

  void save(std::ostream& out) const;
  static RatioClassifier load(std::istream& in);

 private:
  struct LayerView {
    Eigen::Index weight_offset;
    Eigen::Index bias_offset;
    int in;
    int out;
  };
  void build_layout();

  std::vector<int> widths_;
  std::vector<LayerView> layers_;
  Eigen::VectorXd params_;
};

/// Adam with bias correction.
class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t n, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& gradient);

 private:
  double lr_, beta1_, beta2_, eps_;
  Eigen::VectorXd m_, v_;
  long t_ = 0;
};

struct TrainingOptions {
  int epochs = 30;
  double learning_rate = 1e-4;
  int batch_size = 64;  // tuples per batch; each yields one joint and one decoupled pair
  std::uint64_t seed = 0;
  std::function<void(int epoch, double loss)> on_epoch;
};

/// Full-scale training budget, for reference-quality calibrations.
inline constexpr int kFullScaleEpochs = 263;

struct TrainingResult {
  double final_loss = 0.0;  // mean batch loss over the last epoch
  std::vector<double> epoch_losses;
};

/// Trains `clf` to tell joint pairs (theta_i, x_i) (label 1) from pairs with
/// theta permuted within the batch (label 0). `theta` and `x` hold one
/// normalized sample per row. Throws NumericError if the loss diverges.
TrainingResult train_ratio_classifier(RatioClassifier& clf, const Eigen::MatrixXd& theta, const Eigen::MatrixXd& x,
                                      const TrainingOptions& options);

}  // namespace dapsim
