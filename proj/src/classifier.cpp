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

#include "dapsim/classifier.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "dapsim/error.hpp"
#include "dapsim/observation.hpp"
#include "dapsim/random.hpp"

namespace dapsim {

namespace {

constexpr const char* kFileMagic = "dapsim-ratio-classifier";
constexpr int kFileVersion = 1;

// log(1 + exp(z)) without overflow.
double softplus(double z) noexcept { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

double selu(double z) noexcept { return z > 0.0 ? kSeluLambda * z : kSeluLambda * kSeluAlpha * std::expm1(z); }

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("logit: probability must lie in (0, 1)");
  return std::log(p / (1.0 - p));
}

RatioClassifier::RatioClassifier(std::uint64_t seed, std::vector<int> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2 || widths_.back() != 1) throw ValidationError("classifier: need >= 2 layers ending in width 1");
  for (int w : widths_) {
    if (w < 1) throw ValidationError("classifier: layer widths must be positive");
  }
  build_layout();
  RandomSource rng(seed);
  for (const auto& l : layers_) {
    const double sd = 1.0 / std::sqrt(static_cast<double>(l.in));
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(l.in) * l.out; ++k) {
      params_(l.weight_offset + k) = sd * rng.standard_normal();
    }
  }
}

void RatioClassifier::build_layout() {
  layers_.clear();
  Eigen::Index offset = 0;
  for (std::size_t i = 0; i + 1 < widths_.size(); ++i) {
    LayerView l{offset, offset + static_cast<Eigen::Index>(widths_[i]) * widths_[i + 1], widths_[i], widths_[i + 1]};
    offset = l.bias_offset + l.out;
    layers_.push_back(l);
  }
  params_ = Eigen::VectorXd::Zero(offset);
}

Eigen::RowVectorXd RatioClassifier::logits(const Eigen::MatrixXd& inputs) const {
  if (inputs.rows() != input_dim()) throw ValidationError("classifier: input dimension mismatch");
  Eigen::MatrixXd a = inputs;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    Eigen::Map<const Eigen::MatrixXd> W(params_.data() + l.weight_offset, l.out, l.in);
    Eigen::Map<const Eigen::VectorXd> b(params_.data() + l.bias_offset, l.out);
    Eigen::MatrixXd z = W * a;
    z.colwise() += b;
    if (i + 1 < layers_.size()) z = z.unaryExpr([](double v) { return selu(v); });
    a = std::move(z);
  }
  return a.row(0);
}

double RatioClassifier::logit_of(const Eigen::VectorXd& input) const { return logits(input)(0); }

double RatioClassifier::loss(const Eigen::MatrixXd& inputs, const Eigen::RowVectorXd& labels,
                             Eigen::VectorXd* gradient) const {
  if (inputs.rows() != input_dim()) throw ValidationError("classifier: input dimension mismatch");
  if (labels.size() != inputs.cols() || inputs.cols() == 0) throw ValidationError("classifier: label count mismatch");
  const auto batch = static_cast<double>(inputs.cols());

  // Pre-activations per layer are kept for the backward pass.
  std::vector<Eigen::MatrixXd> pre(layers_.size());
  std::vector<Eigen::MatrixXd> act(layers_.size() + 1);
  act[0] = inputs;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    Eigen::Map<const Eigen::MatrixXd> W(params_.data() + l.weight_offset, l.out, l.in);
    Eigen::Map<const Eigen::VectorXd> b(params_.data() + l.bias_offset, l.out);
    pre[i] = W * act[i];
    pre[i].colwise() += b;
    act[i + 1] = i + 1 < layers_.size() ? pre[i].unaryExpr([](double v) { return selu(v); }) : pre[i];
  }

  const Eigen::RowVectorXd z = act.back().row(0);
  double total = 0.0;
  for (Eigen::Index k = 0; k < z.size(); ++k) total += softplus(z(k)) - labels(k) * z(k);
  const double mean_loss = total / batch;
  if (gradient == nullptr) return mean_loss;

  gradient->setZero(params_.size());
  Eigen::MatrixXd delta(1, z.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) delta(0, k) = (sigmoid(z(k)) - labels(k)) / batch;

  for (std::size_t i = layers_.size(); i-- > 0;) {
    const auto& l = layers_[i];
    Eigen::Map<Eigen::MatrixXd> dW(gradient->data() + l.weight_offset, l.out, l.in);
    Eigen::Map<Eigen::VectorXd> db(gradient->data() + l.bias_offset, l.out);
    dW.noalias() = delta * act[i].transpose();
    db = delta.rowwise().sum();
    if (i == 0) break;
    Eigen::Map<const Eigen::MatrixXd> W(params_.data() + l.weight_offset, l.out, l.in);
    Eigen::MatrixXd upstream = W.transpose() * delta;
    const Eigen::MatrixXd& zprev = pre[i - 1];
    delta = upstream.binaryExpr(zprev, [](double g, double zz) {
      return g * (zz > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(zz));
    });
  }
  return mean_loss;
}

void RatioClassifier::save(std::ostream& out) const {
  out << kFileMagic << ' ' << kFileVersion << '\n';
  out << "widths";
  for (int w : widths_) out << ' ' << w;
  out << '\n' << "parameters " << params_.size() << '\n';
  for (Eigen::Index i = 0; i < params_.size(); ++i) out << format_double(params_(i)) << '\n';
  if (!out) throw IoError("classifier: write failed");
}

RatioClassifier RatioClassifier::load(std::istream& in) {
  std::string magic, tag;
  int version = 0;
  if (!(in >> magic >> version) || magic != kFileMagic) throw ValidationError("classifier: not a classifier file");
  if (version != kFileVersion) throw ValidationError("classifier: unsupported version " + std::to_string(version));
  if (!(in >> tag) || tag != "widths") throw ValidationError("classifier: missing widths");
  std::vector<int> widths;
  std::string token;
  while (in >> token && token != "parameters") widths.push_back(std::stoi(token));
  if (token != "parameters") throw ValidationError("classifier: missing parameters");
  std::size_t count = 0;
  in >> count;
  RatioClassifier clf(0, widths);
  if (count != clf.parameter_count()) throw ValidationError("classifier: parameter count does not match widths");
  for (std::size_t i = 0; i < count; ++i) {
    if (!(in >> token)) throw ValidationError("classifier: truncated parameter list");
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size()) throw ValidationError("classifier: bad parameter '" + token + "'");
    clf.params_(static_cast<Eigen::Index>(i)) = v;
  }
  return clf;
}

AdamOptimizer::AdamOptimizer(std::size_t n, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(epsilon),
      m_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
      v_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))) {}

void AdamOptimizer::step(Eigen::VectorXd& params, const Eigen::VectorXd& gradient) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * gradient;
  v_ = beta2_ * v_ + (1.0 - beta2_) * gradient.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

TrainingResult train_ratio_classifier(RatioClassifier& clf, const Eigen::MatrixXd& theta, const Eigen::MatrixXd& x,
                                      const TrainingOptions& options) {
  if (theta.rows() == 0 || theta.rows() != x.rows()) throw ValidationError("train: theta and x need equal, non-zero row counts");
  if (theta.cols() + x.cols() != clf.input_dim()) throw ValidationError("train: theta and x widths do not match the classifier input");
  if (options.epochs < 1 || options.batch_size < 1 || !(options.learning_rate > 0.0)) {
    throw ValidationError("train: epochs, batch_size and learning_rate must be positive");
  }

  const Eigen::Index n = theta.rows();
  RandomSource rng(options.seed);
  AdamOptimizer adam(clf.parameter_count(), options.learning_rate);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Eigen::VectorXd grad(static_cast<Eigen::Index>(clf.parameter_count()));

  TrainingResult result;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    }
    double epoch_loss = 0.0;
    int batches = 0;
    for (Eigen::Index start = 0; start < n; start += options.batch_size) {
      const Eigen::Index m = std::min<Eigen::Index>(options.batch_size, n - start);
      // Permuting theta within the batch decouples it from x (class 0).
      std::vector<Eigen::Index> perm(static_cast<std::size_t>(m));
      std::iota(perm.begin(), perm.end(), Eigen::Index{0});
      for (std::size_t i = perm.size(); i > 1; --i) {
        std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
      }
      Eigen::MatrixXd inputs(clf.input_dim(), 2 * m);
      Eigen::RowVectorXd labels(2 * m);
      for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index row = order[static_cast<std::size_t>(start + k)];
        const Eigen::Index other = order[static_cast<std::size_t>(start + perm[static_cast<std::size_t>(k)])];
        inputs.col(2 * k) << theta.row(row).transpose(), x.row(row).transpose();
        inputs.col(2 * k + 1) << theta.row(other).transpose(), x.row(row).transpose();
        labels(2 * k) = 1.0;
        labels(2 * k + 1) = 0.0;
      }
      const double l = clf.loss(inputs, labels, &grad);
      if (!std::isfinite(l) || !grad.allFinite()) {
        throw NumericError("train: loss diverged at epoch " + std::to_string(epoch + 1) + ", batch " +
                           std::to_string(batches + 1) + " (loss=" + format_double(l) + ")");
      }
      adam.step(clf.parameters(), grad);
      epoch_loss += l;
      ++batches;
    }
    epoch_loss /= batches;
    result.epoch_losses.push_back(epoch_loss);
    if (options.on_epoch) options.on_epoch(epoch + 1, epoch_loss);
  }
  result.final_loss = result.epoch_losses.back();
  return result;
}

}  // namespace dapsim
