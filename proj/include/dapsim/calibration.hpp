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

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dapsim/classifier.hpp"
#include "dapsim/grid_model.hpp"
#include "dapsim/random.hpp"
#include "dapsim/workload.hpp"

namespace dapsim {

/// Fitted (a, b, c) coefficients of the three-regressor throughput model.
using Coefficients = std::array<double, 3>;

inline constexpr std::array<const char*, 3> kThetaNames{"overhead", "mu", "sigma"};

std::array<double, 3> as_array(const SimulatorSetting& theta) noexcept;
SimulatorSetting as_setting(const std::array<double, 3>& v) noexcept;

/// Independent uniform prior per dimension of the setting.
struct PriorBox {
  std::array<double, 3> low{0.0, 0.0, 0.0};
  std::array<double, 3> high{0.1, 100.0, 100.0};

  /// Throws ValidationError unless low < high in every dimension.
  void validate() const;
  bool contains(const SimulatorSetting& theta) const noexcept;
  SimulatorSetting center() const noexcept;
  SimulatorSetting sample(RandomSource& rng) const;
};

/// Per-dimension affine map onto (0, 1).
struct AffineRange {
  double low = 0.0;
  double high = 1.0;
  double normalize(double v) const noexcept { return (v - low) / (high - low); }
  double denormalize(double u) const noexcept { return low + u * (high - low); }
};

struct Normalizer {
  std::array<AffineRange, 3> theta;
  std::array<AffineRange, 3> x;

  /// Theta ranges from the prior box; x ranges from empirical min/max
  /// (widened to unit span when a coefficient is constant).
  static Normalizer fit(const PriorBox& prior, const std::vector<Coefficients>& xs);
  /// Network input: normalized theta followed by normalized x.
  Eigen::VectorXd input(const SimulatorSetting& theta, const Coefficients& x) const;
};

struct TrainingSet {
  std::vector<SimulatorSetting> theta;
  std::vector<Coefficients> x;
  Normalizer normalization;

  std::size_t size() const noexcept { return theta.size(); }
};

/// The simulation whose output is being calibrated: topology, workload, and
/// where a candidate setting is applied.
struct SimulationProblem {
  Grid grid;
  Workload workload;
  SettingTarget target;
  Tick horizon = 1'000'000;
};

/// One simulation under `theta`, reduced to its (a, b, c) fit. Throws
/// RankDeficientError or ValidationError for degenerate observation sets.
Coefficients simulate_coefficients(const SimulationProblem& problem, const SimulatorSetting& theta,
                                   std::uint64_t seed);
/// As simulate_coefficients, but returns nothing for degenerate runs.
std::optional<Coefficients> try_simulate_coefficients(const SimulationProblem& problem, const SimulatorSetting& theta,
                                                     std::uint64_t seed);

struct GenerationOptions {
  std::size_t n = 50'000;
  std::uint64_t seed = 0;
  int jobs = 1;               // worker threads
  int retry_budget = 100;     // attempts per tuple before giving up
  std::function<void(std::size_t done)> on_progress;
};

/// Draws theta uniformly from `prior`, simulates, and keeps the fitted
/// coefficients. Tuple i depends only on (seed, i), so the result does not
/// depend on `jobs`. Throws NumericError when a tuple exhausts its retry budget.
TrainingSet generate_training_set(const SimulationProblem& problem, const PriorBox& prior,
                                  const GenerationOptions& options);

/// CSV `overhead,mu,sigma,a,b,c`.
void save_training_set(const std::filesystem::path& path, const TrainingSet& ts);
/// Normalization is refit from `prior` and the loaded x values.
TrainingSet load_training_set(const std::filesystem::path& path, const PriorBox& prior);

/// Approximate log likelihood-to-evidence ratio log r(x | theta).
class LogRatioModel {
 public:
  virtual ~LogRatioModel() = default;
  virtual double log_odds(const Coefficients& x, const SimulatorSetting& theta) const = 0;
};

/// Flat ratio: a classifier that always answers `probability`.
class ConstantRatioModel final : public LogRatioModel {
 public:
  explicit ConstantRatioModel(double probability = 0.5);
  double log_odds(const Coefficients&, const SimulatorSetting&) const override { return value_; }

 private:
  double value_;
};

/// Trained network plus the normalization it was trained under.
class ClassifierRatioModel final : public LogRatioModel {
 public:
  ClassifierRatioModel(RatioClassifier net, Normalizer normalization)
      : net_(std::move(net)), normalization_(normalization) {}

  double log_odds(const Coefficients& x, const SimulatorSetting& theta) const override;
  /// Classifier output d in (0, 1).
  double probability(const Coefficients& x, const SimulatorSetting& theta) const;

  const RatioClassifier& network() const noexcept { return net_; }
  const Normalizer& normalization() const noexcept { return normalization_; }

  void save(const std::filesystem::path& path) const;
  static ClassifierRatioModel load(const std::filesystem::path& path);

 private:
  RatioClassifier net_;
  Normalizer normalization_;
};

struct TrainedModel {
  ClassifierRatioModel model;
  TrainingResult training;
};

TrainedModel train_classifier(const TrainingSet& ts, const TrainingOptions& options);

/// Held-out discrimination accuracy on joint vs. permuted pairs, thresholding
/// the output at 0.5.
double pair_accuracy(const ClassifierRatioModel& model, const TrainingSet& ts, std::uint64_t seed);

struct MarkovChain {
  std::vector<SimulatorSetting> states;  // post burn-in
  std::size_t burn_in = 0;
  double acceptance_rate = 0.0;          // over post burn-in steps
  double outside_rate = 0.0;             // share of post burn-in proposals outside the prior
};

struct McmcOptions {
  std::size_t burn_in = 2'000;
  std::size_t samples = 20'000;
  std::optional<SimulatorSetting> theta0;              // default: center of the prior
  std::optional<std::array<double, 3>> proposal_scales; // default: 5% of each prior range
  std::uint64_t seed = 0;
};

std::array<double, 3> default_proposal_scales(const PriorBox& prior) noexcept;

/// Metropolis-Hastings with Gaussian random-walk proposals; proposals outside
/// the prior are rejected. Throws ValidationError if theta0 lies outside.
MarkovChain mcmc_sample(const LogRatioModel& model, const Coefficients& x_true, const PriorBox& prior,
                        const McmcOptions& options);

/// CSV `overhead,mu,sigma`.
void save_chain(const std::filesystem::path& path, const MarkovChain& chain);
/// The acceptance rate is recovered from the share of state changes.
MarkovChain load_chain(const std::filesystem::path& path);

struct PosteriorSummary {
  SimulatorSetting mode;
  SimulatorSetting median;
  double acceptance_rate = 0.0;
};

/// Per dimension: centre of the fullest of `bins` equal bins over the prior
/// range (ties to the lower bin), and the empirical median.
PosteriorSummary posterior_mode(const MarkovChain& chain, const PriorBox& prior, int bins = 50);

/// `{mode: {...}, median: {...}, acceptance_rate}`.
std::string summary_to_json(const PosteriorSummary& summary);

}  // namespace dapsim
