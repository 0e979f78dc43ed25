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

#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "dapsim/calibration.hpp"
#include "dapsim/closure.hpp"
#include "dapsim/error.hpp"

using namespace dapsim;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dapsim_unit";
  fs::create_directories(dir);
  return dir / name;
}

// Log-ratio tilted linearly along mu: target density proportional to 1 + u,
// u the mu coordinate rescaled to [0, 1].
class TiltedModel final : public LogRatioModel {
 public:
  explicit TiltedModel(const PriorBox& prior) : prior_(prior) {}
  double log_odds(const Coefficients&, const SimulatorSetting& theta) const override {
    return std::log1p((theta.mu - prior_.low[1]) / (prior_.high[1] - prior_.low[1]));
  }

 private:
  PriorBox prior_;
};

}  // namespace

TEST_CASE("prior box") {
  const PriorBox prior;
  CHECK(prior.contains({0.02, 36.9, 14.4}));
  CHECK_FALSE(prior.contains({-0.001, 36.9, 14.4}));
  CHECK_FALSE(prior.contains({0.02, 100.5, 14.4}));
  CHECK(prior.center() == SimulatorSetting{0.05, 50.0, 50.0});

  PriorBox inverted;
  inverted.low[2] = 200.0;
  CHECK_THROWS_AS(inverted.validate(), ValidationError);
}

TEST_CASE("prior samples are uniform per dimension") {
  const PriorBox prior;
  RandomSource rng(10);
  constexpr int n = 20'000, bins = 10;
  std::array<std::array<int, bins>, 3> counts{};
  for (int i = 0; i < n; ++i) {
    const auto v = as_array(prior.sample(rng));
    for (int d = 0; d < 3; ++d) {
      REQUIRE(v[d] >= prior.low[d]);
      REQUIRE(v[d] < prior.high[d]);
      ++counts[d][static_cast<int>((v[d] - prior.low[d]) / (prior.high[d] - prior.low[d]) * bins)];
    }
  }
  // chi-square with 9 degrees of freedom: 27.88 is the 0.999 quantile.
  for (int d = 0; d < 3; ++d) {
    double chi2 = 0.0;
    for (int c : counts[d]) chi2 += (c - n / bins) * (c - n / bins) / double(n / bins);
    CHECK(chi2 < 27.88);
  }
}

TEST_CASE("normalization round-trips and maps the prior onto the unit cube") {
  const PriorBox prior;
  const std::vector<Coefficients> xs{{0.1, 2.0, -0.3}, {0.4, 5.0, 0.7}, {0.2, 3.0, 0.0}};
  const Normalizer norm = Normalizer::fit(prior, xs);
  RandomSource rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto t = as_array(prior.sample(rng));
    for (int d = 0; d < 3; ++d) {
      const double u = norm.theta[d].normalize(t[d]);
      REQUIRE(u >= 0.0);
      REQUIRE(u <= 1.0);
      REQUIRE(std::abs(norm.theta[d].denormalize(u) - t[d]) < 1e-12 * std::max(1.0, std::abs(t[d])));
    }
  }
  const Eigen::VectorXd in = norm.input({0.05, 50.0, 50.0}, {0.4, 2.0, 0.7});
  REQUIRE(in.size() == 6);
  CHECK(in(0) == doctest::Approx(0.5));
  CHECK(in(3) == doctest::Approx(1.0));
  CHECK(in(4) == doctest::Approx(0.0));

  const Normalizer constant = Normalizer::fit(prior, {{1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}});
  CHECK(constant.x[0].high - constant.x[0].low == doctest::Approx(1.0));
}

TEST_CASE("constant ratio models are flat") {
  CHECK(ConstantRatioModel(0.5).log_odds({}, {}) == 0.0);
  CHECK(ConstantRatioModel(0.9).log_odds({}, {}) == doctest::Approx(std::log(9.0)));
  CHECK_THROWS(ConstantRatioModel(1.0));
}

TEST_CASE("MCMC stays in the prior and rejects outside proposals") {
  const PriorBox prior;
  McmcOptions opts;
  opts.burn_in = 500;
  opts.samples = 20'000;
  opts.proposal_scales = std::array<double, 3>{0.05, 50.0, 50.0};
  opts.seed = 4;
  const MarkovChain chain = mcmc_sample(ConstantRatioModel(), {}, prior, opts);
  CHECK(chain.states.size() == 20'000);
  CHECK(chain.burn_in == 500);
  for (const auto& s : chain.states) REQUIRE(prior.contains(s));
  // Under a flat ratio every inside proposal is accepted, so the rates are
  // complementary.
  CHECK(chain.outside_rate > 0.2);
  CHECK(chain.acceptance_rate == doctest::Approx(1.0 - chain.outside_rate).epsilon(1e-12));

  McmcOptions outside = opts;
  outside.theta0 = SimulatorSetting{0.5, 1.0, 1.0};
  CHECK_THROWS_AS(mcmc_sample(ConstantRatioModel(), {}, prior, outside), ValidationError);
}

TEST_CASE("MCMC samples a tilted target in proportion to its density") {
  const PriorBox prior;
  McmcOptions opts;
  opts.burn_in = 2'000;
  opts.samples = 100'000;
  opts.proposal_scales = std::array<double, 3>{0.05, 50.0, 50.0};
  opts.seed = 12;
  const MarkovChain chain = mcmc_sample(TiltedModel(prior), {}, prior, opts);
  int lower_half = 0;
  for (const auto& s : chain.states) lower_half += s.mu < 50.0;
  // P(u < 1/2) = (1/2 + 1/8) / (3/2) for density proportional to 1 + u.
  CHECK(std::abs(lower_half / double(chain.states.size()) - 0.625 / 1.5) < 0.02);
}

TEST_CASE("posterior summary") {
  const PriorBox prior;
  SUBCASE("identical states give the containing bin centre") {
    MarkovChain chain;
    chain.states.assign(10, SimulatorSetting{0.0213, 36.9, 14.4});
    const auto s = posterior_mode(chain, prior, 50);
    CHECK(s.mode.overhead == doctest::Approx(0.021));
    CHECK(s.mode.mu == doctest::Approx(37.0));
    CHECK(s.mode.sigma == doctest::Approx(15.0));
    CHECK(s.median == chain.states[0]);
  }
  SUBCASE("uniform chain median sits within a bin of the midpoint") {
    RandomSource rng(3);
    MarkovChain chain;
    for (int i = 0; i < 50'000; ++i) chain.states.push_back(prior.sample(rng));
    const auto s = posterior_mode(chain, prior, 50);
    CHECK(std::abs(s.median.overhead - 0.05) < 0.1 / 50);
    CHECK(std::abs(s.median.mu - 50.0) < 100.0 / 50);
    CHECK(std::abs(s.median.sigma - 50.0) < 100.0 / 50);
  }
  SUBCASE("ties go to the lower bin and even counts average the middle pair") {
    MarkovChain chain;
    chain.states = {{0.011, 11.0, 11.0}, {0.031, 31.0, 31.0}};
    const auto s = posterior_mode(chain, prior, 10);
    CHECK(s.mode.mu == doctest::Approx(15.0));
    CHECK(s.median.mu == doctest::Approx(21.0));
  }
  CHECK_THROWS_AS(posterior_mode(MarkovChain{}, prior, 50), ValidationError);
  MarkovChain one;
  one.states.push_back(prior.center());
  CHECK_THROWS_AS(posterior_mode(one, prior, 1), ValidationError);
}

TEST_CASE("chain files round-trip") {
  MarkovChain chain;
  chain.states = {{0.01, 1.0, 2.0}, {0.01, 1.0, 2.0}, {0.02, 3.0, 4.0}, {0.03, 5.0, 6.0}, {0.03, 5.0, 6.0}};
  const fs::path path = scratch("chain.csv");
  save_chain(path, chain);
  const MarkovChain back = load_chain(path);
  CHECK(back.states == chain.states);
  CHECK(back.acceptance_rate == doctest::Approx(0.5));

  std::ofstream(scratch("empty_chain.csv")) << "overhead,mu,sigma\n";
  const MarkovChain empty = load_chain(scratch("empty_chain.csv"));
  CHECK(empty.states.empty());
  CHECK_THROWS_AS(load_chain(scratch("missing.csv")), IoError);
}

TEST_CASE("simulated coefficients are reproducible and seed-driven") {
  const SimulationProblem problem = reference_problem(7);
  const SimulatorSetting theta{0.02, 36.9, 14.4};
  const auto a = simulate_coefficients(problem, theta, 5);
  CHECK(a == simulate_coefficients(problem, theta, 5));
  CHECK(a != simulate_coefficients(problem, theta, 6));

  // Without background noise the seed no longer matters.
  const SimulatorSetting quiet{0.0, 0.0, 0.0};
  CHECK(simulate_coefficients(problem, quiet, 1) == simulate_coefficients(problem, quiet, 2));
}

TEST_CASE("training sets do not depend on the worker count and survive a file round trip") {
  const SimulationProblem problem = reference_problem(7);
  const PriorBox prior;
  GenerationOptions opts;
  opts.n = 6;
  opts.seed = 3;
  const TrainingSet one = generate_training_set(problem, prior, opts);
  opts.jobs = 3;
  const TrainingSet three = generate_training_set(problem, prior, opts);
  REQUIRE(one.size() == 6);
  CHECK(one.theta == three.theta);
  CHECK(one.x == three.x);
  for (const auto& t : one.theta) CHECK(prior.contains(t));

  const fs::path path = scratch("training.csv");
  save_training_set(path, one);
  const TrainingSet back = load_training_set(path, prior);
  CHECK(back.theta == one.theta);
  CHECK(back.x == one.x);
}

TEST_CASE("a trained ratio model survives a file round trip") {
  TrainingSet ts;
  RandomSource rng(2);
  const PriorBox prior;
  for (int i = 0; i < 64; ++i) {
    ts.theta.push_back(prior.sample(rng));
    ts.x.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
  }
  ts.normalization = Normalizer::fit(prior, ts.x);
  TrainingOptions opts;
  opts.epochs = 1;
  const TrainedModel trained = train_classifier(ts, opts);
  const fs::path path = scratch("model.txt");
  trained.model.save(path);
  const ClassifierRatioModel back = ClassifierRatioModel::load(path);
  const Coefficients x{0.3, 0.2, 0.9};
  const SimulatorSetting theta{0.03, 40.0, 10.0};
  CHECK(back.log_odds(x, theta) == trained.model.log_odds(x, theta));
  CHECK(trained.model.log_odds(x, theta) - trained.model.log_odds(x, theta) == 0.0);
  const double acc = pair_accuracy(trained.model, ts, 1);
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
}
