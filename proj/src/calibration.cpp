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

#include "dapsim/calibration.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dapsim/analysis.hpp"
#include "dapsim/error.hpp"
#include "dapsim/observation.hpp"
#include "dapsim/sim_engine.hpp"

namespace dapsim {

namespace {

constexpr const char* kTrainingHeader = "overhead,mu,sigma,a,b,c";
constexpr const char* kChainHeader = "overhead,mu,sigma";

std::vector<double> parse_row(const std::string& line, std::size_t expected, std::size_t number,
                              const char* what) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= line.size()) {
    const std::size_t comma = std::min(line.find(',', start), line.size());
    double v = 0.0;
    const char* first = line.data() + start;
    const char* last = line.data() + comma;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v)) {
      throw ValidationError(std::string(what) + " line " + std::to_string(number) + ": bad number");
    }
    values.push_back(v);
    start = comma + 1;
  }
  if (values.size() != expected) {
    throw ValidationError(std::string(what) + " line " + std::to_string(number) + ": expected " +
                          std::to_string(expected) + " fields");
  }
  return values;
}

// Calls `row` for each data line after checking the header.
template <class F>
void read_csv(const std::filesystem::path& path, const char* header, std::size_t fields, const char* what, F row) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(std::string(what) + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw ValidationError(std::string(what) + ": header must be '" + header + "'");
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    row(parse_row(line, fields, number, what));
  }
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

std::array<double, 3> as_array(const SimulatorSetting& t) noexcept { return {t.overhead, t.mu, t.sigma}; }

SimulatorSetting as_setting(const std::array<double, 3>& v) noexcept { return {v[0], v[1], v[2]}; }

void PriorBox::validate() const {
  for (std::size_t d = 0; d < 3; ++d) {
    if (!(low[d] < high[d]) || !std::isfinite(low[d]) || !std::isfinite(high[d])) {
      throw ValidationError(std::string("prior: ") + kThetaNames[d] + " needs finite low < high");
    }
  }
}

bool PriorBox::contains(const SimulatorSetting& theta) const noexcept {
  const auto v = as_array(theta);
  for (std::size_t d = 0; d < 3; ++d) {
    if (!(v[d] >= low[d] && v[d] <= high[d])) return false;
  }
  return true;
}

SimulatorSetting PriorBox::center() const noexcept {
  std::array<double, 3> c{};
  for (std::size_t d = 0; d < 3; ++d) c[d] = 0.5 * (low[d] + high[d]);
  return as_setting(c);
}

SimulatorSetting PriorBox::sample(RandomSource& rng) const {
  std::array<double, 3> v{};
  for (std::size_t d = 0; d < 3; ++d) v[d] = rng.uniform(low[d], high[d]);
  return as_setting(v);
}

Normalizer Normalizer::fit(const PriorBox& prior, const std::vector<Coefficients>& xs) {
  prior.validate();
  Normalizer n;
  for (std::size_t d = 0; d < 3; ++d) n.theta[d] = {prior.low[d], prior.high[d]};
  for (std::size_t d = 0; d < 3; ++d) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& x : xs) {
      lo = std::min(lo, x[d]);
      hi = std::max(hi, x[d]);
    }
    if (xs.empty()) lo = 0.0, hi = 1.0;
    if (!(hi > lo)) hi = lo + 1.0;
    n.x[d] = {lo, hi};
  }
  return n;
}

Eigen::VectorXd Normalizer::input(const SimulatorSetting& theta, const Coefficients& x) const {
  const auto t = as_array(theta);
  Eigen::VectorXd v(6);
  for (std::size_t d = 0; d < 3; ++d) {
    v(static_cast<Eigen::Index>(d)) = this->theta[d].normalize(t[d]);
    v(static_cast<Eigen::Index>(d + 3)) = this->x[d].normalize(x[d]);
  }
  return v;
}

std::optional<Coefficients> try_simulate_coefficients(const SimulationProblem& problem, const SimulatorSetting& theta,
                                                     std::uint64_t seed) {
  const SettingSpec setting{theta, problem.target};
  const auto result = run(problem.grid, problem.workload, setting, RunOptions{seed, problem.horizon, false});
  if (result.observations.size() <= 3) return std::nullopt;
  try {
    const auto fit = fit_eq1(result.observations);
    return Coefficients{fit.coefficients[0], fit.coefficients[1], fit.coefficients[2]};
  } catch (const RankDeficientError&) {
    return std::nullopt;
  }
}

Coefficients simulate_coefficients(const SimulationProblem& problem, const SimulatorSetting& theta,
                                   std::uint64_t seed) {
  const SettingSpec setting{theta, problem.target};
  const auto fit = fit_eq1(run(problem.grid, problem.workload, setting, RunOptions{seed, problem.horizon, false}).observations);
  return {fit.coefficients[0], fit.coefficients[1], fit.coefficients[2]};
}

TrainingSet generate_training_set(const SimulationProblem& problem, const PriorBox& prior,
                                  const GenerationOptions& options) {
  prior.validate();
  if (options.n < 1) throw ValidationError("generate: n must be >= 1");
  if (options.jobs < 1) throw ValidationError("generate: jobs must be >= 1");
  if (options.retry_budget < 1) throw ValidationError("generate: retry budget must be >= 1");

  TrainingSet ts;
  ts.theta.resize(options.n);
  ts.x.resize(options.n);

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::mutex progress_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= options.n || failed.load()) return;
      try {
        RandomSource rng(mix_seed(options.seed, i));
        bool ok = false;
        for (int attempt = 0; attempt < options.retry_budget && !ok; ++attempt) {
          const SimulatorSetting theta = prior.sample(rng);
          const std::uint64_t sim_seed = rng.next_u64();
          if (auto x = try_simulate_coefficients(problem, theta, sim_seed)) {
            ts.x[i] = *x;
            ts.theta[i] = theta;
            ok = true;
          }
        }
        if (!ok) {
          throw NumericError("generate: tuple " + std::to_string(i) + " produced only degenerate fits after " +
                             std::to_string(options.retry_budget) + " attempts");
        }
        const std::size_t finished = done.fetch_add(1) + 1;
        if (options.on_progress) {
          std::lock_guard lock(progress_mutex);
          options.on_progress(finished);
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
        return;
      }
    }
  };

  const int threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(options.jobs), options.n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  ts.normalization = Normalizer::fit(prior, ts.x);
  return ts;
}

void save_training_set(const std::filesystem::path& path, const TrainingSet& ts) {
  auto out = open_for_write(path);
  out << kTrainingHeader << '\n';
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto t = as_array(ts.theta[i]);
    out << format_double(t[0]) << ',' << format_double(t[1]) << ',' << format_double(t[2]) << ','
        << format_double(ts.x[i][0]) << ',' << format_double(ts.x[i][1]) << ',' << format_double(ts.x[i][2]) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

TrainingSet load_training_set(const std::filesystem::path& path, const PriorBox& prior) {
  TrainingSet ts;
  read_csv(path, kTrainingHeader, 6, "training set", [&](const std::vector<double>& v) {
    ts.theta.push_back({v[0], v[1], v[2]});
    ts.x.push_back({v[3], v[4], v[5]});
  });
  if (ts.size() == 0) throw ValidationError("training set: no rows in '" + path.string() + "'");
  ts.normalization = Normalizer::fit(prior, ts.x);
  return ts;
}

ConstantRatioModel::ConstantRatioModel(double probability) : value_(logit(probability)) {}

double ClassifierRatioModel::log_odds(const Coefficients& x, const SimulatorSetting& theta) const {
  return net_.logit_of(normalization_.input(theta, x));
}

double ClassifierRatioModel::probability(const Coefficients& x, const SimulatorSetting& theta) const {
  return sigmoid(log_odds(x, theta));
}

void ClassifierRatioModel::save(const std::filesystem::path& path) const {
  auto out = open_for_write(path);
  net_.save(out);
  out << "normalization\n";
  for (const auto& r : normalization_.theta) out << format_double(r.low) << ' ' << format_double(r.high) << '\n';
  for (const auto& r : normalization_.x) out << format_double(r.low) << ' ' << format_double(r.high) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

ClassifierRatioModel ClassifierRatioModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  RatioClassifier net = RatioClassifier::load(in);
  if (net.input_dim() != 6) throw ValidationError("classifier: expected 6 inputs");
  std::string tag;
  if (!(in >> tag) || tag != "normalization") throw ValidationError("classifier: missing normalization block");
  Normalizer norm;
  auto read_range = [&](AffineRange& r) {
    std::string lo, hi;
    if (!(in >> lo >> hi)) throw ValidationError("classifier: truncated normalization block");
    r.low = std::stod(lo);
    r.high = std::stod(hi);
    if (!(r.high > r.low)) throw ValidationError("classifier: degenerate normalization range");
  };
  for (auto& r : norm.theta) read_range(r);
  for (auto& r : norm.x) read_range(r);
  return ClassifierRatioModel(std::move(net), norm);
}

namespace {

void normalized_matrices(const TrainingSet& ts, Eigen::MatrixXd& theta, Eigen::MatrixXd& x) {
  const auto n = static_cast<Eigen::Index>(ts.size());
  theta.resize(n, 3);
  x.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto v = ts.normalization.input(ts.theta[static_cast<std::size_t>(i)], ts.x[static_cast<std::size_t>(i)]);
    theta.row(i) = v.head<3>().transpose();
    x.row(i) = v.tail<3>().transpose();
  }
}

}  // namespace

TrainedModel train_classifier(const TrainingSet& ts, const TrainingOptions& options) {
  if (ts.size() == 0) throw ValidationError("train: empty training set");
  Eigen::MatrixXd theta, x;
  normalized_matrices(ts, theta, x);
  RatioClassifier net(mix_seed(options.seed, 0x6e6574));
  auto training = train_ratio_classifier(net, theta, x, options);
  return TrainedModel{ClassifierRatioModel(std::move(net), ts.normalization), std::move(training)};
}

double pair_accuracy(const ClassifierRatioModel& model, const TrainingSet& ts, std::uint64_t seed) {
  if (ts.size() < 2) throw ValidationError("accuracy: need at least two tuples");
  RandomSource rng(seed);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    std::size_t j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(ts.size()) - 2));
    if (j >= i) ++j;
    if (model.probability(ts.x[i], ts.theta[i]) > 0.5) ++correct;
    if (model.probability(ts.x[i], ts.theta[j]) < 0.5) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(2 * ts.size());
}

std::array<double, 3> default_proposal_scales(const PriorBox& prior) noexcept {
  std::array<double, 3> s{};
  for (std::size_t d = 0; d < 3; ++d) s[d] = 0.05 * (prior.high[d] - prior.low[d]);
  return s;
}

MarkovChain mcmc_sample(const LogRatioModel& model, const Coefficients& x_true, const PriorBox& prior,
                        const McmcOptions& options) {
  prior.validate();
  if (options.samples < 1) throw ValidationError("mcmc: samples must be >= 1");
  const SimulatorSetting theta0 = options.theta0.value_or(prior.center());
  if (!prior.contains(theta0)) throw ValidationError("mcmc: theta0 lies outside the prior box");
  const auto scales = options.proposal_scales.value_or(default_proposal_scales(prior));
  for (double s : scales) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("mcmc: proposal scales must be positive");
  }

  RandomSource rng(options.seed);
  MarkovChain chain;
  chain.burn_in = options.burn_in;
  chain.states.reserve(options.samples);

  auto current = as_array(theta0);
  double current_log = model.log_odds(x_true, theta0);
  std::size_t accepted = 0;
  std::size_t outside = 0;
  const std::size_t total = options.burn_in + options.samples;
  for (std::size_t step = 0; step < total; ++step) {
    std::array<double, 3> proposal{};
    for (std::size_t d = 0; d < 3; ++d) proposal[d] = current[d] + scales[d] * rng.standard_normal();
    // One uniform per step keeps the random stream aligned whether or not
    // the proposal lands inside the box.
    const double u = rng.uniform();
    const bool counted = step >= options.burn_in;
    const SimulatorSetting candidate = as_setting(proposal);
    if (prior.contains(candidate)) {
      const double proposal_log = model.log_odds(x_true, candidate);
      const double log_alpha = proposal_log - current_log;
      if (log_alpha >= 0.0 || u < std::exp(log_alpha)) {
        current = proposal;
        current_log = proposal_log;
        if (counted) ++accepted;
      }
    } else if (counted) {
      ++outside;
    }
    if (counted) chain.states.push_back(as_setting(current));
  }
  chain.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(options.samples);
  chain.outside_rate = static_cast<double>(outside) / static_cast<double>(options.samples);
  return chain;
}

void save_chain(const std::filesystem::path& path, const MarkovChain& chain) {
  auto out = open_for_write(path);
  out << kChainHeader << '\n';
  for (const auto& s : chain.states) {
    out << format_double(s.overhead) << ',' << format_double(s.mu) << ',' << format_double(s.sigma) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

MarkovChain load_chain(const std::filesystem::path& path) {
  MarkovChain chain;
  read_csv(path, kChainHeader, 3, "chain", [&](const std::vector<double>& v) {
    chain.states.push_back({v[0], v[1], v[2]});
  });
  // A continuous random walk only repeats a state on rejection, so the share
  // of changed states recovers the acceptance rate.
  std::size_t moves = 0;
  for (std::size_t i = 1; i < chain.states.size(); ++i) moves += chain.states[i] == chain.states[i - 1] ? 0 : 1;
  if (chain.states.size() > 1) chain.acceptance_rate = static_cast<double>(moves) / static_cast<double>(chain.states.size() - 1);
  return chain;
}

PosteriorSummary posterior_mode(const MarkovChain& chain, const PriorBox& prior, int bins) {
  prior.validate();
  if (chain.states.empty()) throw ValidationError("posterior: chain is empty");
  if (bins < 2) throw ValidationError("posterior: bins must be >= 2");

  PosteriorSummary summary;
  summary.acceptance_rate = chain.acceptance_rate;
  std::array<double, 3> mode{}, median{};
  std::vector<double> column(chain.states.size());
  for (std::size_t d = 0; d < 3; ++d) {
    const double lo = prior.low[d];
    const double width = (prior.high[d] - lo) / bins;
    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    for (std::size_t i = 0; i < chain.states.size(); ++i) {
      const double v = as_array(chain.states[i])[d];
      column[i] = v;
      const auto b = std::clamp<long>(static_cast<long>(std::floor((v - lo) / width)), 0, bins - 1);
      ++counts[static_cast<std::size_t>(b)];
    }
    // max_element returns the first maximum, which breaks ties downward.
    const auto best = static_cast<double>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    mode[d] = lo + (best + 0.5) * width;

    std::sort(column.begin(), column.end());
    const std::size_t n = column.size();
    median[d] = n % 2 == 1 ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
  }
  summary.mode = as_setting(mode);
  summary.median = as_setting(median);
  return summary;
}

std::string summary_to_json(const PosteriorSummary& summary) {
  auto obj = [](const SimulatorSetting& s) {
    return nlohmann::json{{"overhead", s.overhead}, {"mu", s.mu}, {"sigma", s.sigma}};
  };
  nlohmann::json doc{{"mode", obj(summary.mode)},
                     {"median", obj(summary.median)},
                     {"acceptance_rate", summary.acceptance_rate}};
  return doc.dump(2);
}

}  // namespace dapsim
