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

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when any
// selected criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dapsim/analysis.hpp"
#include "dapsim/calibration.hpp"
#include "dapsim/classifier.hpp"
#include "dapsim/closure.hpp"
#include "dapsim/sim_engine.hpp"
#include "dapsim/transfer.hpp"
#include "fixtures.hpp"
#include "gradient_check.hpp"
#include "ols_oracle.hpp"

using namespace dapsim;
using fixtures::json;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

SimulationResult simulate(const json& topology, const std::vector<json>& jobs, std::uint64_t seed = 0) {
  return run(build_grid(topology.dump()), parse_workload(fixtures::replay(jobs).dump()), std::nullopt,
             RunOptions{seed, 1'000'000, false});
}

// ---------------------------------------------------------------------------

Verdict deterministic_transfer() {
  const auto r = simulate(fixtures::single_link_topology(100.0), {fixtures::remote_job(0, 1, {1000.0})});
  const bool ok = r.observations.size() == 1 && r.observations[0].T == 10.0;
  return {ok, fmt("T=%g (expected 10)", r.observations.empty() ? -1.0 : r.observations[0].T)};
}

Verdict fair_sharing() {
  bool ok = true;
  std::string detail;
  for (int k : {2, 4, 8}) {
    std::vector<json> jobs;
    for (int i = 0; i < k; ++i) jobs.push_back(fixtures::remote_job(0, 1, {1000.0}));
    const auto r = simulate(fixtures::single_link_topology(100.0), jobs);
    bool all = r.observations.size() == static_cast<std::size_t>(k);
    for (const auto& o : r.observations) all &= o.T == 10.0 * k;
    ok &= all;
    detail += fmt("k=%d %s; ", k, all ? fmt("all T=%d", 10 * k).c_str() : "mismatch");
  }
  const auto r = simulate(fixtures::single_link_topology(100.0), {fixtures::remote_job(0, 2, {1000.0, 1000.0})});
  bool threads = r.observations.size() == 2;
  for (const auto& o : r.observations) threads &= o.T == 20.0 && o.ConTh == 1000.0 && o.ConPr == 0.0;
  ok &= threads;
  detail += threads ? "2 threads: T=20, ConTh=1000 each" : "2 threads: mismatch";
  return {ok, detail};
}

Verdict overhead_scaling() {
  const auto r = simulate(fixtures::single_link_topology(100.0, 0.02), {fixtures::remote_job(0, 1, {1000.0})});
  const double expected = std::ceil(1000.0 / 98.0);
  const bool ok = r.observations.size() == 1 && r.observations[0].T == expected;
  return {ok, fmt("T=%g (expected ceil(1000/98)=%g)", r.observations.empty() ? -1.0 : r.observations[0].T, expected)};
}

Verdict unidirectional() {
  const json topo = json::parse(R"({
    "protocols": [{"name": "https", "overhead": 0.01}],
    "data_centers": [
      {"id": "A", "storage_elements": [{"id": "A_SE"}], "worker_nodes": [{"id": "A_WN", "slots": 64}]},
      {"id": "B", "storage_elements": [{"id": "B_SE"}], "worker_nodes": [{"id": "B_WN", "slots": 64}]}],
    "links": [
      {"src": "A_SE", "dst": "B_SE", "bandwidth_mbps": 2000, "bg_mu": 3, "bg_sigma": 2, "bg_update_period": 5},
      {"src": "B_SE", "dst": "A_SE", "bandwidth_mbps": 2000, "bg_mu": 3, "bg_sigma": 2, "bg_update_period": 5},
      {"src": "B_SE", "dst": "B_WN", "bandwidth_mbps": 8000, "bg_mu": 1, "bg_sigma": 1, "bg_update_period": 5},
      {"src": "A_SE", "dst": "A_WN", "bandwidth_mbps": 8000, "bg_mu": 1, "bg_sigma": 1, "bg_update_period": 5}]})");
  auto placement = [](long tick, std::vector<double> files, const char* src, const char* dst, const char* via) {
    json j = fixtures::remote_job(tick, 1, std::move(files), src, dst);
    j["profile"] = "data_placement";
    j["via"] = via;
    return j;
  };
  std::vector<json> forward;
  for (int i = 0; i < 6; ++i) forward.push_back(placement(i * 7, {300.0 + 90 * i, 500.0}, "A_SE", "B_WN", "B_SE"));
  auto on_link = [](const SimulationResult& r) {
    std::vector<Observation> v;
    for (const auto& o : r.observations) {
      if (o.link == "A_SE->B_SE") v.push_back(o);
    }
    return v;
  };
  const auto base = on_link(simulate(topo, forward, 99));

  RandomSource rng(5);
  bool ok = !base.empty();
  int variants = 0;
  for (; variants < 5; ++variants) {
    std::vector<json> mixed = forward;
    const int extra = static_cast<int>(rng.uniform_int(1, 10));
    for (int k = 0; k < extra; ++k) {
      std::vector<double> files;
      for (int f = 0, n = static_cast<int>(rng.uniform_int(1, 3)); f < n; ++f) files.push_back(rng.uniform(50, 2000));
      mixed.push_back(placement(rng.uniform_int(0, 60), files, "B_SE", "A_WN", "A_SE"));
    }
    const auto r = simulate(topo, mixed, 99);
    const bool reverse_busy =
        std::any_of(r.observations.begin(), r.observations.end(), [](const Observation& o) { return o.link == "B_SE->A_SE"; });
    ok &= reverse_busy && on_link(r) == base;
  }
  return {ok, fmt("%zu A->B observations bit-identical across %d random B->A workloads", base.size(), variants)};
}

Verdict ols_oracle() {
  RandomSource rng(2718);
  double worst = 0.0;
  bool exact = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const int p = 1 + trial % 3;
    const auto [X, y] = oracle::random_instance(rng, 50, p);
    const auto expected = oracle::normal_equations(X, y);
    const RegressionFit fit = fit_origin_ols(X, y);
    for (int j = 0; j < p; ++j) worst = std::max(worst, std::abs(fit.coefficients[j] - expected[j]) / std::abs(expected[j]));

    // Power-of-two rescaling of y and of one column, a column rotation and a
    // row reversal must reproduce the base fit bit for bit.
    const RegressionFit sy = fit_origin_ols(X, 2.0 * y);
    Eigen::MatrixXd Xs = X;
    Xs.col(p - 1) *= 4.0;
    const RegressionFit sx = fit_origin_ols(Xs, y);
    Eigen::MatrixXd Xr(50, p);
    for (int j = 0; j < p; ++j) Xr.col(j) = X.col((j + 1) % p);
    const RegressionFit rot = fit_origin_ols(Xr, y);
    const RegressionFit rev = fit_origin_ols(X.colwise().reverse(), y.reverse());
    for (int j = 0; j < p; ++j) {
      exact &= sy.coefficients[j] == 2.0 * fit.coefficients[j];
      exact &= sx.coefficients[j] == (j == p - 1 ? fit.coefficients[j] / 4.0 : fit.coefficients[j]);
      exact &= rot.coefficients[j] == fit.coefficients[(j + 1) % p];
      exact &= rev.coefficients[j] == fit.coefficients[j];
    }
  }
  return {worst < 1e-9 && exact,
          fmt("max relative deviation from normal equations %.2e (< 1e-9); scaling/permutation %s", worst,
              exact ? "exact" : "NOT exact")};
}

// Mean and variance of max(0, X), X ~ N(mu, sigma^2).
std::pair<double, double> rectified_normal_moments(double mu, double sigma) {
  const double z = mu / sigma;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const double mean = mu * cdf + sigma * pdf;
  const double second = (mu * mu + sigma * sigma) * cdf + mu * sigma * pdf;
  return {mean, second - mean * mean};
}

Verdict background_statistics() {
  constexpr Tick period = 10;
  constexpr int updates = 100'000;
  auto held_loads = [&](double mu, double sigma, bool* held_constant) {
    Grid g;
    g.add_protocol(Protocol{"https", 0.0});
    g.add_storage_element(g.add_data_center("A"), "SE", 1e18);
    g.add_worker_node(g.add_data_center("B"), "WN", 1000.0, 1, 1e18);
    g.add_link("SE", "WN", 1.0, mu, sigma, period);
    const auto replica = g.add_replica(g.add_file("f", 1e15), 0, 0);
    TransferEngine engine(g, 77);
    engine.start_transfer(StartRequest{{ProfileKind::remote_access, 0}, replica, HostRef{HostKind::worker_node, 0},
                                       std::nullopt, engine.new_process(), 1},
                          0);
    std::vector<double> values;
    values.reserve(updates);
    double last = -1.0;
    *held_constant = true;
    for (Tick now = 1; now <= updates * period; ++now) {
      engine.begin_tick(now);
      const double load = g.links()[0].background_load;
      if (now % period == 0) {
        values.push_back(load);
      } else if (now > 1) {
        *held_constant &= load == last;
      }
      last = load;
      engine.advance(now);
    }
    return values;
  };

  bool held = false;
  const auto values = held_loads(36.9, 14.4, &held);
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  const auto [expected, variance] = rectified_normal_moments(36.9, 14.4);
  const double se = std::sqrt(variance / values.size());
  const double z = (mean - expected) / se;

  bool held_flat = false;
  const auto flat = held_loads(36.9, 0.0, &held_flat);
  const bool flat_exact = std::all_of(flat.begin(), flat.end(), [](double v) { return v == 36.9; });

  const bool ok = values.size() == static_cast<std::size_t>(updates) && std::abs(z) < 4.0 && held && held_flat &&
                  flat_exact;
  return {ok, fmt("mean %.4f vs oracle %.4f (%.2f SE, limit 4); held between updates: %s; sigma=0 -> mu every tick: %s",
                  mean, expected, z, held ? "yes" : "no", flat_exact && held_flat ? "yes" : "no")};
}

Verdict gradient_check() {
  RandomSource rng(314);
  RatioClassifier clf(15);
  const PriorBox prior;
  double worst = 0.0;
  std::size_t checked = 0, kinks = 0;
  for (int batch = 0; batch < 10; ++batch) {
    // Training-shaped batch: joint columns alternate with theta-permuted ones.
    const int m = batch == 0 ? 4 : 32;
    std::vector<Eigen::VectorXd> theta, x;
    for (int k = 0; k < m; ++k) {
      theta.push_back(Eigen::Vector3d(rng.uniform(), rng.uniform(), rng.uniform()));
      x.push_back(Eigen::Vector3d(rng.uniform(), rng.uniform(), rng.uniform()));
    }
    Eigen::MatrixXd inputs(6, 2 * m);
    Eigen::RowVectorXd labels(2 * m);
    for (int k = 0; k < m; ++k) {
      inputs.col(2 * k) << theta[k], x[k];
      inputs.col(2 * k + 1) << theta[(k + 1) % m], x[k];
      labels(2 * k) = 1.0;
      labels(2 * k + 1) = 0.0;
    }
    std::vector<Eigen::Index> indices;
    if (batch > 0) {
      for (int i = 0; i < 750; ++i) {
        indices.push_back(rng.uniform_int(0, static_cast<std::int64_t>(clf.parameter_count()) - 1));
      }
    }
    const auto r = gradcheck::check(clf, inputs, labels, indices);
    worst = std::max(worst, r.worst);
    checked += r.checked;
    kinks += r.kinks;
  }
  return {worst < 1e-4, fmt("max relative error %.2e over %zu parameter probes in 10 batches (< 1e-4); "
                            "%zu probes straddled an activation kink and used a one-sided stencil",
                            worst, checked, kinks)};
}

double ks_uniform(std::vector<double> v, double lo, double hi) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = (v[i] - lo) / (hi - lo);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  return d;
}

Verdict mcmc_prior_recovery() {
  const PriorBox prior;
  McmcOptions opts;
  opts.burn_in = 2'000;
  opts.samples = 100'000;
  opts.seed = 8;
  std::array<double, 3> scales{};
  for (int d = 0; d < 3; ++d) scales[d] = 0.5 * (prior.high[d] - prior.low[d]);
  opts.proposal_scales = scales;
  const MarkovChain chain = mcmc_sample(ConstantRatioModel(0.5), {}, prior, opts);

  double worst = 0.0;
  std::string per_dim;
  for (int d = 0; d < 3; ++d) {
    std::vector<double> v;
    v.reserve(chain.states.size());
    for (const auto& s : chain.states) v.push_back(as_array(s)[d]);
    const double ks = ks_uniform(v, prior.low[d], prior.high[d]);
    worst = std::max(worst, ks);
    per_dim += fmt("%s %.4f ", kThetaNames[d], ks);
  }
  const bool inside = std::all_of(chain.states.begin(), chain.states.end(),
                                  [&](const SimulatorSetting& s) { return prior.contains(s); });
  // Under a flat ratio every inside proposal is accepted, so accepted plus
  // outside proposals account for all steps exactly when no outside
  // proposal was ever taken.
  const auto accepted = std::llround(chain.acceptance_rate * opts.samples);
  const auto outside = std::llround(chain.outside_rate * opts.samples);
  const bool rejected = inside && outside > 0 && accepted + outside == static_cast<long long>(opts.samples);
  return {worst < 0.02 && rejected,
          fmt("KS %s(< 0.02); %lld outside proposals, all rejected: %s", per_dim.c_str(), outside,
              rejected ? "yes" : "no")};
}

TrainingSet synthetic_set(std::size_t n, RandomSource& rng, bool x_equals_theta) {
  const PriorBox prior;
  TrainingSet ts;
  for (std::size_t i = 0; i < n; ++i) {
    const SimulatorSetting theta = prior.sample(rng);
    ts.theta.push_back(theta);
    ts.x.push_back(x_equals_theta ? as_array(theta) : as_array(prior.sample(rng)));
  }
  ts.normalization = Normalizer::fit(prior, ts.x);
  return ts;
}

Verdict chance_level() {
  RandomSource rng(61);
  TrainingOptions opts;  // 30 epochs, learning rate 1e-4, 64 tuples per batch
  opts.seed = 3;

  const TrainingSet independent = synthetic_set(10'000, rng, false);
  const TrainedModel flat = train_classifier(independent, opts);
  // Output spread around 1/2 is reported but not gated: its maximum over many
  // probes reflects finite-sample fitting noise and shrinks only slowly with n.
  constexpr int probes = 2000;
  double max_dev = 0.0;
  int within = 0;
  for (int i = 0; i < probes; ++i) {
    const PriorBox prior;
    const double d = flat.model.probability(as_array(prior.sample(rng)), prior.sample(rng));
    max_dev = std::max(max_dev, std::abs(d - 0.5));
    within += std::abs(d - 0.5) <= 0.05;
  }
  const double gap = std::abs(flat.training.final_loss - std::log(2.0));

  TrainingSet coupled = synthetic_set(10'000, rng, true);
  const TrainedModel sharp = train_classifier(coupled, opts);
  TrainingSet held_out = synthetic_set(5'000, rng, true);
  held_out.normalization = coupled.normalization;
  const double acc = pair_accuracy(sharp.model, held_out, 17);

  return {gap <= 0.05 && acc > 0.9,
          fmt("independent x: loss %.4f vs ln2 %.4f (|diff| %.4f <= 0.05), output within 0.5 +- 0.05 on %.1f%% of "
              "probes (max |d-0.5| %.3f, not gated); x=theta: held-out accuracy %.3f (> 0.9)",
              flat.training.final_loss, std::log(2.0), gap, 100.0 * within / probes, max_dev, acc)};
}

Verdict closure(bool full, int jobs) {
  ClosureOptions opts;
  opts.training_tuples = full ? 50'000 : 5'000;
  opts.jobs = jobs;
  opts.seed = 0;
  opts.on_stage = [](const std::string& s) { std::fprintf(stderr, "  closure: %s\n", s.c_str()); };
  const SimulationProblem problem = reference_problem(7);
  const ClosureReport rep = run_closure(problem, opts);
  std::fputs(closure_table(rep, 10).c_str(), stdout);

  // Reference floor: the same re-simulation protocol run at the hidden
  // setting itself. No calibration can beat this median on average.
  std::vector<double> floor_totals;
  for (int k = 0; k < opts.resimulations; ++k) {
    if (auto x = try_simulate_coefficients(problem, opts.theta_true, mix_seed(mix_seed(opts.seed, 99), k))) {
      floor_totals.push_back(score(rep.x_true, *x).total);
    }
  }
  std::sort(floor_totals.begin(), floor_totals.end());
  const double floor_median = floor_totals.empty() ? NAN : floor_totals[floor_totals.size() / 2];
  std::printf("  reference: median sum E when re-simulating at the hidden setting itself = %.1f%%\n",
              100 * floor_median);

  const auto& e = rep.median_error;
  if (!full) {
    const bool ok = rep.baseline_median_total >= 2.0 * rep.median_total;
    return {ok, fmt("smoke (5k tuples): median sum E %.1f%% vs random-setting baseline %.1f%% (needs >= 2x "
                    "improvement, got %.1fx); E(a)=%.1f%% E(b)=%.1f%% E(c)=%.1f%%",
                    100 * rep.median_total, 100 * rep.baseline_median_total,
                    rep.baseline_median_total / rep.median_total, 100 * e[0], 100 * e[1], 100 * e[2])};
  }
  const bool ok = rep.median_total <= 0.15 && e[0] <= 0.10 && e[1] <= 0.10 && e[2] <= 0.10;
  return {ok, fmt("full (50k tuples): median sum E %.1f%% (<= 15%%), E(a)=%.1f%% E(b)=%.1f%% E(c)=%.1f%% (each <= "
                  "10%%); mode (%.4g, %.4g, %.4g)",
                  100 * rep.median_total, 100 * e[0], 100 * e[1], 100 * e[2], rep.posterior.mode.overhead,
                  rep.posterior.mode.mu, rep.posterior.mode.sigma)};
}

Verdict regression_linearity() {
  RandomSource rng(21);
  std::vector<json> jobs;
  for (int i = 0; i < 60; ++i) {
    const int threads = static_cast<int>(rng.uniform_int(1, 4));
    std::vector<double> files;
    for (int f = 0; f < threads; ++f) files.push_back(std::round(rng.uniform(300.0, 3000.0)));
    jobs.push_back(fixtures::remote_job(rng.uniform_int(0, 3000), threads, files));
  }
  const auto r = simulate(fixtures::single_link_topology(200.0, 0.0, 2.0, 0.0), jobs);
  const RegressionFit fit = fit_eq1(r.observations);
  const auto& c = fit.coefficients;
  const bool ok = fit.r_squared > 0.99 && c[0] > 0 && c[1] > 0 && c[2] > 0;
  return {ok, fmt("%d observations: R^2 %.5f (> 0.99), a=%.4g b=%.4g c=%.4g (all > 0)", fit.n, fit.r_squared, c[0],
                  c[1], c[2])};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0: no runtime bound
  std::function<Verdict()> check;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dapsim acceptance suite"};
  std::string closure_mode = "smoke";
  std::vector<int> only;
  int jobs = 1;
  app.add_option("--closure", closure_mode, "Closure budget: smoke, full or skip")
      ->check(CLI::IsMember({"smoke", "full", "skip"}))
      ->capture_default_str();
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--jobs", jobs, "Worker threads for closure training-set generation")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const bool full = closure_mode == "full";
  std::vector<Criterion> criteria{
      {1, "deterministic transfer", 1.0, deterministic_transfer},
      {2, "fair sharing", 1.0, fair_sharing},
      {3, "overhead scaling", 0.0, overhead_scaling},
      {4, "uni-directionality", 0.0, unidirectional},
      {5, "OLS oracle", 10.0, ols_oracle},
      {6, "background-load statistics", 5.0, background_statistics},
      {7, "classifier gradient check", 30.0, gradient_check},
      {8, "MCMC prior recovery", 30.0, mcmc_prior_recovery},
      {9, "classifier chance level", 300.0, chance_level},
      {10, full ? "self-calibration closure (full)" : "self-calibration closure (smoke)", 0.0,
       [&] { return closure(full, jobs); }},
      {11, "regression linearity", 10.0, regression_linearity},
  };

  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    if (c.id == 10 && closure_mode == "skip") {
      std::printf("[SKIP] %2d %s\n", c.id, c.name);
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.budget_s <= 0.0 || secs < c.budget_s;
    const bool pass = v.pass && in_time;
    failures += !pass;
    std::string timing = fmt("%.2f s", secs);
    if (c.budget_s > 0.0) timing += fmt(" (limit %.0f s)", c.budget_s);
    std::printf("[%s] %2d %s: %s | %s\n", pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), timing.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
